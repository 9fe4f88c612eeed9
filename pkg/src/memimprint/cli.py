"""Command line interface.

Subcommands: ingest, groundtruth, evaluate, crosseval, synth, rbo, report.
Exit codes: 0 success, 2 configuration error, 3 parse error, 4 protocol
violation. ``MEMIMPRINT_OUTPUT_DIR`` overrides the configured output directory.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
from dataclasses import asdict
from pathlib import Path

import yaml

from . import io
from .domain import Dataset
from .errors import ConfigError, MemImprintError, ParseError
from .evaluation import TunerConfig, make_cross_subgroups, make_fold_plan, run_cross_eval, run_protocol
from .groundtruth import build_ground_truth
from .metrics import RboConfig, rbo
from .models import MODEL_KINDS, ModelSpec
from .synthdata import SynthConfig, generate

log = logging.getLogger("memimprint")

OUTPUT_ENV = "MEMIMPRINT_OUTPUT_DIR"
DEFAULT_MODELS = ["random", "recency", "frequency", {"kind": "mim", "tune": True}, {"kind": "hawkes", "tune": True}]


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _announce(command: str, resolved: dict):
    print(f"[{command}] config {json.dumps(resolved, sort_keys=True, default=str)}", file=sys.stderr)


def load_config(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    try:
        obj = yaml.safe_load(path.read_text()) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected a key-value mapping")
    obj["_base"] = str(path.parent)
    return obj


def _path(cfg: dict, value) -> Path:
    p = Path(value)
    if not p.is_absolute():
        p = Path(cfg.get("_base", ".")) / p
    if not p.exists():
        raise ConfigError(f"referenced path {p} does not exist")
    return p


def _output_dir(cfg: dict, default: str) -> Path:
    return Path(os.environ.get(OUTPUT_ENV) or cfg.get("output_dir") or default)


def parse_models(entries, random_seed: int) -> list[ModelSpec]:
    out = []
    for e in entries:
        if isinstance(e, str):
            e = {"kind": e}
        if not isinstance(e, dict) or "kind" not in e:
            raise ConfigError(f"bad model entry {e!r}")
        kind = e["kind"].lower()
        if kind not in MODEL_KINDS:
            raise ConfigError(f"unknown model {kind!r}")
        tune = bool(e.get("tune", False))
        params = dict(e.get("params", {}))
        if kind in ("mim", "hawkes") and not tune and not params:
            raise ConfigError(f"model {kind!r} needs either tune: true or fixed params")
        spec = ModelSpec(kind, params, tune, int(e.get("seed", random_seed)), float(e.get("s_base", 0.0)))
        if params:
            try:
                spec.validate()
            except MemImprintError as exc:
                raise ConfigError(str(exc)) from None
        out.append(spec)
    return out


def _dataset_from(cfg: dict, value, name_hint: str) -> Dataset:
    if isinstance(value, dict) and "synth" in value:
        return generate(SynthConfig.from_dict(value["synth"]))[0]
    if isinstance(value, str):
        return io.load_dataset(_path(cfg, value))
    raise ConfigError(f"{name_hint}: expected an archive path or a synth: block")


def _common(cfg: dict) -> dict:
    rbo_cfg = cfg.get("rbo", {}) or {}
    tuner = cfg.get("tuner", {}) or {}
    return {
        "rbo": {"p": float(rbo_cfg.get("p", 0.98)), "variant": rbo_cfg.get("variant", "extrapolated")},
        "tuner": {"budget": int(tuner.get("budget", 100)), "seed": int(tuner.get("seed", 0))},
        "random_seed": int(cfg.get("random_seed", 0)),
        "models": cfg.get("models", DEFAULT_MODELS),
    }


def cmd_ingest(args) -> int:
    out = Path(os.environ.get(OUTPUT_ENV) or args.out)
    resolved = {"events": args.events, "surveys": args.surveys, "schema": args.schema, "name": args.name,
                "out": str(out)}
    _announce("ingest", resolved)
    for p in (args.events, args.surveys, args.schema):
        if not Path(p).exists():
            raise ConfigError(f"input {p} does not exist")
    ds, report = io.ingest(args.events, args.surveys, args.schema, args.name)
    io.save_dataset(ds, out)
    summary = {**report.to_dict(), "events": len(ds.events), "surveys": len(ds.surveys), "egos": len(ds.egos),
               "config_hash": config_hash(resolved)}
    (out / "ingest_report.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(f"events: {report.event_rows} rows, {len(ds.events)} kept, "
          f"{sum(report.rejected.values())} rejected {dict(report.rejected)}")
    print(f"surveys: {len(ds.surveys)} responses from {len(ds.egos)} egos")
    return 0


def cmd_groundtruth(args) -> int:
    _announce("groundtruth", {"dataset": args.dataset, "out": args.out})
    ds = io.load_dataset(args.dataset)
    gt = build_ground_truth(ds)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w") as fh:
        for (ego, t), g in sorted(gt.items()):
            fh.write(json.dumps({"ego": ego, "survey_time": t, "semester": g.semester_index,
                                 "ranked_alters": list(g.ranked_alters),
                                 "points": {a: g.points[a] for a in g.ranked_alters}}) + "\n")
    print(f"{len(gt)} rankings written to {out}")
    return 0


def cmd_synth(args) -> int:
    raw = {}
    if args.config:
        raw = load_config(args.config)
        raw.pop("_base", None)
        raw = raw.get("synth", raw)
    for kv in args.set or []:
        k, _, v = kv.partition("=")
        raw[k] = yaml.safe_load(v)
    cfg = SynthConfig.from_dict({k: v for k, v in raw.items() if k != "output_dir"})
    out = Path(os.environ.get(OUTPUT_ENV) or args.out or raw.get("output_dir") or "synth")
    resolved = cfg.to_dict()
    _announce("synth", {**resolved, "out": str(out)})
    ds, latent = generate(cfg)
    io.save_dataset(ds, out)
    io.write_latent(latent, out / "latent.csv")
    (out / "synth_config.json").write_text(
        json.dumps({"config_hash": config_hash(resolved), **resolved}, indent=2, sort_keys=True) + "\n")
    print(f"{ds.name}: {len(ds.egos)} egos, {len(ds.surveys)} surveys, {len(ds.events)} events -> {out}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = load_config(args.config)
    common = _common(cfg)
    jobs = int(args.jobs if args.jobs is not None else cfg.get("jobs", 1))
    if "dataset" not in cfg:
        raise ConfigError("evaluate config needs a dataset entry")
    resolved = {"dataset": cfg["dataset"], "fold_seed": int(cfg.get("fold_seed", 0)), **common}
    out = _output_dir(cfg, "eval_out")
    _announce("evaluate", {**resolved, "jobs": jobs, "output_dir": str(out)})
    ds = _dataset_from(cfg, cfg["dataset"], "dataset")
    models = parse_models(common["models"], common["random_seed"])
    plan = make_fold_plan(ds, resolved["fold_seed"])
    report = run_protocol(ds, plan, models, TunerConfig(**common["tuner"]), RboConfig(**common["rbo"]), jobs=jobs)
    io.write_report(report, out, config_hash(resolved), resolved)
    _print_summary(report)
    return 0


def cmd_crosseval(args) -> int:
    cfg = load_config(args.config)
    common = _common(cfg)
    for key in ("train", "test"):
        if key not in cfg:
            raise ConfigError(f"crosseval config needs a {key} entry")
    sub = cfg.get("subgroups")
    resolved = {"train": cfg["train"], "test": cfg["test"], "subgroups": sub, **common}
    out = _output_dir(cfg, "crosseval_out")
    _announce("crosseval", {**resolved, "output_dir": str(out)})
    train = _dataset_from(cfg, cfg["train"], "train")
    test = _dataset_from(cfg, cfg["test"], "test")
    train_sets, test_sets = train, test
    if sub:
        side = sub.get("split", "train")
        if side not in ("train", "test"):
            raise ConfigError("subgroups.split must be 'train' or 'test'")
        big = train if side == "train" else test
        groups = make_cross_subgroups(big, int(sub["target_egos"]), tuple(sub["halves"]), int(sub.get("seed", 0)))
        if side == "train":
            train_sets = groups
        else:
            test_sets = groups
    models = parse_models(common["models"], common["random_seed"])
    report = run_cross_eval(train_sets, test_sets, models, TunerConfig(**common["tuner"]), RboConfig(**common["rbo"]))
    io.write_report(report, out, config_hash(resolved), resolved)
    _print_summary(report)
    return 0


def _read_ids(path) -> list[str]:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"{p} does not exist")
    return [line.strip() for line in p.read_text().splitlines() if line.strip()]


def cmd_rbo(args) -> int:
    cfg = RboConfig(args.p, args.variant)
    _announce("rbo", {"a": args.list_a, "b": args.list_b, **asdict(cfg)})
    a, b = _read_ids(args.list_a), _read_ids(args.list_b)
    try:
        value = rbo(a, b, cfg)
    except ValueError as exc:
        raise ParseError(str(exc)) from None
    print(repr(value))
    return 0


def _table(reports) -> list[list[str]]:
    models = []
    for r in reports:
        for m in r.models:
            if m not in models:
                models.append(m)
    models.sort(key=lambda m: reports[0].final_score(m) if m in reports[0].models else 0.0)
    rows = [["Model"] + [r.label for r in reports]]
    for m in models:
        cells = [f"{r.final_score(m):.5f} ({r.survey_variance(m):.4f})" if m in r.models else "-" for r in reports]
        rows.append([m] + cells)
    return rows


def cmd_report(args) -> int:
    from . import figures

    out = Path(os.environ.get(OUTPUT_ENV) or args.out)
    _announce("report", {"reports": args.reports, "out": str(out), "figures": not args.no_figures})
    loaded = [io.read_report(d) for d in args.reports]
    reports = [r for r, _ in loaded]
    configs = {json.dumps(asdict(r.rbo_config), sort_keys=True) for r in reports}
    if len(configs) > 1:
        raise ConfigError(f"refusing to merge reports with different RBO settings: {sorted(configs)}")
    rows = _table(reports)
    out.mkdir(parents=True, exist_ok=True)
    hashes = ",".join(s["config_hash"] for _, s in loaded)
    with (out / "table.csv").open("w", newline="") as fh:
        fh.write(f"# config_hash={hashes}\n")
        csv.writer(fh, lineterminator="\n").writerows(rows)
    with (out / "semester_scores.csv").open("w", newline="") as fh:
        fh.write(f"# config_hash={hashes}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["report", "model", "semester", "rbo"])
        for r in reports:
            for m in r.models:
                for s, v in r.semester_scores(m).items():
                    w.writerow([r.label, m, s, repr(v)])
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    header = "Average RBO scores (pooled per-survey variance)"
    if all(r.kind == "cross" for r in reports):
        header = "Training dataset -> testing dataset: " + header
    print(header)
    for k, row in enumerate(rows):
        print("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
        if k == 0:
            print("  ".join("-" * w for w in widths))
    if not args.no_figures:
        figures.semester_curves(reports, out / "rbo_by_semester.png")
        figures.score_bars(reports, out / "final_scores.png")
    return 0


def _print_summary(report):
    print(f"{report.label}: final weighted RBO per model")
    for row in report.summary()["models"]:
        print(f"  {row['model']:<10} {row['score']:.5f}  (survey var {row['survey_variance']:.4f}, "
              f"group var {row['group_variance']:.6f})")
    if report.sentinel.get("accesses"):
        print(f"  leakage sentinel: {report.sentinel['accesses']} training accesses audited, "
              f"{report.sentinel['violations']} violations")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="memimprint", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate and archive CDR events and surveys")
    p.add_argument("--events", required=True)
    p.add_argument("--surveys", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--name", default="dataset")
    p.add_argument("--out", required=True, help="archive directory")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("groundtruth", help="tournament rankings for every survey")
    p.add_argument("dataset", help="dataset archive directory")
    p.add_argument("--out", required=True, help="output JSON-lines file")
    p.set_defaults(func=cmd_groundtruth)

    for name, func, helptext in (
        ("evaluate", cmd_evaluate, "staggered three-fold evaluation"),
        ("crosseval", cmd_crosseval, "train on one population, test on another"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("config", help="YAML run configuration")
        p.add_argument("--jobs", type=int, default=None, help="worker processes (output is identical for any N)")
        p.set_defaults(func=func)

    p = sub.add_parser("synth", help="generate a synthetic population")
    p.add_argument("config", nargs="?", help="YAML file of generator options")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one generator option")
    p.add_argument("--out", help="archive directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("rbo", help="RBO between two id lists (one id per line)")
    p.add_argument("list_a")
    p.add_argument("list_b")
    p.add_argument("--p", type=float, default=0.98)
    p.add_argument("--variant", choices=("extrapolated", "truncated"), default="extrapolated")
    p.set_defaults(func=cmd_rbo)

    p = sub.add_parser("report", help="tables and figures from evaluation reports")
    p.add_argument("reports", nargs="+", help="report directories")
    p.add_argument("--out", default="report_out")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except MemImprintError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ParseError.exit_code


if __name__ == "__main__":
    sys.exit(main())
