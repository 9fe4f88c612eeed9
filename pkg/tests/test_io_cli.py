import json

import pytest
import yaml

from memimprint import io
from memimprint.cli import OUTPUT_ENV, main
from memimprint.synthdata import SynthConfig, generate

SCHEMA = {"questions": [{"id": "closeness", "kind": "ordinal", "levels": ["far", "near", "close"]},
                        {"id": "duration", "kind": "rational"}]}
SMALL_SYNTH = {"egos": 9, "semesters": 3, "seed": 5, "peripheral_contacts": 20}
MODELS = ["random", "frequency", {"kind": "hawkes", "tune": True}]


@pytest.fixture
def raw(tmp_path):
    (tmp_path / "events.csv").write_text(
        "timestamp,sender,receiver,channel,length\n"
        "100,a,b,text,12\n"
        "200,b,a,call,60\n"
        "300,a,a,text,5\n"
        "400,a,c,whatsapp,3\n"
        "500,c,a,call,30\n"
    )
    (tmp_path / "surveys.jsonl").write_text(
        json.dumps({"ego": "a", "survey_time": 1000, "semester": 1,
                    "alters": [{"alter": "b", "answers": {"closeness": 2}, "duration": 1.5},
                               {"alter": "c", "answers": {"closeness": 1}, "duration": 4.0}]}) + "\n"
    )
    (tmp_path / "schema.json").write_text(json.dumps(SCHEMA))
    return tmp_path


def ingest_args(d, out):
    return ["ingest", "--events", str(d / "events.csv"), "--surveys", str(d / "surveys.jsonl"),
            "--schema", str(d / "schema.json"), "--out", str(out)]


def test_ingest_filters(raw, capsys):
    assert main(ingest_args(raw, raw / "arch")) == 0
    rep = json.loads((raw / "arch" / "ingest_report.json").read_text())
    assert rep["events"] == 3 and rep["event_rows"] == 5
    assert rep["rejected"] == {"filtered channel": 1, "sender equals receiver": 1}
    assert {(r["line"], r["reason"]) for r in rep["rejected_rows"]} == {(4, "sender equals receiver"),
                                                                        (5, "filtered channel")}


def test_parse_error_exit_code(raw, capsys):
    with (raw / "events.csv").open("a") as fh:
        fh.write("oops,a,b,text,1\n")
    assert main(ingest_args(raw, raw / "arch")) == 3
    assert "events.csv:7" in capsys.readouterr().err


def test_missing_input_is_config_error(raw):
    (raw / "schema.json").unlink()
    assert main(ingest_args(raw, raw / "arch")) == 2


def test_archive_round_trip_bit_exact(tmp_path):
    ds, latent = generate(SynthConfig(egos=4, semesters=2, seed=1))
    io.save_dataset(ds, tmp_path / "one")
    back = io.load_dataset(tmp_path / "one")
    assert back == ds
    io.save_dataset(back, tmp_path / "two")
    for f in ("events.csv", "surveys.jsonl", "schema.json", "dataset.json"):
        assert (tmp_path / "one" / f).read_bytes() == (tmp_path / "two" / f).read_bytes()
    io.write_latent(latent, tmp_path / "latent.csv")
    assert io.read_latent(tmp_path / "latent.csv") == latent


def test_groundtruth_command(raw, capsys):
    main(ingest_args(raw, raw / "arch"))
    assert main(["groundtruth", str(raw / "arch"), "--out", str(raw / "gt.jsonl")]) == 0
    row = json.loads((raw / "gt.jsonl").read_text())
    assert row["ranked_alters"] == ["b", "c"] or row["ranked_alters"] == ["c", "b"]
    assert set(row["points"]) == {"b", "c"}


def test_rbo_command(tmp_path, capsys):
    (tmp_path / "a.txt").write_text("x\ny\nz\n")
    (tmp_path / "b.txt").write_text("x\ny\nz\n")
    (tmp_path / "c.txt").write_text("q\n")
    assert main(["rbo", str(tmp_path / "a.txt"), str(tmp_path / "b.txt")]) == 0
    assert capsys.readouterr().out.strip() == "1.0"
    assert main(["rbo", str(tmp_path / "a.txt"), str(tmp_path / "c.txt"), "--variant", "truncated"]) == 0
    assert capsys.readouterr().out.strip() == "0.0"
    assert main(["rbo", str(tmp_path / "a.txt"), str(tmp_path / "missing.txt")]) == 2
    assert main(["rbo", str(tmp_path / "a.txt"), str(tmp_path / "b.txt"), "--p", "1.5"]) == 2
    (tmp_path / "d.txt").write_text("x\nx\n")
    assert main(["rbo", str(tmp_path / "a.txt"), str(tmp_path / "d.txt")]) == 3


def write_cfg(path, **cfg):
    path.write_text(yaml.safe_dump(cfg))
    return path


def test_config_errors(tmp_path):
    assert main(["evaluate", str(tmp_path / "nope.yaml")]) == 2
    assert main(["evaluate", str(write_cfg(tmp_path / "a.yaml", models=["random"]))]) == 2
    bad_model = write_cfg(tmp_path / "b.yaml", dataset={"synth": SMALL_SYNTH}, models=["oracle"])
    assert main(["evaluate", str(bad_model)]) == 2
    bad_synth = write_cfg(tmp_path / "c.yaml", dataset={"synth": {"egoz": 3}})
    assert main(["evaluate", str(bad_synth)]) == 2
    (tmp_path / "d.yaml").write_text("dataset: [unclosed\n")
    assert main(["evaluate", str(tmp_path / "d.yaml")]) == 2


def test_synth_command(tmp_path, capsys):
    out = tmp_path / "syn"
    assert main(["synth", "--set", "egos=3", "--set", "semesters=2", "--out", str(out)]) == 0
    ds = io.load_dataset(out)
    assert len(ds.egos) == 3 and ds.semesters == (1, 2)
    assert (out / "latent.csv").exists()
    assert main(["synth", "--set", "bogus=1", "--out", str(out)]) == 2


def test_env_overrides_output_dir(tmp_path, monkeypatch, capsys):
    cfg = write_cfg(tmp_path / "e.yaml", dataset={"synth": SMALL_SYNTH}, models=["random"],
                    output_dir=str(tmp_path / "configured"))
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "from_env"))
    assert main(["evaluate", str(cfg)]) == 0
    assert (tmp_path / "from_env" / "summary.json").exists()
    assert not (tmp_path / "configured").exists()


def test_evaluate_and_report(tmp_path, capsys):
    cfg = write_cfg(tmp_path / "e.yaml", dataset={"synth": SMALL_SYNTH}, models=MODELS, tuner={"budget": 4},
                    output_dir=str(tmp_path / "within"))
    assert main(["evaluate", str(cfg)]) == 0
    first = (tmp_path / "within" / "records.csv").read_text()
    assert first.startswith("# config_hash=")
    summary = json.loads((tmp_path / "within" / "summary.json").read_text())
    assert [m["model"] for m in summary["models"]] == sorted(
        [m["model"] for m in summary["models"]], key=lambda m: next(r["score"] for r in summary["models"]
                                                                    if r["model"] == m))
    trials = [json.loads(x) for x in (tmp_path / "within" / "trials.jsonl").read_text().splitlines()]
    assert len(trials) == 3 * 2 * 4 and all("config_hash" in t for t in trials)

    a, b = dict(SMALL_SYNTH, id_prefix="A", seed=1), dict(SMALL_SYNTH, id_prefix="B", seed=2)
    cross = write_cfg(tmp_path / "x.yaml", train={"synth": dict(a, name="pop-A")},
                      test={"synth": dict(b, name="pop-B")}, models=MODELS, tuner={"budget": 4},
                      output_dir=str(tmp_path / "cross"))
    back = write_cfg(tmp_path / "y.yaml", train={"synth": dict(b, name="pop-B")},
                     test={"synth": dict(a, name="pop-A")}, models=MODELS, tuner={"budget": 4},
                     output_dir=str(tmp_path / "cross_back"))
    assert main(["crosseval", str(cross)]) == 0
    assert main(["crosseval", str(back)]) == 0
    capsys.readouterr()

    out = tmp_path / "rep"
    assert main(["report", str(tmp_path / "cross"), str(tmp_path / "cross_back"), "--out", str(out)]) == 0
    text = capsys.readouterr().out.splitlines()
    assert text[0].startswith("Training dataset -> testing dataset")
    assert text[1].split() == ["Model", "pop-A", "->", "pop-B", "pop-B", "->", "pop-A"]
    assert {line.split()[0] for line in text[3:]} == {"Random", "Frequency", "Hawkes"}
    assert all(line.count("(") == 2 for line in text[3:])
    assert (out / "table.csv").exists() and (out / "semester_scores.csv").exists()
    assert (out / "rbo_by_semester.png").stat().st_size > 0 and (out / "final_scores.png").stat().st_size > 0

    # same report directory twice, written by a run with another RBO persistence
    other = write_cfg(tmp_path / "p.yaml", dataset={"synth": SMALL_SYNTH}, models=["random"], rbo={"p": 0.9},
                      output_dir=str(tmp_path / "other_p"))
    assert main(["evaluate", str(other)]) == 0
    assert main(["report", str(tmp_path / "within"), str(tmp_path / "other_p"), "--out", str(out),
                 "--no-figures"]) == 2
    assert "different RBO settings" in capsys.readouterr().err


def test_crosseval_rejects_shared_egos(tmp_path):
    cfg = write_cfg(tmp_path / "s.yaml", train={"synth": SMALL_SYNTH}, test={"synth": SMALL_SYNTH},
                    models=["random"], output_dir=str(tmp_path / "o"))
    assert main(["crosseval", str(cfg)]) == 4
