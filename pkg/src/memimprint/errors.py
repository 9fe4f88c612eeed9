"""Exception hierarchy. The CLI maps each family onto a process exit code."""


class MemImprintError(Exception):
    exit_code = 1


class ConfigError(MemImprintError, ValueError):
    exit_code = 2


class SchemaError(ConfigError):
    """Survey answers that do not fit the declared question schema."""


class ParseError(MemImprintError, ValueError):
    exit_code = 3

    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + message)
        self.path = path
        self.line = line


class ProtocolViolation(MemImprintError):
    """Training touched data it must never see (future events, test surveys)."""

    exit_code = 4


class UnknownParticipant(MemImprintError, KeyError):
    exit_code = 2

    def __str__(self):
        return f"unknown participant {self.args[0]!r}"


class OrderingError(MemImprintError, ValueError):
    """An event or evaluation time precedes state that was already processed."""


class InvalidParams(MemImprintError, ValueError):
    exit_code = 2
