"""Exception types raised across the package."""


class BridgeConsensusError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(BridgeConsensusError, ValueError):
    pass


class MetropolisOnDirected(BridgeConsensusError, ValueError):
    pass


class NoParticipants(BridgeConsensusError, ValueError):
    pass


class MissingValue(BridgeConsensusError, ValueError):
    pass


class NotPositiveDefinite(BridgeConsensusError, ValueError):
    pass


class ParseError(BridgeConsensusError, ValueError):
    """Malformed scenario input. ``field`` names the offending entry, ``line`` is 1-based when known."""

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class ValidationError(BridgeConsensusError, ValueError):
    """A scenario failed ``validate``; ``findings`` holds every finding, errors and warnings."""

    def __init__(self, findings):
        self.findings = list(findings)
        errors = [f for f in self.findings if f.level == "error"]
        super().__init__("; ".join(f"{f.code}: {f.message}" for f in errors))


class IoFailure(BridgeConsensusError, OSError):
    pass
