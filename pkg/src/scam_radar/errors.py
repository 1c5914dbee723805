"""Exception hierarchy shared by all pipeline stages."""


class ScamRadarError(Exception):
    """Base class for every error raised by this package."""


class ParseError(ScamRadarError, ValueError):
    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)


class AmountError(ScamRadarError, ArithmeticError):
    """Token amount arithmetic left its exact range or mixed decimals."""


# amm engine
class AmmError(ScamRadarError):
    pass


class InvalidLiquidity(AmmError):
    pass


class RatioMismatch(AmmError):
    pass


class InsufficientLp(AmmError):
    pass


class NoLiquidity(AmmError):
    pass


class InvalidInput(AmmError):
    pass


class DustSwap(AmmError):
    pass


# ingest
class IngestError(ScamRadarError):
    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        if where:
            message = f"{', '.join(where)}: {message}"
        super().__init__(message)


class DuplicateRecord(IngestError):
    pass


class NotFound(ScamRadarError, KeyError):
    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "not found"


class ConfigError(ScamRadarError):
    pass


# classifier
class DegenerateDataset(ScamRadarError):
    pass


class InsufficientData(ScamRadarError):
    pass


# association / impact
class PreconditionError(ScamRadarError):
    pass


class IncompleteProfile(ScamRadarError):
    pass


class MissingPrice(ScamRadarError):
    pass
