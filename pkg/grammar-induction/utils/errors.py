from typing import Optional


class GrammarInductionError(Exception):
    """base error; exit_code is what the cli returns when this escapes a command"""

    exit_code: int = 1


# usage errors (exit 1)

class ConfigError(GrammarInductionError):
    exit_code = 1


class StageOrderError(GrammarInductionError):
    exit_code = 1


class LockedOutputError(GrammarInductionError):
    exit_code = 1


# data errors (exit 2)

class DatasetError(GrammarInductionError):
    exit_code = 2

    def __init__(self, message: str, row: Optional[int] = None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class TypeParseError(GrammarInductionError):
    exit_code = 2

    def __init__(self, message: str, text: str, position: int):
        self.text = text
        self.position = position
        super().__init__(f"{message} at position {position} in {text!r}")


class ThresholdError(GrammarInductionError):
    exit_code = 2


class ExportError(GrammarInductionError):
    exit_code = 2


class UntrainedModelError(GrammarInductionError):
    exit_code = 2


# acceptance failures (exit 3)

class AcceptanceError(GrammarInductionError):
    exit_code = 3


# library contract errors

class ShapeError(GrammarInductionError, ValueError):
    def __init__(self, message: str, *shapes):
        shown = " vs ".join(str(tuple(s)) for s in shapes)
        super().__init__(f"{message}: {shown}" if shapes else message)


class ContractError(GrammarInductionError, RuntimeError):
    pass


class EmptyCandidatesError(GrammarInductionError, ValueError):
    pass


class EmptySentenceError(GrammarInductionError, ValueError):
    exit_code = 2


class SpanError(GrammarInductionError, IndexError):
    pass


class UnsupportedDepthError(GrammarInductionError, ValueError):
    pass


class EnumerationLimitError(GrammarInductionError, ValueError):
    pass
