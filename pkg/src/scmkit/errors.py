"""Exception hierarchy shared by all scmkit modules."""


class ScmError(Exception):
    """Base class for all model, graph and analysis errors."""


class UnknownNameError(ScmError):
    """A node, variable or noise name that is not declared in the object at hand."""


class DomainMismatchError(ScmError):
    """Two models are compared on variables whose domains or signatures differ."""


class TabulationError(ScmError):
    """An equation produced a value outside its codomain on a relevant assignment."""


class SolvabilityError(ScmError):
    """Base class for solvability failures; carries the offending subset and a witness."""

    def __init__(self, subset, witness=None, message=None):
        self.subset = tuple(sorted(subset)) if subset is not None else None
        self.witness = witness
        if message is None:
            message = f"{type(self).__name__}({', '.join(self.subset or ())})"
            if witness is not None:
                message += f" witness={witness!r}"
        super().__init__(message)


class NotSolvable(SolvabilityError):
    """Some fiber of the structural equations is empty on a positive-probability input."""


class NotUniquelySolvable(SolvabilityError):
    """Some fiber of the structural equations is empty or has several elements."""


class EvidenceError(ScmError):
    """Conditioning on evidence with zero probability (or a singular observed block)."""


class UnsupportedModelError(ScmError):
    """A combination of model family and operation the library deliberately rejects."""


class ParseError(ScmError):
    """Syntax or resolution error in the model specification language."""

    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        if line is not None:
            message = f"{line}:{col}: {message}"
        super().__init__(message)
