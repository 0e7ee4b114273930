"""Exception types shared across the engine."""


class OMQError(Exception):
    """Base class for all engine errors."""


class ParseError(OMQError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        loc = f"line {line}, column {column}: " if line else ""
        super().__init__(loc + message)


class Unsatisfiable(OMQError):
    """The database has no model together with the ontology."""


class NotEligible(OMQError):
    """The query does not meet the structural condition of the requested algorithm."""


class NotApplicable(OMQError):
    """A reduction generator cannot be applied to the given query."""


class MalformedWitness(OMQError):
    pass


class DepthCapExceeded(OMQError):
    pass


class InstanceTooLarge(OMQError):
    pass
