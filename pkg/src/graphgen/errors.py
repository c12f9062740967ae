"""Exception hierarchy shared across the package."""


class GraphGenError(Exception):
    """Base class for all package errors."""


class InvalidGraph(GraphGenError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid graph: " + "; ".join(self.violations))


class InvalidCode(GraphGenError):
    def __init__(self, index, reason):
        self.index = index
        self.reason = reason
        super().__init__(f"invalid DFS code at tuple {index}: {reason}")


class CapExceeded(GraphGenError):
    pass


class FrontierCapExceeded(CapExceeded):
    pass


class SearchBudgetExceeded(GraphGenError):
    pass


class EmptyDataset(GraphGenError):
    pass


class TooFewGraphs(GraphGenError):
    pass


class OutOfVocab(GraphGenError):
    pass


class ShapeMismatch(GraphGenError):
    pass


class ResampleCapExceeded(GraphGenError):
    pass


class KindMismatch(GraphGenError):
    pass


class CheckpointError(GraphGenError):
    pass


class VersionMismatch(CheckpointError):
    pass


class ChecksumMismatch(CheckpointError):
    pass


class ParseError(GraphGenError):
    def __init__(self, lineno, reason):
        self.lineno = lineno
        self.reason = reason
        super().__init__(f"line {lineno}: {reason}")
