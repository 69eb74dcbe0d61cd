"""Exception hierarchy shared by all flowwalks modules."""


class FlowWalksError(Exception):
    """Base class for every error raised by this package."""


class GraphError(FlowWalksError, ValueError):
    pass


class DuplicateEdge(GraphError):
    pass


class SourceHasInEdge(GraphError):
    pass


class SinkHasOutEdge(GraphError):
    pass


class NegativeWeight(GraphError):
    pass


class EmptyStartSet(GraphError):
    pass


class EmptyEndSet(GraphError):
    pass


class EdgeNotInGraph(GraphError, KeyError):
    pass


class GraphFormatError(GraphError):
    """Malformed graph/subset/E' text file; message carries the line number."""

    def __init__(self, message, lineno=None, path=None):
        self.lineno = lineno
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if lineno is not None:
            where += f"{lineno}:"
        super().__init__(f"{where} {message}" if where else message)


class VertexNotInTree(FlowWalksError, KeyError):
    pass


class UnreachableCVertex(FlowWalksError, ValueError):
    pass


class EmptyC(FlowWalksError, ValueError):
    pass


class EmptyEdgeSet(FlowWalksError, ValueError):
    pass


class InvalidBound(FlowWalksError, ValueError):
    pass


class NegativeBound(InvalidBound):
    pass


class EmptySubset(FlowWalksError, ValueError):
    pass


class AntichainLargerThanK(FlowWalksError, ValueError):
    pass


class ConflictingFix(FlowWalksError, ValueError):
    pass


class NotAWalkMultiset(FlowWalksError, ValueError):
    pass


class InfeasibleCover(FlowWalksError):
    pass


class SolverError(FlowWalksError):
    pass


class BackendUnavailable(SolverError):
    pass


class MalformedModel(SolverError, ValueError):
    pass


class WindowTooShort(FlowWalksError, ValueError):
    pass
