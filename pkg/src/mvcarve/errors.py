"""Exception types raised across the package.

Two families exist: :class:`ValidationError` for inputs that break a
documented precondition, and :class:`ReconError` for everything that goes
wrong while computing on otherwise valid inputs. The CLI maps the first to
exit code 2 and the second to exit code 1.
"""


class ReconError(Exception):
    """Base class for runtime failures."""


class ValidationError(ReconError, ValueError):
    """Input violates a documented precondition."""


# core geometry
class DegenerateDepth(ReconError):
    pass


# raster
class EmptyRender(ReconError):
    pass


class EmptySilhouette(ReconError):
    pass


class NoContourPoints(ReconError):
    pass


class NoSeeds(ValidationError):
    pass


class MeshLoadError(ReconError):
    pass


# losses
class EmptyContourSet(ValidationError):
    pass


# pose graph
class IncompleteGraph(ValidationError):
    def __init__(self, missing):
        self.missing = sorted(missing)
        shown = ", ".join(f"({i}, {j})" for i, j in self.missing[:10])
        more = "" if len(self.missing) <= 10 else f" and {len(self.missing) - 10} more"
        super().__init__(f"graph is missing edges: {shown}{more}")


class DuplicateEdge(ValidationError):
    pass


class IndexOutOfRange(ValidationError, IndexError):
    pass


class EmptyInput(ValidationError):
    pass


class LengthMismatch(ValidationError):
    pass


# carving
class SizeMismatch(ValidationError):
    pass


class InvalidWeight(ValidationError):
    pass


class InvalidThreshold(ValidationError):
    pass


# evaluation
class EmptyMesh(ValidationError):
    pass


class SpecMismatch(ValidationError):
    pass


class EmptyGrid(ValidationError):
    pass


class EmptyCloud(ValidationError):
    pass


class DegenerateCloud(ReconError):
    pass


# pipeline
class ConfigError(ValidationError):
    pass


class StageError(ReconError):
    """A pipeline stage failed; ``stage`` names it and ``__cause__`` holds the original error."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {type(cause).__name__}: {cause}")
