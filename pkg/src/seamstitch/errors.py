"""Exception hierarchy shared by all pipeline stages.

Every error carries a stable ``code`` (its class name) so the CLI can emit
machine-readable ``STAGE=... CODE=...`` diagnostics.
"""


class StitchError(Exception):
    """Base class for all library errors."""

    @property
    def code(self) -> str:
        return type(self).__name__


# geometry
class TooFewMatches(StitchError):
    pass


class DegenerateConfiguration(StitchError):
    pass


class SingularProjection(StitchError):
    pass


class SingularTransform(StitchError):
    pass


class EmptyMask(StitchError):
    pass


# matching / io
class ImageTooSmall(StitchError):
    pass


class NoMatchesFound(StitchError):
    pass


class ParseError(StitchError):
    pass


class BoundsError(StitchError):
    def __init__(self, index: int, message: str = ""):
        self.index = index
        super().__init__(message or f"match {index} out of bounds")


# local warp / field
class NoOverlap(StitchError):
    pass


class NumericalFailure(StitchError):
    pass


class LatticeTooSmall(StitchError):
    pass


class EmptyOverlap(StitchError):
    pass


class DimensionMismatch(StitchError):
    pass


# render / compose
class OffsetOutOfFrame(StitchError):
    pass


class CoverageHole(StitchError):
    pass


class AllSegmentsInvalid(StitchError):
    pass


class NoAnchors(StitchError):
    pass


# seam zone / chain
class NoPairs(StitchError):
    pass


class NoClusters(StitchError):
    pass


class ChainTooShort(StitchError):
    pass


# metrics
class MaskTooSmall(StitchError):
    pass


# synth / config
class InvalidSpec(StitchError):
    pass


class ConfigError(StitchError):
    pass


class PipelineError(StitchError):
    """Wraps a stage failure with the stage name for CLI reporting."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"STAGE={stage} CODE={getattr(cause, 'code', type(cause).__name__)}: {cause}")
