"""Typed errors shared across the evaluation pipeline.

Every loader/metric failure maps to exactly one of these classes so callers
(and the CLI exit-code logic) can branch on type instead of message text.
"""


class EvalError(Exception):
    """Base class for all ewmeval errors."""


# -- interchange / loading ------------------------------------------------

class ParseError(EvalError):
    """File exists but does not parse as the documented format."""


class SchemaError(EvalError):
    """Manifest violates a structural invariant (missing/duplicate ids)."""


class MissingEvidence(EvalError):
    """A manifest entry references a file that does not exist."""

    def __init__(self, message: str, episode_id: str | None = None):
        super().__init__(message)
        self.episode_id = episode_id


class BadMagic(ParseError):
    """Embedding file does not start with the EWMB magic bytes."""


class TruncatedFile(ParseError):
    """Embedding payload size disagrees with the declared shape."""


class NonFiniteValue(EvalError):
    """A loaded tensor contains NaN or Inf."""


class NonFinitePoint(EvalError):
    """A trajectory row contains NaN or Inf (row index in message)."""


class EmptyTrajectory(EvalError):
    """Trajectory has no points."""


# -- trajectory metrics ---------------------------------------------------

class DimensionMismatch(EvalError):
    """Two trajectories have different point dimensionality."""


class TooShort(EvalError):
    """Trajectory too short for the requested derivative order."""


class EmptySamples(EvalError):
    """A sample set for a distributional metric is empty."""


class BothEmpty(EvalError):
    """Neither hand has a trajectory to select from."""


class EmptyCandidateList(EvalError):
    """best-of-N called with no candidates."""


# -- diversity sampling ---------------------------------------------------

class NonPositiveVoxelSize(EvalError):
    """Voxel edge length must be > 0."""


class PointOutOfBounds(EvalError):
    """A point falls outside explicitly supplied voxelization bounds."""


class GridMismatch(EvalError):
    """Voxel grids do not share origin/dims/voxel_size."""


class KOutOfRange(EvalError):
    """Requested selection size outside [1, n]."""


# -- scene consistency ----------------------------------------------------

class ShapeMismatch(EvalError):
    """Frame embeddings differ in patch count or dimension."""


class ZeroNormPatch(EvalError):
    """A patch vector has zero norm; cosine undefined."""


class TooFewFrames(EvalError):
    """Scene scoring needs at least two frames."""


# -- semantic metrics -----------------------------------------------------

class EmptyReference(EvalError):
    """BLEU reference tokenizes to nothing."""


class DimMismatch(EvalError):
    """Step embedding dimensions disagree."""


class EmptySteps(EvalError):
    """A step-embedding tensor holds no steps."""


class EmptyVerdicts(EvalError):
    """Logic score called with no verdicts."""


class TooFewVideos(EvalError):
    """Diversity needs at least two videos in a group."""


# -- aggregation / reporting ----------------------------------------------

class MissingDimension(EvalError):
    """A model has no scored episode for some metric."""


class ModelSetMismatch(EvalError):
    """Rank correlation inputs cover different model sets."""


class InsufficientData(EvalError):
    """Perturbation study needs more trajectories."""


class SignatureMismatch(EvalError):
    """Perturbation study results contradict the expected metric directions."""


class DegenerateRange(UserWarning):
    """All models share one value under min-max normalization."""
