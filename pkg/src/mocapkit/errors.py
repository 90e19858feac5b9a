"""Exception hierarchy for the processing pipeline.

Every error raised by this package derives from MocapError so callers can
catch pipeline failures without swallowing programming errors.
"""


class MocapError(Exception):
    """Base class for all pipeline errors."""


# camera / projection
class PointAtInfinity(MocapError):
    """Homogeneous w-component of a projection underflowed the safe bound."""


# calibration
class InsufficientPoints(MocapError):
    """Fewer correspondences than the resection minimum (6)."""


class DegenerateConfiguration(MocapError):
    """Correspondences do not determine a unique projection matrix."""


class SingularLeftBlock(MocapError):
    """Projection matrix has a singular left 3x3 block; cannot decompose."""


# triangulation
class InconsistentLandmark(MocapError):
    """Observations passed to a single triangulation mix landmark ids."""


class NumericalDegeneracy(MocapError):
    """Homogeneous solution cannot be dehomogenized (w ~ 0)."""


class FrameIndexMismatch(MocapError):
    """Per-camera frames passed together do not share a frame index."""


class EmptySequence(MocapError):
    """Statistics requested over an empty frame sequence."""


# trajectory filtering
class AllGaps(MocapError):
    """Trajectory has no valid samples to interpolate from."""


class TooShort(MocapError):
    """Trajectory too short for the requested filter order."""


class NyquistViolation(MocapError):
    """Filter cutoff at or above half the sampling rate."""


# marker augmentation
class MissingDefiningLandmark(MocapError):
    """A segment frame cannot be built because a defining landmark is absent."""


class ModelArtifactMissing(MocapError):
    """External augmentation model selected but no predictor was configured."""


class WindowTooLong(MocapError):
    """Input sequence shorter than the augmenter's temporal window."""


# anthropometry
class UnknownLandmark(MocapError):
    """Landmark name missing from the mesh landmark table."""


class NoIntersection(MocapError):
    """Slicing plane does not intersect the mesh."""


class OpenLoop(MocapError):
    """Slice contour does not close; the mesh is not watertight there."""


class NotWatertight(MocapError):
    """Mesh (or mesh subset) is not closed; volume is undefined."""


class NonPositiveInput(MocapError):
    """Volume, height, or density must be strictly positive."""


class NoValidFrame(MocapError):
    """No frame in the sequence has the landmarks needed for pose selection."""


# inverse kinematics
class Unobservable(MocapError):
    """Too few (or collinear) weighted markers to determine the pose."""


# file formats
class MalformedDocument(MocapError):
    """A document failed to parse; message carries path and offset."""


class InconsistentLandmarkCount(MocapError):
    """Keypoint document does not contain the expected number of landmarks."""


class RaggedTrajectories(MocapError):
    """Trajectories passed to a writer do not share a common frame range."""


# synthetic data generation
class SubjectOutOfView(MocapError):
    """Scripted motion leaves the camera rig's shared field of view."""
