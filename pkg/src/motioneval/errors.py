"""Exception taxonomy for the evaluation engine.

Every loader / metric / client raises a subclass of MotionEvalError so callers
can distinguish configuration problems, bad data, and network failures.
"""


class MotionEvalError(Exception):
    """Base class for all engine errors."""


# ---------------------------------------------------------------------------
# NPY interchange format
# ---------------------------------------------------------------------------

class NpyFormatError(MotionEvalError):
    """Base for NPY parse failures."""


class MagicMismatch(NpyFormatError):
    """File does not start with the NPY v1.0 magic/version prefix."""


class UnsupportedDtype(NpyFormatError):
    """Array dtype is not little-endian float32/float64."""


class FortranOrderUnsupported(NpyFormatError):
    """Fortran-ordered payloads are rejected; C order only."""


class ShapeHeaderMalformed(NpyFormatError):
    """Header dict unparseable, or declared shape disagrees with payload size."""


# ---------------------------------------------------------------------------
# Corpus / manifest loading
# ---------------------------------------------------------------------------

class ManifestError(MotionEvalError):
    """Manifest file missing, unreadable, or structurally invalid."""


class MissingFile(MotionEvalError):
    """A file referenced by a manifest or target spec does not exist."""


class InvariantViolation(MotionEvalError):
    """A loaded record violates a container invariant."""

    def __init__(self, clip_id, reason):
        super().__init__(f"{clip_id}: {reason}")
        self.clip_id = clip_id
        self.reason = reason


# ---------------------------------------------------------------------------
# Target specifications
# ---------------------------------------------------------------------------

class UnknownKind(MotionEvalError):
    """Target record kind is not one of the supported kinds."""


class MissingField(MotionEvalError):
    """Target record lacks a field required by its kind."""


class NonUnitDirection(MotionEvalError):
    """Direction vector deviates from unit length beyond tolerance."""


# ---------------------------------------------------------------------------
# Feature / kinematics
# ---------------------------------------------------------------------------

class AlreadyDenormalized(MotionEvalError):
    """denormalize() called on features already in raw units."""


class NormalizedInput(MotionEvalError):
    """Operation requires denormalized features."""


class DimensionMismatch(MotionEvalError):
    """Vector/array dimensions disagree."""


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

class TooShort(MotionEvalError):
    """Clip has too few frames for the requested metric."""


class EmptySeries(MotionEvalError):
    """Pose-distance series is empty."""


class DegenerateMesh(MotionEvalError):
    """Mesh invalid for collision work (no faces, or too many zero-area ones)."""


class BadK(MotionEvalError):
    """Retrieval k outside [1, pool size]."""


class ZeroVector(MotionEvalError):
    """Cosine similarity undefined for a (near-)zero vector."""


class InsufficientOutputs(MotionEvalError):
    """A prompt has fewer than two outputs for multimodality."""


class EmptyCorpus(MotionEvalError):
    """No motion vectors available for diversity."""


class EmptyValues(MotionEvalError):
    """Statistic requested over an empty value list."""


# ---------------------------------------------------------------------------
# Fine-grained accuracy
# ---------------------------------------------------------------------------

class WindowOutOfRange(MotionEvalError):
    """Evaluation window exceeds track length."""


class BadJoints(MotionEvalError):
    """Base/target joint indices invalid for the clip."""


class UnresolvedPrompt(MotionEvalError):
    """A target's prompt_id has no generated clip for some baseline."""

    def __init__(self, prompt_id, detail=""):
        msg = prompt_id if not detail else f"{prompt_id}: {detail}"
        super().__init__(msg)
        self.prompt_id = prompt_id


# ---------------------------------------------------------------------------
# Judge client
# ---------------------------------------------------------------------------

class TransportError(MotionEvalError):
    """Network failure or non-retryable HTTP status (after any retries)."""


class RateLimited(MotionEvalError):
    """HTTP 429 persisted through all retry attempts."""


class SchemaViolation(MotionEvalError):
    """Judge response violates the structured-output schema."""

    def __init__(self, field, reason):
        super().__init__(f"{field}: {reason}")
        self.field = field
        self.reason = reason


class BandMismatch(MotionEvalError):
    """Judge verdict inconsistent with its overall score band."""

    def __init__(self, overall, verdict):
        super().__init__(f"overall={overall} inconsistent with verdict={verdict!r}")
        self.overall = overall
        self.verdict = verdict


class OutOfRange(MotionEvalError):
    """Overall score outside [0, 60]."""


class Misaligned(MotionEvalError):
    """LLM and human score lists do not align by prompt_id."""


# ---------------------------------------------------------------------------
# Scoring / selection
# ---------------------------------------------------------------------------

class DegenerateRange(MotionEvalError):
    """Normalization range has hi <= lo (or p95 <= p5)."""


class MissingMetric(MotionEvalError):
    """A weighted metric is absent from the normalized value map."""


class NoCandidates(MotionEvalError):
    """A prompt has no scoreable candidate rows."""

    def __init__(self, prompt_id):
        super().__init__(prompt_id)
        self.prompt_id = prompt_id


class ConfigError(MotionEvalError):
    """Run configuration invalid (missing paths, bad values)."""
