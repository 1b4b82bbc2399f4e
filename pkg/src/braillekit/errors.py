"""Exception types shared across the toolkit."""


class BrailleKitError(Exception):
    """Base class for all braillekit errors."""


class InvalidImageError(BrailleKitError):
    """Empty or malformed image input."""


class DegeneratePageError(BrailleKitError):
    """Histogram analysis found no usable intensity spread (blank/constant page)."""


class InsufficientDotsError(BrailleKitError):
    """Too few dots to support a reliable estimate."""


class GridInconsistencyError(BrailleKitError):
    """Dot positions do not fit a Braille cell lattice."""


class CascadeTrainingError(BrailleKitError):
    """Boosting or cascade stage targets could not be met."""

    def __init__(self, message: str, stage: int | None = None):
        super().__init__(message)
        self.stage = stage


class ModelFormatError(BrailleKitError):
    """Persisted cascade model file is unreadable or has an unknown version."""


class AnnotationError(BrailleKitError):
    """Annotation or manifest file is malformed or violates an invariant."""


class SynthSpecError(BrailleKitError):
    """Synthetic page specification is not renderable."""
