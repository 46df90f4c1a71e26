"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Operands have incompatible shapes; message carries both shapes."""


class AlgebraMismatch(ValueError):
    """Operands belong to different algebras, or dimensions disagree."""


class DivisibilityError(ValueError):
    """A feature/channel count is not divisible by the algebra dimension."""


class DegenerateAxis(ValueError):
    """A rotation axis with zero length was supplied."""


class NormalizationError(ValueError):
    """A quaternion or dual quaternion is too far from unit form."""


class FormatError(ValueError):
    """A model file is malformed (bad magic, version, or truncation)."""


class ConfigError(ValueError):
    """A config file failed to parse or validate."""
