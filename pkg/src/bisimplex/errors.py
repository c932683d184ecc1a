"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input fails a structural or numerical validity check."""


class InvalidAxisError(ValidationError):
    """Rotor axis is zero or not normalizable."""


class LorentzValidationError(ValidationError):
    """Matrix is not a (proper, orthochronous) Lorentz transform."""


class DegenerateSimplexError(ValidationError):
    """Edge vectors of a 4-simplex do not span four dimensions."""


class LightlikeFaceError(ValidationError):
    """Triangle bivector is null, so no unit normal or angle exists."""


class ZeroAreaError(ValidationError):
    """Triangle has vanishing area."""


class BranchAmbiguityError(ValidationError):
    """Requested branch data is inconsistent or undecidable."""


class SectorViolationError(ValidationError):
    """Angle does not lie in the sector claimed for it."""
