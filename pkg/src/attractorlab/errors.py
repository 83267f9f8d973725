"""Exception types shared across the laboratory modules."""


class LabError(Exception):
    """Base class for all laboratory errors."""


class ConfigError(LabError):
    """Invalid configuration (violated model invariant or unknown key)."""


class SeedFailure(LabError):
    """Preimage root refinement failed to converge from the lattice seeds."""


class FiberEscape(LabError):
    """Fiber image left the unit disk; skew-product parameters invalid."""


class ConeViolation(LabError):
    """A cone-field invariance check failed at a visited point."""

    def __init__(self, message, at=None):
        super().__init__(message)
        self.at = at


class AtPuncture(LabError):
    """Evaluation of the punctured map requested at the deleted point."""


class NonhyperbolicFixedPoint(LabError):
    """A fixed-point multiplier modulus lies within tolerance of 1."""


class NonhyperbolicOrbit(LabError):
    """A Floquet multiplier modulus lies within tolerance of 1."""


class CoverFailure(LabError):
    """Injectivity could not be certified on a cover element."""


class EmptyCore(LabError):
    """No grid point survived the expanding-core horizon."""


class NotReached(LabError):
    """A region failed to fatten to the target radius within the cap."""

    def __init__(self, message, cap=None):
        super().__init__(message)
        self.cap = cap


class OrbitHitPuncture(LabError):
    """An orbit entered the guard ball around the deleted set."""


class SpectrumMismatch(LabError):
    """Computed equilibrium eigenvalues disagree with the declared spectrum."""

    def __init__(self, message, expected=None, computed=None):
        super().__init__(message)
        self.expected = expected
        self.computed = computed


class NearSingularityStall(LabError):
    """Trajectory entered the guard ball around the equilibrium."""

    def __init__(self, message, state=None, time=None):
        super().__init__(message)
        self.state = state
        self.time = time


class PairUnconnected(LabError):
    """A transitivity probe pair failed to connect within the cap."""


class MissingArtifact(LabError):
    """A plot-data source artifact is absent."""


class WitnessNotFound(LabError):
    """No periodic-orbit index pair exists up to the searched period."""
