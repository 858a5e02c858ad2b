"""Exception hierarchy. The CLI maps the three families to exit codes 2/3/4."""


class PTCrystalError(Exception):
    """Base class for all package errors."""


class ConfigError(PTCrystalError):
    """Invalid run configuration; carries every violation found."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class NumericalError(PTCrystalError):
    """A numerical procedure failed (non-finite values, no convergence, ...)."""


class EigensolveFailure(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class NoSignChange(NumericalError):
    pass


class RangeError(NumericalError):
    pass


class NumericalBlowup(NumericalError):
    pass


class UnderResolvedPhase(NumericalError):
    pass


class InterpolationRangeError(NumericalError):
    pass


class GaugeFixFailure(NumericalError):
    pass


class DefectivePairing(NumericalError):
    """Left/right eigenvector pairing is ill-conditioned (at or near alpha_c)."""


class PhysicsError(PTCrystalError):
    """A physics-validity condition is violated."""


class NoBreakingFound(PhysicsError):
    """No symmetry breaking inside the scanned alpha range."""


class GapClosure(PhysicsError):
    pass


class NoCrossing(PhysicsError):
    """The drive never reaches the Bragg condition for the requested order."""


class RegimeMismatch(PhysicsError):
    pass


class UnresolvedBeam(PhysicsError):
    pass


class ZeroField(PhysicsError):
    pass


class PhysicsValidityWarning(UserWarning):
    """Single-band or similar model assumption is questionable."""


class DegenerateBandWarning(UserWarning):
    pass
