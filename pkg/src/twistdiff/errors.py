"""Exception hierarchy shared across the toolkit."""


class TwistdiffError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(TwistdiffError):
    """A configuration file or flag set is malformed or inconsistent."""


class NonFiniteState(TwistdiffError):
    """A trajectory left the finite range of double precision.

    Attributes
    ----------
    index : int or None
        The iterate at which the blow-up was detected, when known.
    trajectory : int or None
        The trajectory id within an ensemble, when known.
    """

    def __init__(self, message, index=None, trajectory=None):
        super().__init__(message)
        self.index = index
        self.trajectory = trajectory


class IllConditioned(TwistdiffError):
    """A root/nondegeneracy margin fell inside the tolerance band where
    neither a clean pass nor a clean fail can be certified."""


class ResonantInput(TwistdiffError):
    """An action value was requested inside a resonant window where the
    far-from-resonance normal form does not apply."""


class NotTIAdmissible(TwistdiffError):
    """The rotation number fails the totally-irrational admissibility
    condition required by the ergodization estimate."""


class AmbiguousClass(TwistdiffError):
    """Two admissible witnesses were found for one strip, which signals a
    violated parameter relation (b != (nu - rho)/2)."""


class DegenerateVariance(TwistdiffError):
    """sigma^2 dropped below the positivity threshold on the requested
    interval, so drift/variance quotients are unreliable."""


class InsufficientSamples(TwistdiffError):
    """A statistical test was invoked with too few samples."""


class IOFailure(TwistdiffError):
    """An artifact could not be written."""
