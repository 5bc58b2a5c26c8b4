"""Exception taxonomy shared across the toolkit."""


class ToolkitError(Exception):
    """Base class for all henonlab errors."""


class DegenerateParameter(ToolkitError):
    """A factor's delta vanishes at the requested parameter."""


class MixedModeError(ToolkitError, TypeError):
    """Exact-rational and floating scalars were mixed in one evaluation."""


class NotPeriodic(ToolkitError):
    """Multiplier computation requested at a point that is not periodic."""


class GloballyPeriodic(ToolkitError):
    """Operation requires a marked point that is not globally periodic."""


class ResolutionTooCoarse(ToolkitError):
    """Green enclosure widths exceed the Laplacian stencil scale."""


class DegenerateFit(ToolkitError):
    """Proportionality fit attempted against a (near-)zero measure."""


class BitBudgetExceeded(ToolkitError):
    """Exact orbit heights outgrew the integer bit budget too early."""


class NotReversible(ToolkitError):
    """Family fails the involution conjugacy check tau . f . tau = f^-1."""


class InjectivityViolation(ToolkitError):
    """Curve chart w -> (x, y) collides with itself on the sample grid."""


class Resonance(ToolkitError):
    """Eigenvalue resonance obstructs the manifold parameterization."""


class IllConditioned(ToolkitError):
    """A linear solve in the parameterization was numerically singular."""


class EigenvalueOne(ToolkitError):
    """Fixed-point continuation obstructed by a unit eigenvalue."""


class SweepExhausted(ToolkitError):
    """No radius in the sweep produced a certified containment."""


class AmplifiedNoise(ToolkitError):
    """Rescaled enclosure width exceeded tolerance in a renorm sequence."""
