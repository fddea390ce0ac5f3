"""Exception hierarchy for the package."""


class MarkovCltError(Exception):
    """Base class for all package errors."""


class NotStochastic(MarkovCltError):
    """Transition matrix has a bad row sum or a negative entry."""


class Reducible(MarkovCltError):
    """Support graph of the transition matrix is not strongly connected."""


class SolveFailure(MarkovCltError):
    """A dense linear solve broke down numerically."""


class NoConvergence(MarkovCltError):
    """An iterative limit did not reach its tolerance within the budget."""


class MissingEdge(MarkovCltError):
    """A path used a transition outside the support of the chain."""


class TooLarge(MarkovCltError):
    """Exhaustive enumeration would exceed the path budget."""


class DegenerateD(MarkovCltError):
    """Diffusion matrix has rank zero; Gaussian marginal tests do not apply."""


class HypothesisUnmet(MarkovCltError):
    """A supplied moment-growth constant fails on the tested range."""


class InvalidRegime(MarkovCltError):
    """Moment/growth exponents are outside the admissible region."""


class ConfigError(MarkovCltError):
    """Run configuration is missing or inconsistent."""
