"""Exception types shared across the package."""


class FairGneError(Exception):
    """Base class for all package errors."""


class InvalidParams(FairGneError):
    """A game, cost, or transformation parameter violates its constraints."""


class DomainError(FairGneError):
    """A point lies outside the domain of a cost function or metric."""


class InvalidWeights(InvalidParams):
    """Weight vector for a weighted pseudo-gradient is not strictly positive."""


class NotAffine(FairGneError):
    """Operation requires a game with an exact affine pseudo-gradient."""


class InfeasibleSet(FairGneError):
    """The constraint set is empty (lower bounds exceed the budget)."""


class NoConvergence(FairGneError):
    """Iterative solver hit its iteration budget above tolerance."""

    def __init__(self, iterations: int, residual: float, message: str = ""):
        self.iterations = iterations
        self.residual = residual
        detail = message or (
            f"no convergence after {iterations} iterations "
            f"(residual {residual:.3e})"
        )
        super().__init__(detail)


class NoValidPattern(FairGneError):
    """Active-set enumeration found no KKT-consistent pattern."""


class DimensionTooLarge(FairGneError):
    """Problem size exceeds the active-set enumeration bound."""


class InfeasibleResidual(FairGneError):
    """Other agents exhaust the budget below an agent's lower bound."""


class NotStationary(FairGneError):
    """No nonnegative multiplier pair makes the KKT residual small."""


class MissingBenchmark(FairGneError):
    """Nash-bargaining metric evaluated without benchmark costs."""


class AllPointsFailed(FairGneError):
    """No grid point of an equilibrium-selection search converged."""


class UnknownScenario(FairGneError):
    """Scenario name is not one of the published identifiers."""


class ParseError(FairGneError):
    """Configuration document is not well-formed."""


class ValidationError(FairGneError):
    """Configuration document violates the schema.

    Carries every violation found, not just the first, as a list of
    (field_path, message) pairs.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        lines = "; ".join(f"{path}: {msg}" for path, msg in self.errors)
        super().__init__(f"invalid configuration: {lines}")
