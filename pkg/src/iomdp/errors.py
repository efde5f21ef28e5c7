"""Exception types raised across the toolkit."""


class IomdpError(Exception):
    """Base class for all toolkit errors."""


class EmptyModel(IomdpError):
    """Model has no states or no actions."""


class NonStochasticRow(IomdpError):
    """A transition row has a negative entry or does not sum to 1."""


class NotRecurrent(IomdpError):
    """Some deterministic policy induces multiple classes or transient states."""


class SingularSystem(IomdpError):
    """Stationary distribution is not unique (multiple recurrent classes)."""


class ExplosionGuard(IomdpError):
    """Belief enumeration exceeded the configured size cap."""


class ModeRequired(IomdpError):
    """A truncation boundary exists but no boundary mode was chosen."""


class NotActionIndependent(IomdpError):
    """Operation requires all per-action transition matrices to coincide."""


class DimensionMismatch(IomdpError):
    """LP pieces disagree on sizes."""


class Infeasible(IomdpError):
    """LP has no feasible point."""


class Unbounded(IomdpError):
    """LP objective is unbounded below."""


class NotOptimal(IomdpError):
    """Operation needs an optimal LP solution."""


class SingularChain(IomdpError):
    """Policy-induced chain has no unique stationary distribution."""


class PolicyDomainMismatch(IomdpError):
    """Policy is not defined on the belief space used by the simulator."""


class StatusMismatch(IomdpError):
    """Primal/dual solution statuses disagree."""


class MissingArtifact(IomdpError):
    """A required output from an earlier command is absent."""
