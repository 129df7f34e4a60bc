"""Exception classes shared across the toolkit."""


class HankelDesignError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(HankelDesignError):
    """Operands have incompatible or invalid dimensions."""


class StructureError(HankelDesignError):
    """A structural property (controllability, observability) is violated."""


class GenerationError(HankelDesignError):
    """Random generation exhausted its retry budget."""


class InfeasibleError(HankelDesignError):
    """The design loop could not find a rank-increasing input."""


class RunawayError(HankelDesignError):
    """An open-ended loop exceeded its safety cap (tolerance breakdown)."""


class ConfigError(HankelDesignError):
    """Invalid experiment configuration."""


class OracleError(HankelDesignError):
    """Input outside the exact-arithmetic oracle's supported domain."""
