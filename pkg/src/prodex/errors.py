"""Exception types shared across the package.

ValueError subclasses signal bad inputs or configuration; RuntimeError
subclasses signal failures that arise while a sampler is running.
"""


class SingularScheduleError(ValueError):
    """Schedule denominator vanished at some step; names the offending step."""


class CompositionError(ValueError):
    """Field composition weights violate the sum-to-one constraint."""


class GraphError(ValueError):
    """Conditioning graph is cyclic, references unknown experts, or is missing
    an evaluation required for a correction."""


class CapacityError(ValueError):
    """Exact enumeration was requested for a state space that is too large."""


class EnvelopeError(ValueError):
    """Rejection-sampling envelope does not dominate the target on the probe grid."""


class DegenerateProductError(ValueError):
    """A pointwise product has zero total mass."""


class ConfigError(ValueError):
    """Experiment configuration failed validation; message carries the field path."""


class NumericalError(RuntimeError):
    """A kernel produced non-finite values; message names the step or expert."""


class IncompatibleExpertsError(RuntimeError):
    """Product of expert conditionals is identically zero at some prefix."""


class DegeneratePopulationError(RuntimeError):
    """Every particle weight is -inf; resampling is impossible."""
