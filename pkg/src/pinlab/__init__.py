"""pinlab: diluted disordered pinning, its renormalization and lemma checks."""

__version__ = "0.1.0"

from .environment import ChargeLaw, Environment, mu_beta, sample_environment
from .errors import PinlabError
from .partition import LogWeight, charge_partition, exact_partition, free_energy_estimate
from .renewal import renewal_function, srw_first_return_law

__all__ = [
    "ChargeLaw",
    "Environment",
    "LogWeight",
    "PinlabError",
    "__version__",
    "charge_partition",
    "exact_partition",
    "free_energy_estimate",
    "mu_beta",
    "renewal_function",
    "sample_environment",
    "srw_first_return_law",
]
