"""Central tolerance record.

Every validation threshold used by the package lives here so that stress
tests can tighten or relax them in one place.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    hermitian_atol: float = 1e-12
    trace_atol: float = 1e-10
    psd_atol: float = 1e-10
    unit_norm_atol: float = 1e-12
    unitary_atol: float = 1e-10
    full_rank_floor: float = 1e-6
    exp_arg_max: float = 700.0


DEFAULT_TOLERANCES = Tolerances()
