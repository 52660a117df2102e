from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    algebraic: float = 1e-12
    ode_relative: float = 1e-6
    unit_norm: float = 1e-9


TOL = Tolerances()

# Fixed RK4 step count used by every scenario unless overridden.
DEFAULT_STEPS = 4000
