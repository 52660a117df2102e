"""Corrective fields that keep dissipative spin dynamics on the dissipationless path.

The central construction: for a nominal unit direction ``s(t)`` and a
dissipation tensor ``L``, adding ``b = s x (L s) / gyro`` to the control field
makes the damped Bloch vector stay parallel to ``s(t)``, with its length decaying
as ``exp(-int s.L.s dt)``.
"""

from .correction import (
    CorrectionResult,
    accumulate_F,
    correction_general,
    correction_transverse,
    corrected_field,
    gauge_shift,
    steering_field,
    transverse_correction_magnitude,
)
from .dynamics import (
    BlochSystem,
    NonHermitianSystem,
    Trajectory,
    integrate_bloch,
    integrate_schrodinger,
    stochastic_bloch_oracle,
)
from .errors import (
    ConfigError,
    DegenerateConditionsError,
    DissicorrError,
    DomainError,
    InvalidCouplingError,
    NumericalOverflowError,
    SingularFieldError,
    UnderflowError,
)
from .geometry import AngularPath, TimeGrid, axial_tensor, dissipation_tensor, spherical_frame_at

__version__ = "0.1.0"
