"""Equilibria and stability of synchronous machines in the dq frame.

Modules: ``frames`` (transform, back-EMF, torque), ``single`` (one machine
on a resistive-inductive load), ``two`` (two machines sharing a line),
``numerics`` (in-repo kernels), ``sim`` (time-domain runs) and ``cli``.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    DomainError,
    InconsistencyError,
    InsufficientDataError,
    NumericFailure,
    SingularVelocityError,
    SmstabError,
    StiffnessError,
)

__all__ = [
    "__version__",
    "ConfigError",
    "DomainError",
    "InconsistencyError",
    "InsufficientDataError",
    "NumericFailure",
    "SingularVelocityError",
    "SmstabError",
    "StiffnessError",
]
