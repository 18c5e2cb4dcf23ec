"""Transport (Lagrangian) space-time covariances and the dimple effect.

The main entry points are :class:`TransportCovariance` on R^d,
:class:`SphereTransportCovariance` on S^1 and S^2, the classifiers in
:mod:`lagrangian_dimple.dimple` and the simulators in
:mod:`lagrangian_dimple.fieldsim`.
"""
from .dimple import DimpleReport, Verdict, classify_directional, classify_euclid, classify_radial, classify_sphere
from .fieldsim import FactorizationError, PointSet, simulate_transport_euclid, simulate_transport_sphere
from .kernels import Family, Kernel, KernelError, SpectralMixtureSpec, kernel_from_json
from .rotations import AxisRotation, CircleRotation, rodrigues
from .transport_euclid import (
    MCEstimate,
    Strategy,
    TransportCovariance,
    UnsupportedModel,
    criterion_F,
    eval_closed,
    eval_mc,
    eval_spectral,
    radial_criterion,
)
from .transport_sphere import (
    SphereKind,
    SphereStrategy,
    SphereTransportCovariance,
    circle_criterion,
    sphere2_cov_closed,
    sphere2_cov_mc,
    sphere2_cov_quad,
    sphere2_criterion,
)
from .velocity import LawKind, VelocityError, VelocityLaw, law_from_json

__version__ = "0.1.0"
