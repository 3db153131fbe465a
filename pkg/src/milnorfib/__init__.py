"""Certified checks of the strong Milnor condition and the fibration it produces.

For a real polynomial map germ ``psi = (P, Q): (R^m, 0) -> (R^2, 0)`` the
package certifies, over annuli and with outward-rounded interval arithmetic,
that ``gamma = P grad Q - Q grad P`` stays uniformly away from the radial
direction; it then integrates the vector field whose flow moves fibers of
``psi/||psi||`` around the circle.
"""

__version__ = "0.1.0"

from .certify import (  # noqa: E402
    FAIL,
    PASS,
    UNKNOWN,
    Annulus,
    Certificate,
    SubdivisionConfig,
    angle_measure,
    angle_measure_all_theta,
    certify_isolated_singularity,
    certify_nonvanishing,
    certify_strong_milnor,
    find_parallel_points,
    jacquemard_angle_sup,
)
from .fibration import (  # noqa: E402
    FiberSample,
    LinkSample,
    SpherePoint,
    Trajectory,
    compute_link,
    integrate_flow,
    omega,
    sample_fiber,
    transport_fiber,
)
from .germ import REGISTRY, MapGerm, SeadeFamily, get_germ, load_germ  # noqa: E402
from .interval import Box, Interval, eval_interval  # noqa: E402
from .polynomial import Polynomial, parse_polynomial  # noqa: E402
from .series import UnivariateSeries  # noqa: E402
from .strata import (  # noqa: E402
    StratPair,
    TestCurve,
    c_regularity_limit,
    curve_ratio_diagnostic,
    m_condition_scan,
    whitney_a_limit,
)

__all__ = [
    "FAIL", "PASS", "UNKNOWN", "Annulus", "Certificate", "SubdivisionConfig",
    "angle_measure", "angle_measure_all_theta", "certify_isolated_singularity",
    "certify_nonvanishing", "certify_strong_milnor", "find_parallel_points",
    "jacquemard_angle_sup", "FiberSample", "LinkSample", "SpherePoint", "Trajectory",
    "compute_link", "integrate_flow", "omega", "sample_fiber", "transport_fiber",
    "REGISTRY", "MapGerm", "SeadeFamily", "get_germ", "load_germ", "Box", "Interval",
    "eval_interval", "Polynomial", "parse_polynomial", "UnivariateSeries", "StratPair",
    "TestCurve", "c_regularity_limit", "curve_ratio_diagnostic", "m_condition_scan",
    "whitney_a_limit",
]
