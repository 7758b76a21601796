"""Linear delay equations ``x'(t) + c(t) x(tau(t)) = 0`` with piecewise data.

The package covers exact calculus of piecewise coefficients and delays
(:mod:`~delayosc.fnspec`), the special functions behind the sharp stability
thresholds (:mod:`~delayosc.special`), a fixed-step integrator
(:mod:`~delayosc.integrator`), oscillation analysis and certificates
(:mod:`~delayosc.oscillation`) and exactly solvable limit cases
(:mod:`~delayosc.examples`).
"""
from .errors import *  # noqa: F401,F403
from .examples import (
    NamedExample,
    check_g_ys_identity,
    make_lillo_g,
    make_myshkis_f,
    make_xs,
    make_ys,
)
from .fnspec import (
    Equation,
    Piece,
    PiecewiseFn,
    abs_integral,
    breakpoints,
    compute_anchor,
    eval_fn,
    tau_min,
    tau_min_iter,
)
from .integrator import BACKEND, History, Trajectory, integrate, residual
from .oscillation import (
    Certificate,
    Features,
    OscillationReport,
    SignSegment,
    Verdict,
    certify,
    classify,
    find_zeros,
    measure_ell,
    sup_delay_integral,
    tau_max,
    verify_exponential,
)
from .special import (
    DecayConstants,
    PsiProfile,
    Theorem,
    alpha_root,
    decay_factor,
    exp_decay_constants,
    lambda_of,
    psi_closed,
    psi_picard,
    sigma_argmin,
    sigma_of,
)

__version__ = "0.1.0"
