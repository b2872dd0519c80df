"""specres: numerical laboratory for spectral cluster and resolvent norm estimates.

Modules
-------
exponents     exponent algebra: sigma(q), critical/Sobolev exponents, profiles
model         finite spectral models, windows, resolvents, multiplier calculus
norms         Lp->Lq norm estimation (power iteration, brute force, composites)
manifolds     torus / sphere / rough-metric model builders and potentials
inequalities  windowed-estimate checks and random-model corpus runners
perturbation  potential perturbation pipeline: C0, M(lam), thresholds, Neumann
sweep         lambda sweeps, slope/log-factor fitting, report emission
cli           command-line entry points (model, norms, verify, sweep, ...)
"""

from .exponents import (
    ExponentProfile,
    SpectralRegion,
    critical_q,
    dual_exponent,
    embed_up,
    gamma_catalog,
    interpolate_with_trivial,
    s_of_q,
    sigma,
    sobolev_q,
)
from .model import (
    FiniteMeasureSpace,
    MultiplierMap,
    NumericalError,
    ResolventQuery,
    SpectralOperator,
    SpectralWindow,
    cosine_resolvent,
    fractional_power,
    im_resolvent,
    multiplier,
    project,
    random_spectral_operator,
    resolvent_sq,
)
from .norms import (
    IterationConfig,
    NormBracket,
    SpaceSpec,
    duality_map,
    lp_norm,
    op_norm_bruteforce,
    op_norm_composite,
    op_norm_power,
    operator_norm,
    tt_star_identity_check,
)
from .manifolds import Potential, RoughMetricModel, build_potential, build_sphere, build_torus
from .inequalities import (
    CheckResult,
    Partition,
    check_cor34,
    check_multiplier_lemma,
    check_prop32,
    darboux,
    integral_majorant,
    run_multiplier_corpus,
    run_prop32_corpus,
    scalar_im_scan,
    window_norm_profile,
)
from .perturbation import (
    StabilityReport,
    c0_estimate,
    energy_spaces,
    fractional_resolvent,
    lambda0,
    m_of_lambda,
    perturbed_operator,
    perturbed_resolvent,
    potential_split,
    stability_check,
)
from .sweep import (
    FitResult,
    Schedule,
    SweepConfig,
    SweepRecord,
    build_model,
    detect_log,
    emit,
    fit_all,
    fit_slope,
    load_model,
    load_report,
    run_sweep,
    save_model,
    trusted_lambda,
)

__version__ = "0.1.0"
