"""Window-partition checks for the abstract cluster/resolvent estimates.

Every check compares a computed operator-norm bracket (lhs) against an
explicit majorant (rhs) assembled from per-window projector norms.  The
engine is the two-factor multiplier bound: partition the spectral interval
J into uniform windows, weight each window's q'->2 projector norm by the
window sup of |m_j|, and then

    ||1_J(A) m_1(A) m_2(A)||_{q'->q}  <=  M_1 M_2,

with constant exactly one.  The remaining checks specialize m_j to
resolvent symbols (tau^2 - (lam + i mu)^2)^(-alpha) and replace the window
sums by closed-form majorants whose implied constants are empirical; those
are locked in RATIO_THRESHOLDS after a documented derivation run.  The two
imaginary-part checks ("3.3", "3.5") instead inherit the derived scalar
constant 10 from scalar_im_scan, which is rigorous.

Ratios always divide a certified lower estimate of the lhs by a majorant
built from upper estimates, so a passing check is conservative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from .exponents import bracket as angle
from .model import (
    MultiplierMap,
    NumericalError,
    SpectralOperator,
    SpectralWindow,
    project,
    random_spectral_operator,
)
from .norms import IterationConfig, NormBracket, lp_norm, operator_norm

WINDOW_SAMPLES = 64

# Maximal lhs/rhs ratios allowed per estimate.  "L3.1" and the corollary
# identities carry exact constants; "3.3"/"3.5" carry the derived scalar
# constant 10; the rest are frozen regression values from the derivation
# run recorded in tests (random corpus, 200 instances, q in {4, 6}).
RATIO_THRESHOLDS: Dict[str, float] = {
    "L3.1": 1.0 + 1e-9,
    "3.3": 10.0,
    "3.4": 1.0,
    "3.5": 10.0,
    "3.6": 1.0,
    "3.7": 2.0,
    "3.8": 2.5,
    "3.10": 1.0 + 1e-9,
    "3.11": 2.0,
    "C(a<->b)": 1.0 + 1e-9,
    "C(b->c)": 1.0 + 1e-9,
    "C(c->a)": 1.0,
}


# ---------------------------------------------------------------------------
# partition and result plumbing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Partition:
    """Uniform partition tau_k = eps*k, k = 0..N+1, N = ceil(2 lam / eps).

    The windows [tau_k, tau_{k+1}] for k = 0..N cover [0, 2 lam].  For norm
    profiles the windows are taken half-open (last one closed) so that every
    eigenvalue lands in exactly one window.
    """

    lam: float
    epsilon: float
    N: int = field(init=False)

    def __post_init__(self):
        if not 0 < self.epsilon <= self.lam:
            raise ValueError(
                f"partition requires 0 < eps <= lam, got eps={self.epsilon}, lam={self.lam}"
            )
        object.__setattr__(self, "N", int(math.ceil(2.0 * self.lam / self.epsilon)))

    @property
    def taus(self) -> np.ndarray:
        return self.epsilon * np.arange(self.N + 2)

    @property
    def interval(self) -> Tuple[float, float]:
        return (0.0, (self.N + 1) * self.epsilon)

    def windows(self) -> List[Tuple[float, float, bool]]:
        t = self.taus
        return [(float(t[k]), float(t[k + 1]), k == self.N) for k in range(self.N + 1)]


@dataclass(frozen=True)
class MultiplierPair:
    """Two scalar symbols with their window-sum constants M_1, M_2."""

    m1: Callable
    m2: Callable
    M1: float
    M2: float


@dataclass
class CheckResult:
    """Outcome of one estimate check: lhs bracket, explicit rhs, their ratio."""

    estimate_id: str
    lhs: NormBracket
    rhs: float
    ratio: float
    threshold: float
    passed: bool
    context: dict

    def __post_init__(self):
        if self.ratio < 0:
            raise ValueError("ratio must be nonnegative")
        if self.passed != (self.ratio <= self.threshold):
            raise ValueError("pass flag inconsistent with threshold")

    def to_dict(self) -> dict:
        return {
            "estimate": self.estimate_id,
            "lhs_lower": self.lhs.lower,
            "lhs_upper": self.lhs.upper,
            "lhs_method": self.lhs.method,
            "rhs": self.rhs,
            "ratio": self.ratio,
            "threshold": self.threshold,
            "passed": self.passed,
            "context": self.context,
        }


def _ratio(lower: float, rhs: float) -> float:
    if lower == 0.0:
        return 0.0
    if rhs == 0.0:
        return math.inf
    return lower / rhs


def _result(estimate_id, lhs, rhs, context, threshold=None) -> CheckResult:
    threshold = RATIO_THRESHOLDS[estimate_id] if threshold is None else threshold
    ratio = _ratio(lhs.lower, rhs)
    return CheckResult(
        estimate_id=estimate_id,
        lhs=lhs,
        rhs=float(rhs),
        ratio=ratio,
        threshold=threshold,
        passed=ratio <= threshold,
        context=dict(context),
    )


# ---------------------------------------------------------------------------
# scalar symbols and window suprema
# ---------------------------------------------------------------------------


def resolvent_multiplier(lam: float, mu: float, alpha: float) -> Callable:
    """tau |-> (tau^2 - (lam + i mu)^2)^(-alpha), with its |.|-critical point.

    |m| is monotone on either side of tau* = sqrt(max(lam^2 - mu^2, 0)), so
    window suprema that include tau* and the endpoints are exact.
    """
    if not mu > 0:
        raise ValueError(f"resolvent symbol requires mu > 0, got {mu}")
    if not alpha > 0:
        raise ValueError(f"resolvent symbol requires alpha > 0, got {alpha}")
    z2 = complex(lam, mu) ** 2

    def m(tau):
        return (np.asarray(tau, dtype=complex) ** 2 - z2) ** (-alpha)

    m.critical_points = (math.sqrt(max(lam * lam - mu * mu, 0.0)),)
    m.label = f"(tau^2-({lam:g}+{mu:g}i)^2)^(-{alpha:g})"
    return m


def _eval_symbol(m: Callable, pts: np.ndarray) -> np.ndarray:
    vals = np.asarray(m(pts))
    if vals.shape != pts.shape:
        vals = np.asarray([m(float(t)) for t in pts])
    return vals.astype(complex)


def _window_samples(m: Callable, lo: float, hi: float) -> np.ndarray:
    pts = np.linspace(lo, hi, WINDOW_SAMPLES)
    crit = [t for t in getattr(m, "critical_points", ()) if lo <= t <= hi]
    if crit:
        pts = np.concatenate([pts, crit])
    vals = np.abs(_eval_symbol(m, pts))
    if not np.all(np.isfinite(vals)):
        raise ValueError(f"symbol is unbounded on the window [{lo:g}, {hi:g}]")
    return vals


# ---------------------------------------------------------------------------
# window norms and multiplier constants
# ---------------------------------------------------------------------------


def _window_projector(op: SpectralOperator, lo: float, hi: float, closed: bool) -> MultiplierMap:
    tau = op.eigenvalues
    ind = (tau >= lo) & ((tau <= hi) if closed else (tau < hi))
    edge = "]" if closed else ")"
    return MultiplierMap(op, ind.astype(float), label=f"P[{lo:g},{hi:g}{edge}")


def window_norm_profile(
    op: SpectralOperator,
    partition: Partition,
    q: float,
    cfg: Optional[IterationConfig] = None,
) -> List[NormBracket]:
    """Per-window q'->2 projector norm brackets (half-open windows)."""
    q = float(q)
    if not 2.0 <= q < math.inf:
        raise ValueError(f"profile requires 2 <= q < inf, got q={q}")
    qd = q / (q - 1.0)
    return [
        operator_norm(_window_projector(op, lo, hi, closed), qd, 2.0, cfg)
        for lo, hi, closed in partition.windows()
    ]


def multiplier_constants(
    op: SpectralOperator,
    partition: Partition,
    q: float,
    m1: Callable,
    m2: Callable,
    cfg: Optional[IterationConfig] = None,
    profile: Optional[List[NormBracket]] = None,
) -> MultiplierPair:
    """M_j^2 = sum_k sup_window |m_j|^2 * ||P_k||^2, with upper norm estimates."""
    if profile is None:
        profile = window_norm_profile(op, partition, q, cfg)
    constants = []
    for m in (m1, m2):
        total = 0.0
        for (lo, hi, _), br in zip(partition.windows(), profile):
            sup = float(np.max(_window_samples(m, lo, hi)))
            total += sup * sup * br.upper * br.upper
        constants.append(math.sqrt(total))
    return MultiplierPair(m1=m1, m2=m2, M1=constants[0], M2=constants[1])


def check_multiplier_lemma(
    op: SpectralOperator,
    partition: Partition,
    q: float,
    m1: Callable,
    m2: Callable,
    cfg: Optional[IterationConfig] = None,
    profile: Optional[List[NormBracket]] = None,
) -> CheckResult:
    """||1_J(A) m1 m2 (A)||_{q'->q} <= M1 M2 -- the constant is exactly 1."""
    q = float(q)
    pair = multiplier_constants(op, partition, q, m1, m2, cfg, profile)
    tau = op.eigenvalues
    lo, hi = partition.interval
    ind = ((tau >= lo) & (tau <= hi)).astype(float)
    values = ind * _eval_symbol(m1, tau) * _eval_symbol(m2, tau)
    T = MultiplierMap(op, values, label="1_J m1 m2 (A)")
    lhs = operator_norm(T, q / (q - 1.0), q, cfg)
    context = {"lam": partition.lam, "eps": partition.epsilon, "q": q, "label": op.label}
    return _result("L3.1", lhs, pair.M1 * pair.M2, context)


# ---------------------------------------------------------------------------
# the six window-vs-resolvent estimates
# ---------------------------------------------------------------------------

_PROP_ITEMS = ("3.3", "3.4", "3.5", "3.6", "3.7", "3.8")


def check_prop32(
    op: SpectralOperator,
    item: str,
    lam: float,
    eps: float,
    q: float,
    mu: Optional[float] = None,
    beta: Optional[float] = None,
    cfg: Optional[IterationConfig] = None,
    profile: Optional[List[NormBracket]] = None,
    rhs_scale: float = 1.0,
) -> CheckResult:
    """Check one of the six cluster/resolvent estimates at (lam, eps, mu, beta, q).

    lhs is a certified-lower norm bracket; rhs multiplies the explicit factor
    by the worst per-window norm (upper estimates).  ``rhs_scale`` exists so
    the test suite can demonstrate that a broken majorant is detected.
    """
    item = str(item)
    if item not in _PROP_ITEMS:
        raise ValueError(f"unknown estimate id {item!r}")
    q = float(q)
    if not 2.0 <= q < math.inf:
        raise ValueError(f"requires 2 <= q < inf, got q={q}")
    if not 0 < eps <= lam:
        raise ValueError(f"requires 0 < eps <= lam, got eps={eps}, lam={lam}")
    if item in ("3.7", "3.8"):
        if mu is None or mu < eps:
            raise ValueError(f"item {item} requires mu >= eps, got mu={mu}")
    else:
        mu = eps
    if item == "3.8":
        if beta is None or not beta > 1:
            raise ValueError(f"item 3.8 requires beta > 1, got beta={beta}")
    else:
        beta = 1.0

    partition = Partition(lam, eps)
    if profile is None:
        profile = window_norm_profile(op, partition, q, cfg)
    sup_norm = max(br.upper for br in profile)
    qd = q / (q - 1.0)
    tau = op.eigenvalues
    ind2l = ((tau >= 0) & (tau <= 2.0 * lam)).astype(float)
    res = _eval_symbol(resolvent_multiplier(lam, mu, beta), tau)

    if item == "3.3":
        lhs = operator_norm(project(op, SpectralWindow(lam, lam + eps)), qd, 2.0, cfg)
        T = MultiplierMap(op, ind2l * np.imag(res), label="P Im R")
        rhs = eps * lam * operator_norm(T, qd, 2.0, cfg).upper
    elif item == "3.4":
        T = MultiplierMap(op, ind2l * res, label="P R")
        lhs = operator_norm(T, qd, 2.0, cfg)
        rhs = sup_norm / (eps * lam)
    elif item == "3.5":
        br = operator_norm(project(op, SpectralWindow(lam, lam + eps)), qd, 2.0, cfg)
        lhs = NormBracket(br.lower**2, br.upper**2, method=br.method + "^2")
        T = MultiplierMap(op, ind2l * np.imag(res), label="P Im R")
        rhs = eps * lam * operator_norm(T, qd, q, cfg).upper
    elif item == "3.6":
        T = MultiplierMap(op, ind2l * res, label="P R")
        lhs = operator_norm(T, qd, q, cfg)
        rhs = math.log(angle(lam / eps)) / (eps * lam) * sup_norm**2
    elif item == "3.7":
        T = MultiplierMap(op, ind2l * res, label="P R")
        lhs = operator_norm(T, qd, q, cfg)
        rhs = math.log(angle(lam / mu)) / (eps * lam * angle(mu / lam)) * sup_norm**2
    else:  # 3.8
        T = MultiplierMap(op, ind2l * res, label="P R^beta")
        lhs = operator_norm(T, qd, q, cfg)
        rhs = (
            (eps * lam) ** -beta
            * (eps / mu) ** (beta - 1.0)
            * angle(mu / lam) ** -beta
            * sup_norm**2
        )

    context = {"lam": lam, "eps": eps, "mu": mu, "beta": beta, "q": q, "label": op.label}
    return _result(item, lhs, rhs * rhs_scale, context)


# ---------------------------------------------------------------------------
# equivalence of cluster, localized-resolvent and quasimode bounds
# ---------------------------------------------------------------------------

_COR_VARIANTS = ("a<->b", "b->c", "c->a", "3.10", "3.11")


def check_cor34(
    op: SpectralOperator,
    lam: float,
    eps: float,
    q: float,
    variant: str,
    mu: Optional[float] = None,
    delta: float = 1.0,
    cfg: Optional[IterationConfig] = None,
    samples: int = 24,
    seed: int = 0,
) -> CheckResult:
    """Quantitative content of one leg of the cluster/resolvent/quasimode loop.

    a<->b  both directions between the window projector and the localized
           2->q resolvent: a->b via the window-sum constant (threshold 1),
           b->a via the scalar imaginary-part constant 10.
    b->c   the triangle-inequality quasimode derivation on sampled
           spectrally localized functions.
    c->a   the window multiplier bound ||(A^2-lam^2) P||_{2->2} <= 3 eps lam
           (endpoint arithmetic: eps (2 lam + eps) <= 3 eps lam).
    3.10   window-lengthening by orthogonality, factor ceil(mu/eps)^(1/2).
    3.11   the log-bearing q'->q resolvent majorant at shift mu.
    """
    if variant not in _COR_VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    q = float(q)
    if not 2.0 <= q < math.inf:
        raise ValueError(f"requires 2 <= q < inf, got q={q}")
    if not 0 < eps <= lam or not delta > 0:
        raise ValueError(f"requires 0 < eps <= lam and delta > 0")
    qd = q / (q - 1.0)
    tau = op.eigenvalues
    ind2l = ((tau >= 0) & (tau <= 2.0 * lam)).astype(float)
    base_context = {"lam": lam, "eps": eps, "mu": mu, "delta": delta, "q": q, "label": op.label}

    if variant == "a<->b":
        partition = Partition(lam, eps)
        profile = window_norm_profile(op, partition, q, cfg)
        m_res = resolvent_multiplier(lam, eps, 1.0)
        pair = multiplier_constants(op, partition, q, m_res, m_res, cfg, profile)
        res = _eval_symbol(m_res, tau)
        lhs_b = operator_norm(MultiplierMap(op, ind2l * res, label="P R"), 2.0, q, cfg)
        r_ab = _ratio(lhs_b.lower, pair.M1)
        lhs_a = operator_norm(project(op, SpectralWindow(lam, lam + eps)), qd, 2.0, cfg)
        im_norm = operator_norm(
            MultiplierMap(op, ind2l * np.imag(res), label="P Im R"), qd, 2.0, cfg
        )
        rhs_ba = 10.0 * eps * lam * im_norm.upper
        r_ba = _ratio(lhs_a.lower, rhs_ba)
        context = dict(base_context, ratio_ab=r_ab, ratio_ba=r_ba)
        if r_ab >= r_ba:
            return _result("C(a<->b)", lhs_b, pair.M1, context)
        return _result("C(a<->b)", lhs_a, rhs_ba, context)

    if variant == "b->c":
        m_res = resolvent_multiplier(lam, eps, 1.0)
        res = _eval_symbol(m_res, tau)
        qb = operator_norm(MultiplierMap(op, ind2l * res, label="P R"), 2.0, q, cfg)
        rng = np.random.default_rng(seed)
        w = op.space.weights
        worst = (0.0, 0.0, 1.0)  # (ratio, numerator, denominator)
        for _ in range(samples):
            c = rng.standard_normal(op.rank) + 1j * rng.standard_normal(op.rank)
            c *= ind2l
            if not np.any(c):
                continue
            u = op.transform.synthesis(c)
            defect = op.transform.synthesis((tau**2 - lam**2) * c)
            num = lp_norm(u, q, w)
            den = qb.upper * (op.space.norm2(defect) + 3.0 * eps * lam * op.space.norm2(u))
            r = _ratio(num, den)
            if r > worst[0]:
                worst = (r, num, den)
        lhs = NormBracket(worst[1], worst[1], method=f"quasimode-samples({samples})")
        return _result("C(b->c)", lhs, worst[2], dict(base_context, qb_upper=qb.upper))

    if variant == "c->a":
        window = (tau >= lam) & (tau <= lam + eps)
        T = MultiplierMap(op, (tau**2 - lam**2) * window, label="(A^2-lam^2) P")
        lhs = operator_norm(T, 2.0, 2.0, cfg)
        return _result("C(c->a)", lhs, 3.0 * eps * lam, base_context)

    if mu is None or mu < eps:
        raise ValueError(f"variant {variant} requires mu >= eps, got mu={mu}")

    if variant == "3.10":
        count = int(math.ceil(mu / eps))
        subs = []
        for j in range(count):
            lo = lam + j * eps
            hi = min(lam + (j + 1) * eps, lam + mu)
            subs.append(operator_norm(_window_projector(op, lo, hi, j == count - 1), qd, 2.0, cfg))
        lhs = operator_norm(project(op, SpectralWindow(lam, lam + mu)), qd, 2.0, cfg)
        rhs = math.sqrt(count) * max(br.upper for br in subs)
        return _result("3.10", lhs, rhs, dict(base_context, windows=count))

    inner = check_prop32(op, "3.7", lam, eps, q, mu=mu, cfg=cfg)
    return _result("3.11", inner.lhs, inner.rhs, base_context)


# ---------------------------------------------------------------------------
# scalar ingredients: Darboux sums, integral majorant, imaginary-part bound
# ---------------------------------------------------------------------------


def darboux(m: Callable, partition: Partition) -> Tuple[float, float]:
    """Lower/upper Darboux sums of |m|^2 over the partition, spacing eps.

    The bracketing s(P) <= integral <= S(P) is asserted against an adaptive
    quadrature of |m|^2 on every invocation (1e-9 relative slack for the
    quadrature itself).
    """
    s_low = 0.0
    s_high = 0.0
    for lo, hi, _ in partition.windows():
        vals = _window_samples(m, lo, hi) ** 2
        s_low += float(np.min(vals)) * partition.epsilon
        s_high += float(np.max(vals)) * partition.epsilon
    a, b = partition.interval
    crit = [t for t in getattr(m, "critical_points", ()) if a < t < b]
    integral, _ = integrate.quad(
        lambda t: float(np.abs(_eval_symbol(m, np.array([t])))[0]) ** 2,
        a,
        b,
        points=crit or None,
        limit=400,
    )
    slack = 1e-9 * max(abs(integral), 1.0) + 1e-300
    if not (s_low <= integral + slack and integral <= s_high + slack):
        raise NumericalError(
            f"Darboux bracketing failed: s={s_low:.6e}, integral={integral:.6e}, S={s_high:.6e}"
        )
    return s_low, s_high


def integral_majorant(lam: float, mu: float, alpha: float) -> float:
    """Closed-form majorant of int_0^{4 lam} |tau^2-(lam+i mu)^2|^(-2 alpha) dtau.

    Equals (lam+mu)^(-2 alpha) mu^(1-2 alpha) ln^nu<lam/mu> with nu = 1 at
    alpha = 1/2 and nu = 0 for alpha > 1/2 (where the integral converges
    without a logarithm).
    """
    if not mu > 0:
        raise ValueError(f"requires mu > 0, got {mu}")
    if alpha < 0.5:
        raise ValueError(f"requires alpha >= 1/2, got {alpha}")
    nu = 1 if alpha == 0.5 else 0
    return (lam + mu) ** (-2.0 * alpha) * mu ** (1.0 - 2.0 * alpha) * math.log(angle(lam / mu)) ** nu


def resolvent_square_integral(lam: float, mu: float, alpha: float) -> float:
    """Adaptive quadrature companion to integral_majorant (ratio reporting)."""
    if not mu > 0:
        raise ValueError(f"requires mu > 0, got {mu}")
    z2 = complex(lam, mu) ** 2
    crit = math.sqrt(max(lam * lam - mu * mu, 0.0))
    points = [crit] if 0.0 < crit < 4.0 * lam else None
    value, _ = integrate.quad(
        lambda t: abs(t * t - z2) ** (-2.0 * alpha), 0.0, 4.0 * lam, points=points, limit=400
    )
    return value


def scalar_im_scan(lam: float, eps: float, grid_density: int = 2048) -> float:
    """min over tau in [lam, lam+eps] of (eps lam) Im (tau^2-(lam+i eps)^2)^(-1).

    The minimum is certified >= 1/10: on the window |tau^2 - lam^2 + eps^2|
    <= 4 eps lam, so the squared modulus is at most 20 eps^2 lam^2 while the
    imaginary part of the reciprocal carries 2 eps lam on top.
    """
    if not 0 < eps <= lam:
        raise ValueError(f"requires 0 < eps <= lam, got eps={eps}, lam={lam}")
    tau = np.linspace(lam, lam + eps, grid_density)
    values = eps * lam * np.imag((tau.astype(complex) ** 2 - complex(lam, eps) ** 2) ** -1.0)
    low = float(np.min(values))
    if low < 0.1:
        raise NumericalError(f"imaginary-part lower bound violated: {low:.6e} < 1/10")
    return low


# ---------------------------------------------------------------------------
# random-model corpus runners
# ---------------------------------------------------------------------------


def _corpus_instance(rng: np.random.Generator, dim_max: int, index: int):
    dim = int(rng.integers(6, dim_max + 1))
    lam = float(rng.uniform(2.0, 6.0))
    op = random_spectral_operator(rng, dim, lam_max=2.0 * lam, label=f"corpus[{index}]")
    eps = float(rng.uniform(lam / 6.0, min(1.5, lam)))
    return op, lam, eps


def run_multiplier_corpus(
    count: int,
    q: float,
    seed: int = 0,
    alphas: Sequence[float] = (0.5, 1.0),
    dim_max: int = 40,
    cfg: Optional[IterationConfig] = None,
) -> List[CheckResult]:
    """check_multiplier_lemma on random models with resolvent symbol pairs."""
    rng = np.random.default_rng(seed)
    results = []
    for i in range(count):
        op, lam, eps = _corpus_instance(rng, dim_max, i)
        mu = eps * float(rng.uniform(1.0, 3.0))
        a1 = alphas[i % len(alphas)]
        a2 = alphas[(i // len(alphas)) % len(alphas)]
        partition = Partition(lam, eps)
        results.append(
            check_multiplier_lemma(
                op,
                partition,
                q,
                resolvent_multiplier(lam, mu, a1),
                resolvent_multiplier(lam, mu, a2),
                cfg,
            )
        )
    return results


def run_prop32_corpus(
    count: int,
    q: float,
    seed: int = 0,
    items: Sequence[str] = _PROP_ITEMS,
    dim_max: int = 40,
    cfg: Optional[IterationConfig] = None,
) -> List[CheckResult]:
    """All requested estimates on a shared random corpus (shared profiles)."""
    rng = np.random.default_rng(seed)
    results = []
    for i in range(count):
        op, lam, eps = _corpus_instance(rng, dim_max, i)
        mu = eps * float(rng.uniform(1.0, 4.0))
        beta = float(rng.uniform(1.25, 2.5))
        profile = window_norm_profile(op, Partition(lam, eps), q, cfg)
        for item in items:
            results.append(
                check_prop32(
                    op, item, lam, eps, q, mu=mu, beta=beta, cfg=cfg, profile=profile
                )
            )
    return results
