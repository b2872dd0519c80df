"""Stability of resolvent bounds under potential perturbations.

The fixed-point argument for (A^2 + V - z^2)^{-1} runs through three
numbers: a base constant C0 bounding the free resolvent between the paired
spaces X'(lam) -> X(lam), a smallness measure M(lam) for multiplication by
V in the opposite direction, and a threshold Lambda0 past which
M(lam) * C0 <= c < 1.  Beyond the threshold the iteration

    R_V^(j+1) = R - R V R_V^(j),        R_V^(0) = R,

converges geometrically and the perturbed resolvent obeys C0 / (1 - c).

X(lam) is the intersection of the flattened spaces W^{1/2,2}_lam and
W^{s(q),q}_lam and X'(lam) is the sum of their duals (norms.SpaceSpec).
Perturbed operators are assembled in mode coordinates: the potential is
compressed onto the model's eigenbasis, where every solve and every
diagnostic is an exact dense-matrix computation and the L^2 operator norm
of a mode matrix is its spectral norm.

The fractional pipeline of order alpha reuses everything verbatim: replace
the model by fractional_power(op, alpha/2) and the spectral parameter by
(lam + i)^alpha, so that "A^2 - z^2" reads "A^alpha - (lam+i)^alpha".
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from .exponents import dual_exponent, s_of_q, sigma
from .inequalities import check_prop32
from .manifolds import Potential, RoughMetricModel, SphereModel, TorusModel
from .model import (
    LinearMap,
    MultiplierMap,
    NumericalError,
    PointwiseMap,
    ResolventQuery,
    SpectralOperator,
    compose,
    flattened_sobolev,
    fractional_power,
    resolvent_sq,
)
from .norms import (
    IterationConfig,
    NormBracket,
    SpaceSpec,
    lp_norm,
    op_norm_composite,
    operator_norm,
)


def _model_dimension(op: SpectralOperator, n: Optional[int] = None) -> int:
    """The dimension entering the exponent bookkeeping, from the geometry
    when one is attached."""
    if n is not None:
        return int(n)
    geom = op.geometry
    if isinstance(geom, TorusModel):
        return geom.n
    if isinstance(geom, SphereModel):
        return 2
    if isinstance(geom, RoughMetricModel):
        return geom.dim
    raise ValueError("model carries no geometry; pass the dimension n explicitly")


def _dense_basis(op: SpectralOperator) -> np.ndarray:
    """Materialize the (size, rank) eigenvector matrix column by column."""
    eye = np.eye(op.rank)
    out = np.empty((op.space.size, op.rank), dtype=complex)
    for j in range(op.rank):
        out[:, j] = op.transform.synthesis(eye[j])
    return out


def _compress(op: SpectralOperator, basis: np.ndarray, values: np.ndarray) -> np.ndarray:
    """<V e_j, e_i>_w: multiplication by V squeezed onto the eigenbasis span.
    Hermitian whenever V is real."""
    weighted = (op.space.weights * values)[:, None] * basis
    return np.conj(basis).T @ weighted


class ModeMatrixMap(LinearMap):
    """A dense matrix acting in an operator's eigenbasis coordinates.

    apply synthesizes matrix @ analysis(u); directions outside the span are
    annihilated, exactly as with the multiplier maps.
    """

    def __init__(self, op: SpectralOperator, matrix: np.ndarray, label: str = ""):
        matrix = np.asarray(matrix)
        if matrix.shape != (op.rank, op.rank):
            raise ValueError("mode matrix must be rank x rank for the operator")
        self.op = op
        self.matrix = matrix
        self.space = op.space
        self.label = label or "mode-matrix"

    def apply(self, u: np.ndarray) -> np.ndarray:
        return self.op.transform.synthesis(self.matrix @ self.op.transform.analysis(u))

    def adjoint_apply(self, u: np.ndarray) -> np.ndarray:
        return self.op.transform.synthesis(
            np.conj(self.matrix).T @ self.op.transform.analysis(u)
        )


# ---------------------------------------------------------------------------
# the paired spaces and the two norm constants
# ---------------------------------------------------------------------------


def energy_spaces(
    op: SpectralOperator, lam: float, q, n: Optional[int] = None
) -> Tuple[SpaceSpec, SpaceSpec]:
    """The pair (X(lam), X'(lam)) attached to exponent q in dimension n.

    X is the intersection W^{1/2,2}_lam and W^{s(q),q}_lam; X' is the sum of
    the dual smoothness/integrability pair.  The free resolvent is bounded
    X' -> X uniformly in lam; multiplication by a potential goes X -> X'.
    """
    n = _model_dimension(op, n)
    q = float(q)
    s = float(s_of_q(n, q))
    inner = SpaceSpec.intersection(
        SpaceSpec.flattened(0.5, 2.0, lam, op),
        SpaceSpec.flattened(s, q, lam, op),
    )
    outer = SpaceSpec.sum_of(
        SpaceSpec.flattened(-0.5, 2.0, lam, op),
        SpaceSpec.flattened(-s, float(dual_exponent(q)), lam, op),
    )
    return inner, outer


def resolvent_xnorm(
    op: SpectralOperator,
    lam: float,
    q,
    n: Optional[int] = None,
    mu: float = 1.0,
    cfg: Optional[IterationConfig] = None,
) -> NormBracket:
    """Bracket of ||(A^2 - (lam + i mu)^2)^{-1}||_{X'(lam) -> X(lam)}."""
    inner, outer = energy_spaces(op, lam, q, n)
    T = resolvent_sq(op, ResolventQuery(lam, mu))
    return op_norm_composite(T, outer, inner, cfg)


def c0_estimate(
    op: SpectralOperator,
    q,
    lam_grid,
    n: Optional[int] = None,
    mu: float = 1.0,
    cfg: Optional[IterationConfig] = None,
) -> float:
    """Base resolvent constant: the grid maximum of the X'(lam) -> X(lam)
    upper bracket.

    Monotone under grid refinement by construction (more points can only
    raise the max).  Grids should stay inside the geometry's trusted range
    when the model carries one.
    """
    lams = np.atleast_1d(np.asarray(lam_grid, dtype=float))
    if lams.size == 0:
        raise ValueError("c0_estimate needs a non-empty lambda grid")
    return max(
        resolvent_xnorm(op, float(lam), q, n=n, mu=mu, cfg=cfg).upper for lam in lams
    )


@dataclass(frozen=True)
class PotentialNormEstimate:
    """Upper bracket for ||V||_{X(lam) -> X'(lam)} plus its scaling surrogate.

    bound = min(via_l2, via_lq).  The L^2 route sandwiches V between two
    (lam^2 + A^2)^{-1/4} weights and takes the 2->2 norm; the L^q route pays
    ||V||_{L^p} (1/p = 1 - 2/q, the Hölder partner of q and q') times the
    q->q and q'->q' norms of the smoothing weight (lam^2 + A^2)^{-s/2},
    bounded by interpolating its exact 2->2 norm against the weighted
    kernel row sums.  surrogate = lam^(2 sigma(q) - 1) ||V||_{L^p}, the
    scaling the true norm follows.
    """

    bound: float
    surrogate: float
    via_l2: float
    via_lq: float
    lam: float
    q: float


def _qq_upper(mult: MultiplierMap, q: float) -> float:
    """Upper bound for ||m(A)||_{q -> q} with 2 <= q: interpolate the exact
    2->2 norm of the multiplier against its sup-to-sup norm (the maximal
    weighted kernel row sum).  Equals the q'->q' norm by self-adjointness
    and duality."""
    exact_22 = float(np.max(np.abs(mult.values))) if mult.values.size else 0.0
    if not q > 2.0:
        return exact_22
    basis = _dense_basis(mult.op)
    kernel = (basis * mult.values[None, :]) @ (
        np.conj(basis).T * mult.op.space.weights[None, :]
    )
    sup_to_sup = float(np.max(np.sum(np.abs(kernel), axis=1)))
    theta = 2.0 / q
    return exact_22**theta * sup_to_sup ** (1.0 - theta)


def m_of_lambda(
    V: Potential,
    op: SpectralOperator,
    lam: float,
    q,
    n: Optional[int] = None,
    cfg: Optional[IterationConfig] = None,
) -> PotentialNormEstimate:
    """Upper bracket of the multiplication norm ||V||_{X(lam) -> X'(lam)}.

    Two independent routes are combined by min; each drops one component of
    the intersection/sum pair, so each is a genuine upper bound.  The
    returned surrogate is the plain-scaling comparison value
    lam^(2 sigma(q) - 1) ||V||_{L^p}.
    """
    if np.iscomplexobj(V.values):
        raise ValueError("potential must be real-valued")
    if not lam >= 1:
        raise ValueError("flattened spaces require lambda >= 1")
    n = _model_dimension(op, n)
    q = float(q)
    s = float(s_of_q(n, q))
    p = q / (q - 2.0)
    norm_p = lp_norm(V.values, p, op.space.weights)
    surrogate = lam ** (2.0 * sigma(n, q) - 1.0) * norm_p
    if not np.any(V.values):
        return PotentialNormEstimate(0.0, 0.0, 0.0, 0.0, lam, q)
    quarter = flattened_sobolev(op, lam, -0.5)
    sandwich = compose(quarter, PointwiseMap(op.space, V.values), quarter)
    via_l2 = operator_norm(sandwich, 2, 2, cfg).upper
    smoothing = flattened_sobolev(op, lam, -s)
    weight_qq = _qq_upper(smoothing, q)
    via_lq = weight_qq**2 * norm_p
    return PotentialNormEstimate(min(via_l2, via_lq), surrogate, via_l2, via_lq, lam, q)


def lambda0(C0: float, c: float, V_norm: float, sigma_q: float) -> float:
    """Closed-form threshold ((C0 * V_norm) / c)^(1 / (1 - 2 sigma)).

    Solves lam^(2 sigma - 1) * V_norm * C0 = c for lam, clamped to the
    admissible range lam >= 1.  Requires 2 sigma(q) < 1; at or above that
    exponent the threshold does not close and the splitting path applies.
    """
    if not C0 > 0:
        raise ValueError("C0 must be positive")
    if not 0.0 < c < 1.0:
        raise ValueError("contraction parameter c must lie in (0, 1)")
    if not V_norm >= 0:
        raise ValueError("potential norm must be nonnegative")
    if not 2.0 * sigma_q < 1.0:
        raise ValueError(
            "threshold needs 2*sigma(q) < 1; split the potential instead"
        )
    if V_norm == 0.0:
        return 1.0
    return max(1.0, ((C0 * V_norm) / c) ** (1.0 / (1.0 - 2.0 * sigma_q)))


def potential_split(
    V: Potential, alpha0: float, op: SpectralOperator
) -> Tuple[Potential, Potential]:
    """Split V = V_big + V_small with V_big = V on {|V| > alpha0}.

    The parts keep V's integrability exponent; their norms are recomputed
    in the model's quadrature.  By construction ||V_small||_inf <= alpha0
    and the identity V_big + V_small = V holds pointwise and exactly.
    """
    if not alpha0 >= 0:
        raise ValueError("split level alpha0 must be nonnegative")
    mask = np.abs(V.values) > alpha0
    big_values = np.where(mask, V.values, 0.0)
    small_values = V.values - big_values
    w = op.space.weights
    big = Potential(
        values=big_values,
        p=V.p,
        norm=lp_norm(big_values, V.p, w),
        kind=f"{V.kind}|big",
    )
    small = Potential(
        values=small_values,
        p=V.p,
        norm=lp_norm(small_values, V.p, w),
        kind=f"{V.kind}|small",
    )
    return big, small


# ---------------------------------------------------------------------------
# perturbed operators and resolvents
# ---------------------------------------------------------------------------


def perturbed_operator(
    op: SpectralOperator, V: Potential, validate: bool = True
) -> SpectralOperator:
    """Re-diagonalize A^2 + V on the eigenbasis span.

    The compressed potential matrix is Hermitian for real V, so the new
    model is self-adjoint with W-orthonormal grid eigenvectors.  Raises if
    A^2 + V fails to be nonnegative on the span (add a constant to V
    first); roundoff-level negative eigenvalues are clipped to zero.
    """
    if np.iscomplexobj(V.values):
        raise ValueError("potential must be real-valued")
    basis = _dense_basis(op)
    ham = np.diag(op.eigenvalues.astype(complex) ** 2) + _compress(op, basis, V.values)
    evals, modes = np.linalg.eigh(ham)
    floor = -1e-9 * max(1.0, float(np.max(np.abs(evals))))
    if evals[0] < floor:
        raise ValueError(
            "perturbed operator has negative spectrum; add a constant to the potential"
        )
    evals = np.clip(evals, 0.0, None)
    label = f"{op.label}+{V.kind}" if op.label else f"perturbed({V.kind})"
    return SpectralOperator.from_eigenpairs(
        op.space,
        np.sqrt(evals),
        basis @ modes,
        geometry=op.geometry,
        label=label,
        validate=validate,
    )


def _parse_method(method: str, k: int) -> Tuple[str, int]:
    found = re.fullmatch(r"neumann(?:\((\d+)\))?", method)
    if found:
        return "neumann", int(found.group(1)) if found.group(1) else int(k)
    if method == "direct":
        return "direct", 0
    raise ValueError(f"unknown method {method!r}; use 'direct' or 'neumann(k)'")


def perturbed_resolvent(
    op: SpectralOperator,
    V: Potential,
    lam: float,
    method: str = "direct",
    k: int = 8,
    mu: float = 1.0,
    z2: Optional[complex] = None,
    mc0: Optional[float] = None,
    cfg: Optional[IterationConfig] = None,
) -> Tuple[LinearMap, Dict]:
    """(A^2 + V - z^2)^{-1} on the eigenbasis span, z = lam + i mu.

    'direct' solves the compressed linear system; 'neumann' or 'neumann(k)'
    runs k steps of R_V^(j+1) = R - R V R_V^(j) from R_V^(0) = R and records
    its spectral-norm distance to the direct solution after every step.
    Pass mc0 = M(lam) * C0 to attach the geometric tail estimate
    mc0^k / (1 - mc0); mc0 >= 1 flags divergence without failing — the
    direct map is still returned inside the diagnostics.  z2 overrides the
    spectral parameter, which is how the fractional pipeline reuses this
    routine.
    """
    kind, k = _parse_method(method, k)
    if np.iscomplexobj(V.values):
        raise ValueError("potential must be real-valued")
    z2 = complex(z2) if z2 is not None else complex((lam + 1j * mu) ** 2)
    basis = _dense_basis(op)
    compressed = _compress(op, basis, V.values)
    shifted = np.diag(op.eigenvalues.astype(complex) ** 2 - z2) + compressed
    eye = np.eye(op.rank)
    try:
        direct = np.linalg.solve(shifted, eye)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"perturbed system is singular at z^2 = {z2}") from exc
    residual = float(np.linalg.norm(shifted @ direct - eye, 2))
    if not np.all(np.isfinite(direct)) or residual > 1e-6:
        raise NumericalError(f"perturbed system is numerically singular at z^2 = {z2}")
    free = 1.0 / (op.eigenvalues.astype(complex) ** 2 - z2)
    contraction = float(np.linalg.norm(free[:, None] * compressed, 2))
    diagnostics: Dict = {
        "z2": z2,
        "method": "direct" if kind == "direct" else f"neumann({k})",
        "contraction": contraction,
        "residual": residual,
    }
    direct_map = ModeMatrixMap(op, direct, label=f"R_V(direct, lam={lam:g})")
    if kind == "direct":
        return direct_map, diagnostics
    if mc0 is not None:
        diagnostics["mc0"] = float(mc0)
        diagnostics["geometric_estimate"] = (
            mc0**k / (1.0 - mc0) if mc0 < 1.0 else math.inf
        )
    diagnostics["divergent"] = not (mc0 if mc0 is not None else contraction) < 1.0
    current = np.diag(free)
    errors = [float(np.linalg.norm(current - direct, 2))]
    for _ in range(k):
        current = np.diag(free) - free[:, None] * (compressed @ current)
        errors.append(float(np.linalg.norm(current - direct, 2)))
    diagnostics["errors_by_step"] = errors
    diagnostics["observed_error"] = errors[-1]
    diagnostics["direct_map"] = direct_map
    neumann = ModeMatrixMap(op, current, label=f"R_V(neumann {k}, lam={lam:g})")
    return neumann, diagnostics


def fractional_resolvent(
    op: SpectralOperator,
    V: Potential,
    lam: float,
    alpha: float,
    method: str = "direct",
    k: int = 8,
    mc0: Optional[float] = None,
) -> Tuple[LinearMap, Dict]:
    """(A^alpha + V - (lam + i)^alpha)^{-1} via the quadratic pipeline on
    the half-power model fractional_power(op, alpha/2)."""
    if not alpha > 0:
        raise ValueError("fractional order alpha must be positive")
    half = fractional_power(op, alpha / 2.0)
    return perturbed_resolvent(
        half, V, lam, method=method, k=k, z2=(lam + 1j) ** alpha, mc0=mc0
    )


# ---------------------------------------------------------------------------
# the full pipeline
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StabilityReport:
    """Outcome of the perturbation pipeline on one model/potential pair.

    M_of_Lambda holds grid samples (Lambda, sup over grid lam >= Lambda of
    the M(lam) bracket); Lambda0 is the first grid point where that sup
    drops below c / C0 (inf when it never does); neumann_bound = C0/(1-c)
    is the certified perturbed-resolvent bound past Lambda0.
    """

    C0: float
    c: float
    M_of_Lambda: Tuple[Tuple[float, float], ...]
    Lambda0: float
    neumann_bound: float
    verified: bool
    details: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not 0.0 < self.c < 1.0:
            raise ValueError("contraction parameter c must lie in (0, 1)")
        if not self.Lambda0 >= 1.0:
            raise ValueError("Lambda0 must be >= 1")
        expected = self.C0 / (1.0 - self.c)
        if not math.isclose(self.neumann_bound, expected, rel_tol=1e-9):
            raise ValueError("neumann_bound must equal C0 / (1 - c)")

    def to_dict(self) -> dict:
        clean = {
            key: value
            for key, value in self.details.items()
            if key != "cluster" or isinstance(value, dict)
        }
        return {
            "C0": self.C0,
            "c": self.c,
            "M_of_Lambda": [[lam, m] for lam, m in self.M_of_Lambda],
            "Lambda0": self.Lambda0,
            "neumann_bound": self.neumann_bound,
            "verified": self.verified,
            "details": clean,
        }


def stability_check(
    op: SpectralOperator,
    V: Potential,
    q,
    lam_grid,
    c: float = 0.5,
    n: Optional[int] = None,
    mu: float = 1.0,
    tol: float = 0.05,
    cluster_eps: float = 1.0,
    cfg: Optional[IterationConfig] = None,
) -> StabilityReport:
    """Run the perturbation pipeline on a lambda grid.

    Computes C0 and the M(lam) samples, locates the first grid point whose
    suffix-sup satisfies M(Lambda) <= c / C0, and verifies at every grid
    lam >= Lambda0 that the perturbed resolvent's certified lower bracket
    stays below C0/(1-c) * (1 + tol).  The perturbed cluster bound is then
    re-derived at the last verified lam by running the imaginary-part
    window check on the re-diagonalized operator.  Grid points are
    independent; the report is assembled in one pass at the end.
    """
    lams = sorted(float(x) for x in np.atleast_1d(np.asarray(lam_grid, dtype=float)))
    if not lams:
        raise ValueError("stability_check needs a non-empty lambda grid")
    if not 0.0 < c < 1.0:
        raise ValueError("contraction parameter c must lie in (0, 1)")
    dim = _model_dimension(op, n)
    C0 = c0_estimate(op, q, lams, n=dim, mu=mu, cfg=cfg)
    estimates = [m_of_lambda(V, op, lam, q, n=dim, cfg=cfg) for lam in lams]
    bounds = np.array([est.bound for est in estimates])
    suffix = np.maximum.accumulate(bounds[::-1])[::-1]
    m_samples = tuple((lam, float(m)) for lam, m in zip(lams, suffix))
    qualified = [i for i, (_, m) in enumerate(m_samples) if m * C0 <= c]
    Lambda0 = max(1.0, m_samples[qualified[0]][0]) if qualified else math.inf
    bound = C0 / (1.0 - c)
    verified = bool(qualified)
    samples = []
    for i in qualified:
        lam = lams[i]
        pert, diag = perturbed_resolvent(op, V, lam, method="direct", mu=mu)
        inner, outer = energy_spaces(op, lam, q, dim)
        br = op_norm_composite(pert, outer, inner, cfg)
        ok = br.lower <= bound * (1.0 + tol)
        verified = verified and ok
        samples.append(
            {
                "lam": lam,
                "lower": br.lower,
                "upper": br.upper,
                "contraction": diag["contraction"],
                "passed": ok,
            }
        )
    details = {
        "q": float(q),
        "n": dim,
        "mu": mu,
        "tol": tol,
        "resolvent_samples": samples,
        "m_estimates": [
            {"lam": est.lam, "bound": est.bound, "surrogate": est.surrogate}
            for est in estimates
        ],
    }
    if qualified:
        lam_star = lams[qualified[-1]]
        cluster = check_prop32(
            perturbed_operator(op, V), "3.3", lam_star, float(cluster_eps), q, cfg=cfg
        )
        verified = verified and cluster.passed
        details["cluster"] = cluster.to_dict()
    return StabilityReport(
        C0=C0,
        c=c,
        M_of_Lambda=m_samples,
        Lambda0=Lambda0,
        neumann_bound=bound,
        verified=verified,
        details=details,
    )
