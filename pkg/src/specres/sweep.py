"""Parameter sweeps and artifact plumbing.

Runs lambda grids of window/resolvent norms over models and exponents, fits
log-log slopes (the measured growth exponents), detects integer logarithmic
factors, and writes CSV / JSON / plot-data reports.  Also houses the model
registry used to build and cache operators from declarative parameters.

Quantities:

``cluster-2q``      ||P_[lam, lam+eps](A)||_{2->q}
``resolvent-q'q``   ||(A^2-(lam+i mu)^2)^{-1}||_{q'->q}, no spectral cutoff
``resolvent-2q``    same resolvent localized by P_[0,2lam], measured 2->q
``im-resolvent``    Im resolvent localized by P_[0,2lam], measured q'->q

The plain resolvent instantiates the uniform bound it scales like; the
localized variants match the window displays they instantiate, so their
growth exponents are comparable against the cluster bounds.
"""

import csv
import json
import math
import os
import re
import time
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .exponents import dual_exponent
from .manifolds import RoughMetricModel, build_rough, build_sphere, build_torus
from .model import (
    LinearMap,
    ResolventQuery,
    SpectralOperator,
    SpectralWindow,
    im_resolvent,
    project,
    resolvent_sq,
)
from .norms import IterationConfig, NormBracket, operator_norm

QUANTITIES = ("cluster-2q", "resolvent-q'q", "resolvent-2q", "im-resolvent")
REPORT_SCHEMA = "spectral-report/1"
MODEL_SCHEMA = "spectral-model/1"
CSV_COLUMNS = (
    "model",
    "quantity",
    "q",
    "lambda",
    "eps",
    "mu",
    "lower",
    "upper",
    "method",
    "seconds",
)


# ---------------------------------------------------------------------------
# schedules and configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Schedule:
    """A positive function of lambda: a constant level, the power lam^rho
    (value holds rho), or the slowly-vanishing 1/ln(2+lam)."""

    kind: str
    value: float = 1.0

    def __post_init__(self):
        if self.kind not in ("constant", "power", "log"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.kind == "constant" and not self.value > 0:
            raise ValueError("constant schedules must be positive")

    def at(self, lam: float) -> float:
        if self.kind == "constant":
            return self.value
        if self.kind == "power":
            return float(lam) ** self.value
        return 1.0 / math.log(2.0 + float(lam))

    @staticmethod
    def from_spec(spec) -> "Schedule":
        if isinstance(spec, Schedule):
            return spec
        if isinstance(spec, (int, float)) and not isinstance(spec, bool):
            return Schedule("constant", float(spec))
        if isinstance(spec, dict):
            work = dict(spec)
            kind = str(work.pop("kind", "constant"))
            value = work.pop("rho", work.pop("value", 1.0 if kind != "power" else 0.0))
            if work:
                raise ValueError(f"unused schedule keys: {sorted(work)}")
            return Schedule(kind, float(value))
        raise ValueError(f"cannot read a schedule from {spec!r}")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "value": self.value}


@dataclass(frozen=True)
class SweepConfig:
    """One sweep: a model spec, a quantity, exponents, and parameter grids.

    ``model`` holds the declarative rebuild parameters understood by
    build_model; ``lam_grid`` is None for the dyadic default inside the
    model's trusted range.  Grids must stay inside that range (checked when
    the sweep runs, once the model geometry is known).
    """

    model: dict
    quantity: str
    q_list: Tuple[float, ...]
    lam_grid: Optional[Tuple[float, ...]] = None
    eps: Schedule = Schedule("constant", 1.0)
    mu: Schedule = Schedule("constant", 1.0)
    seed: int = 0

    def __post_init__(self):
        if self.quantity not in QUANTITIES:
            raise ValueError(
                f"unknown quantity {self.quantity!r}; expected one of {QUANTITIES}"
            )
        object.__setattr__(self, "model", dict(self.model))
        object.__setattr__(self, "q_list", tuple(float(q) for q in self.q_list))
        if any(q < 2.0 for q in self.q_list):
            raise ValueError("sweep exponents require q >= 2")
        if self.lam_grid is not None:
            grid = tuple(float(x) for x in self.lam_grid)
            if any(lam < 1.0 for lam in grid):
                raise ValueError("lambda grids live in [1, trusted range]")
            object.__setattr__(self, "lam_grid", grid)
        object.__setattr__(self, "eps", Schedule.from_spec(self.eps))
        object.__setattr__(self, "mu", Schedule.from_spec(self.mu))

    @classmethod
    def from_dict(cls, data: dict) -> "SweepConfig":
        sweep = dict(data.get("sweep") or {})
        q_list = sweep.pop("q", ())
        if isinstance(q_list, (int, float)):
            q_list = (q_list,)
        lam = sweep.pop("lambda", None)
        return cls(
            model=dict(data.get("model") or {}),
            quantity=str(sweep.pop("quantity", "")),
            q_list=tuple(q_list),
            lam_grid=None if lam is None else tuple(lam),
            eps=Schedule.from_spec(sweep.pop("eps", 1.0)),
            mu=Schedule.from_spec(sweep.pop("mu", 1.0)),
            seed=int(data.get("seed", sweep.pop("seed", 0))),
        )

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "model": dict(self.model),
            "sweep": {
                "quantity": self.quantity,
                "q": list(self.q_list),
                "lambda": None if self.lam_grid is None else list(self.lam_grid),
                "eps": self.eps.to_dict(),
                "mu": self.mu.to_dict(),
            },
        }


@dataclass(frozen=True)
class SweepRecord:
    """One measured point: the bracket of one quantity at one (lam, q)."""

    lam: float
    eps: float
    mu: float
    q: float
    quantity: str
    bracket: NormBracket
    model: str
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "quantity": self.quantity,
            "q": self.q,
            "lambda": self.lam,
            "eps": self.eps,
            "mu": self.mu,
            "lower": self.bracket.lower,
            "upper": self.bracket.upper,
            "method": self.bracket.method,
            "seconds": self.seconds,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SweepRecord":
        return cls(
            lam=float(data["lambda"]),
            eps=float(data["eps"]),
            mu=float(data["mu"]),
            q=float(data["q"]),
            quantity=str(data["quantity"]),
            bracket=NormBracket(
                float(data["lower"]), float(data["upper"]), str(data["method"])
            ),
            model=str(data["model"]),
            seconds=float(data["seconds"]),
        )


@dataclass(frozen=True)
class FitResult:
    """A log-log line fit: slope, intercept, the max log-space residual over
    all fitted points, and the detected integer log power."""

    slope: float
    intercept: float
    residual: float
    log_power: int = 0

    def to_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "residual": self.residual,
            "log_power": self.log_power,
        }


# ---------------------------------------------------------------------------
# model registry
# ---------------------------------------------------------------------------


def build_model(params: Dict) -> SpectralOperator:
    """Build a model operator from declarative parameters.

    kinds: torus(n, K, G optional), sphere(L_max, n_theta/n_phi optional),
    rough(dim, N, s, delta, J).  Unknown or unused keys are rejected so
    config typos fail loudly.
    """
    work = dict(params)
    kind = str(work.pop("kind", ""))
    try:
        if kind == "torus":
            g = work.pop("G", None)
            op = build_torus(
                int(work.pop("n")), int(work.pop("K")), None if g is None else int(g)
            )
        elif kind == "sphere":
            n_theta = work.pop("n_theta", None)
            n_phi = work.pop("n_phi", None)
            op = build_sphere(
                int(work.pop("L_max")),
                None if n_theta is None else int(n_theta),
                None if n_phi is None else int(n_phi),
            )
        elif kind == "rough":
            op = build_rough(
                RoughMetricModel.make(
                    int(work.pop("dim")),
                    int(work.pop("N")),
                    float(work.pop("s")),
                    float(work.pop("delta")),
                    int(work.pop("J")),
                )
            )
        else:
            raise ValueError(f"unknown model kind {kind!r}")
    except KeyError as exc:
        raise ValueError(f"model kind {kind!r} is missing parameter {exc}") from None
    if work:
        raise TypeError(f"unused model parameters: {sorted(work)}")
    return op


def trusted_lambda(op: SpectralOperator) -> float:
    """The model's trusted spectral range; inf for geometry-free operators."""
    bound = getattr(op.geometry, "trusted_lambda", None)
    return float(bound) if bound is not None else math.inf


def default_lambda_grid(op: SpectralOperator) -> List[float]:
    """Dyadic lambda = 2^j, j >= 0, inside the model's trusted range."""
    top = trusted_lambda(op)
    if not math.isfinite(top):
        raise ValueError(
            "model carries no trusted range; pass an explicit lambda grid"
        )
    if top < 1.0:
        raise ValueError(f"trusted range {top:g} of {op.label} lies below lambda = 1")
    return [float(2**j) for j in range(int(math.floor(math.log2(top))) + 1)]


def snap_to_sphere(lams: Sequence[float], L_max: int) -> List[float]:
    """Nearest sqrt(l(l+1)), 1 <= l <= L_max, deduplicated and ascending;
    centers sweep windows on true sphere clusters."""
    snapped = set()
    for lam in lams:
        ell = int(round(0.5 * (math.sqrt(1.0 + 4.0 * float(lam) ** 2) - 1.0)))
        ell = min(max(ell, 1), int(L_max))
        snapped.add(math.sqrt(ell * (ell + 1.0)))
    return sorted(snapped)


def realify(op: SpectralOperator) -> SpectralOperator:
    """Rotate each eigenspace to a real orthonormal basis.

    Exact whenever eigenspaces are closed under conjugation, which holds for
    every model built here (real symmetric assembly; the torus exponentials
    pair k with -k at the same |k|).  All spectral quantities depend on the
    eigenspaces only, so the rotated model measures identically; it exists so
    complex bases fit the real JSON model schema.
    """
    vectors = op.eigenvectors
    if not np.iscomplexobj(vectors) or np.max(np.abs(vectors.imag)) == 0.0:
        return op
    taus = op.eigenvalues
    sqrt_w = np.sqrt(op.space.weights)[:, None]
    real_basis = np.zeros(vectors.shape, dtype=float)
    breaks = np.nonzero(~np.isclose(taus[1:], taus[:-1], rtol=1e-12, atol=1e-12))[0]
    start = 0
    for end in list(breaks + 1) + [len(taus)]:
        block = vectors[:, start:end]
        span = np.hstack([block.real, block.imag])
        u, s, _ = np.linalg.svd(sqrt_w * span, full_matrices=False)
        width = end - start
        if s[width - 1] <= 1e-8 * s[0]:
            raise ValueError(
                "eigenspace is not conjugation-closed; cannot rotate it real"
            )
        real_basis[:, start:end] = u[:, :width] / sqrt_w
        start = end
    return SpectralOperator.from_eigenpairs(
        op.space, taus, real_basis, label=op.label, geometry=op.geometry
    )


def save_model(op: SpectralOperator, params: Dict, path: str) -> str:
    doc = {
        "schema": MODEL_SCHEMA,
        "params": dict(params),
        "operator": realify(op).to_dict(),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")
    return path


def load_model(path: str) -> Tuple[SpectralOperator, Dict]:
    """Read a cached model.  The serialized operator does not carry geometry;
    rebuild from the stored params when a trusted range is needed."""
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("schema") != MODEL_SCHEMA:
        raise ValueError(f"{path} is not a model file (schema {doc.get('schema')!r})")
    return SpectralOperator.from_dict(doc["operator"]), dict(doc.get("params", {}))


def model_cache_path(params: Dict, directory: str) -> str:
    kind = str(params.get("kind", "model"))
    tags = [
        f"{key}{params[key]:g}"
        if isinstance(params[key], (int, float))
        else f"{key}{params[key]}"
        for key in sorted(params)
        if key != "kind"
    ]
    return os.path.join(directory, "_".join([kind] + tags) + ".json")


def ensure_cached(params: Dict, directory: str) -> Tuple[str, bool]:
    """Build and store the model unless its cache file already exists;
    returns (path, whether it was built now)."""
    path = model_cache_path(params, directory)
    if os.path.exists(path):
        return path, False
    os.makedirs(directory, exist_ok=True)
    save_model(build_model(params), params, path)
    return path, True


# ---------------------------------------------------------------------------
# running a sweep
# ---------------------------------------------------------------------------


def quantity_operator(
    op: SpectralOperator, quantity: str, lam: float, eps: float, mu: float, q: float
) -> Tuple[LinearMap, float, float]:
    """The (map, source exponent, target exponent) of one sweep point."""
    q = float(q)
    if quantity == "cluster-2q":
        return project(op, SpectralWindow(lam, lam + eps)), 2.0, q
    cutoff = SpectralWindow(0.0, 2.0 * lam)
    if quantity == "resolvent-q'q":
        return resolvent_sq(op, ResolventQuery(lam, mu)), float(dual_exponent(q)), q
    if quantity == "resolvent-2q":
        return resolvent_sq(op, ResolventQuery(lam, mu, cutoff=cutoff)), 2.0, q
    if quantity == "im-resolvent":
        query = ResolventQuery(lam, mu, cutoff=cutoff)
        return im_resolvent(op, query), float(dual_exponent(q)), q
    raise ValueError(f"unknown quantity {quantity!r}; expected one of {QUANTITIES}")


def run_sweep(config: SweepConfig) -> List[SweepRecord]:
    """One record per (q, lambda) grid point, deterministic for a fixed seed.

    The lambda grid is sorted and deduplicated; sphere grids are snapped to
    the nearest sqrt(l(l+1)) first.  Points beyond the model's trusted range
    are rejected rather than silently measured.
    """
    op = build_model(config.model)
    if config.lam_grid is not None:
        lams = list(config.lam_grid)
    else:
        lams = default_lambda_grid(op)
    top = trusted_lambda(op)
    if config.model.get("kind") == "sphere" and lams:
        # snapped grids sit on true clusters, where the retained spectral
        # decomposition is exact up to degree L_max; the usual L_max/2 margin
        # guards continuum reads at generic lambda, not these
        L_max = int(config.model["L_max"])
        lams = snap_to_sphere(lams, L_max)
        top = math.sqrt(L_max * (L_max + 1.0))
    lams = sorted({float(lam) for lam in lams})
    for lam in lams:
        if lam > top * (1.0 + 1e-12):
            raise ValueError(
                f"lambda {lam:g} lies beyond the trusted range {top:g} of {op.label}"
            )
    cfg = IterationConfig(seed=config.seed)
    records = []
    for q in config.q_list:
        for lam in lams:
            eps = config.eps.at(lam)
            mu = config.mu.at(lam)
            start = time.perf_counter()
            mapped, p_src, p_tgt = quantity_operator(
                op, config.quantity, lam, eps, mu, q
            )
            bracket = operator_norm(mapped, p_src, p_tgt, cfg)
            records.append(
                SweepRecord(
                    lam=lam,
                    eps=eps,
                    mu=mu,
                    q=float(q),
                    quantity=config.quantity,
                    bracket=bracket,
                    model=op.label,
                    seconds=time.perf_counter() - start,
                )
            )
    return records


# ---------------------------------------------------------------------------
# fitting
# ---------------------------------------------------------------------------


def _series_values(records: Sequence[SweepRecord], series: str) -> np.ndarray:
    if series == "mid":
        return np.array([r.bracket.midpoint for r in records])
    if series == "lower":
        return np.array([r.bracket.lower for r in records])
    if series == "upper":
        return np.array([r.bracket.upper for r in records])
    raise ValueError(f"unknown series {series!r}; use 'mid', 'lower' or 'upper'")


def fit_slope(records: Sequence[SweepRecord], series: str = "mid") -> FitResult:
    """Least-squares line through (ln lambda, ln y), y from the bracket.

    The residual is the max |fit - data| in log space over all points used.
    With at least four points above lambda = 1 the integer log power is
    detected against the fitted slope; otherwise it is reported as 0.
    """
    records = list(records)
    if len(records) < 3:
        raise ValueError("slope fitting needs at least 3 records")
    lams = np.array([r.lam for r in records])
    ys = _series_values(records, series)
    if np.ptp(lams) == 0.0:
        raise ValueError("slope fitting is degenerate: all lambda equal")
    if np.any(ys <= 0.0):
        raise ValueError("slope fitting needs positive values")
    xs = np.log(lams)
    logs = np.log(ys)
    slope, intercept = np.polyfit(xs, logs, 1)
    residual = float(np.max(np.abs(slope * xs + intercept - logs)))
    power = 0
    if len(records) >= 4 and float(np.min(lams)) > 1.0:
        power = _joint_log_power(xs, logs)
    return FitResult(float(slope), float(intercept), residual, power)


def _joint_log_power(xs: np.ndarray, logs: np.ndarray) -> int:
    """Best nu when the slope is refit per candidate: a drifting slope can
    absorb most of a log factor, so detection against the single fitted
    slope misses it; refitting the line under each (ln lambda)^nu correction
    leaves the factor visible.  Ties break toward smaller nu."""
    loglog = np.log(xs)
    best_nu, best_residual = 0, math.inf
    for nu in (0, 1, 2, 3):
        target = logs - nu * loglog
        line = np.polyfit(xs, target, 1)
        residual = float(np.max(np.abs(np.polyval(line, xs) - target)))
        if residual < best_residual:
            best_nu, best_residual = nu, residual
    return best_nu


def detect_log(
    records: Sequence[SweepRecord], slope: float, series: str = "mid"
) -> int:
    """Best integer nu in {0..3} fitting y * lambda^(-slope) ~ C (ln lambda)^nu.

    Residuals are compared in log space; exact ties break toward smaller nu.
    """
    records = list(records)
    if len(records) < 4:
        raise ValueError("log detection needs at least 4 records")
    lams = np.array([r.lam for r in records])
    ys = _series_values(records, series)
    if np.ptp(lams) == 0.0:
        raise ValueError("log detection is degenerate: all lambda equal")
    if np.any(lams <= 1.0):
        raise ValueError("log detection needs lambda > 1")
    if np.any(ys <= 0.0):
        raise ValueError("log detection needs positive values")
    base = np.log(ys) - slope * np.log(lams)
    loglog = np.log(np.log(lams))
    best_nu, best_residual = 0, math.inf
    for nu in (0, 1, 2, 3):
        shifted = base - nu * loglog
        residual = float(np.max(np.abs(shifted - np.mean(shifted))))
        if residual < best_residual:
            best_nu, best_residual = nu, residual
    return best_nu


def group_records(
    records: Sequence[SweepRecord],
) -> Dict[Tuple[str, str, float], List[SweepRecord]]:
    """Records keyed by (model, quantity, q), first-seen order preserved."""
    groups: Dict[Tuple[str, str, float], List[SweepRecord]] = {}
    for record in records:
        groups.setdefault((record.model, record.quantity, record.q), []).append(record)
    return groups


def fit_all(
    records: Sequence[SweepRecord], series: Sequence[str] = ("mid", "lower", "upper")
) -> List[Dict]:
    """One fit entry per (model, quantity, q, series) with enough usable
    points; series with nonpositive values (empty windows) are skipped."""
    entries = []
    for (model, quantity, q), group in group_records(records).items():
        if len({r.lam for r in group}) < 3:
            continue
        for name in series:
            if np.any(_series_values(group, name) <= 0.0):
                continue
            fit = fit_slope(group, name)
            entries.append(
                {"model": model, "quantity": quantity, "q": q, "series": name}
                | fit.to_dict()
            )
    return entries


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9.+-]+", "-", text).strip("-")


def emit(
    records: Sequence[SweepRecord],
    fits: Sequence[Dict],
    fmt: str,
    out: str,
    config: Optional[SweepConfig] = None,
    checks: Optional[Sequence[Dict]] = None,
) -> List[str]:
    """Write one artifact; returns the created file paths.

    csv       one file, columns exactly CSV_COLUMNS
    json      one schema-versioned file embedding config/records/fits/checks
    plotdata  a directory of whitespace (lambda, bracket midpoint) files,
              one per (model, quantity, q) series
    """
    if fmt == "csv":
        with open(out, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for record in records:
                row = record.to_dict()
                writer.writerow([row[column] for column in CSV_COLUMNS])
        return [out]
    if fmt == "json":
        doc = {
            "schema": REPORT_SCHEMA,
            "config": config.to_dict() if isinstance(config, SweepConfig) else config,
            "records": [record.to_dict() for record in records],
            "fits": [dict(fit) for fit in fits],
            "checks": [dict(check) for check in checks or ()],
        }
        with open(out, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return [out]
    if fmt == "plotdata":
        os.makedirs(out, exist_ok=True)
        paths = []
        for (model, quantity, q), group in group_records(records).items():
            name = f"{_slug(model)}__{_slug(quantity)}__q{q:g}.dat"
            path = os.path.join(out, name)
            with open(path, "w") as fh:
                for record in sorted(group, key=lambda r: r.lam):
                    fh.write(f"{record.lam!r} {record.bracket.midpoint!r}\n")
            paths.append(path)
        return paths
    raise ValueError(f"unknown report format {fmt!r}; use csv, json or plotdata")


def load_report(path: str) -> Dict:
    """Read a JSON report; 'records' come back as SweepRecord values."""
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("schema") != REPORT_SCHEMA:
        raise ValueError(f"{path} is not a report file (schema {doc.get('schema')!r})")
    doc["records"] = [SweepRecord.from_dict(row) for row in doc.get("records", [])]
    return doc
