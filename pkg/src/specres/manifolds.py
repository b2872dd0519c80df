"""Concrete model geometries.

Three families of exactly-or-nearly diagonalizable operators:

* flat tori T^n with the lattice Fourier basis (exact diagonalization,
  FFT-backed analysis/synthesis so large grids never materialize a basis),
* the round 2-sphere with a real spherical-harmonic basis on a
  Gauss-Legendre x uniform-longitude quadrature grid (fast transform via an
  FFT in longitude and per-order Legendre matrices; the normalized
  associated-Legendre recurrence is implemented here),
* divergence-form operators -D^-(a D^+) on periodic grids with
  Weierstrass-type C^s coefficient fields, diagonalized densely.

Every built operator carries a ``geometry`` record with the construction
parameters and the trusted spectral range (the sector where the discrete
model's scaling is read as the continuum's).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .model import (
    MATERIALIZE_LIMIT,
    EigenbasisTransform,
    FiniteMeasureSpace,
    NumericalError,
    SpectralOperator,
)
from .norms import lp_norm

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# flat torus
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TorusModel:
    """Lattice data of a flat torus model: modes k with |k|_inf <= K on a
    uniform grid of G points per axis."""

    n: int
    K: int
    G: int
    modes: np.ndarray = field(repr=False)  # (M, n) integer lattice points

    @property
    def trusted_lambda(self) -> float:
        return self.K / 4.0

    def coordinates(self) -> np.ndarray:
        """Grid coordinates in [0, 2pi)^n, shape (G^n, n)."""
        axes = np.indices((self.G,) * self.n).reshape(self.n, -1).T
        return axes * (TWO_PI / self.G)

    def distances_from(self, index: int = 0) -> np.ndarray:
        coords = self.coordinates()
        delta = np.abs(coords - coords[index])
        delta = np.minimum(delta, TWO_PI - delta)
        return np.sqrt(np.sum(delta**2, axis=1))

    @property
    def cell(self) -> float:
        return TWO_PI / self.G

    def to_params(self) -> dict:
        return {"kind": "torus", "n": self.n, "K": self.K, "G": self.G}


class TorusTransform(EigenbasisTransform):
    """Sampled exponentials e_k(x) = (2pi)^(-n/2) exp(i k.x) through the FFT.

    The grid resolves all retained mode differences (G > 2K), so the discrete
    quadrature orthogonality is exact.
    """

    def __init__(self, n: int, K: int, G: int, modes: np.ndarray):
        self.n = n
        self.K = K
        self.G = G
        self.modes = modes
        self.size = G**n
        self.rank = modes.shape[0]
        self._spectral_index = tuple((modes % G).T)
        self._analysis_scale = TWO_PI ** (n / 2.0) / G**n
        self._synthesis_scale = G**n / TWO_PI ** (n / 2.0)

    def analysis(self, u: np.ndarray) -> np.ndarray:
        grid = np.asarray(u).reshape((self.G,) * self.n)
        return np.fft.fftn(grid)[self._spectral_index] * self._analysis_scale

    def synthesis(self, c: np.ndarray) -> np.ndarray:
        spectral = np.zeros((self.G,) * self.n, dtype=complex)
        spectral[self._spectral_index] = c
        return np.fft.ifftn(spectral).ravel() * self._synthesis_scale

    def materialize(self) -> np.ndarray:
        if self.size * self.rank > MATERIALIZE_LIMIT:
            raise MemoryError("torus eigenbasis too large to materialize")
        coords = np.indices((self.G,) * self.n).reshape(self.n, -1).T * (TWO_PI / self.G)
        return np.exp(1j * coords @ self.modes.T) / TWO_PI ** (self.n / 2.0)

    def kernel_diag_max(self, sq_values: np.ndarray) -> float:
        # sum_k m_k |e_k(x)|^2 is x-independent on the torus
        return float(np.sum(sq_values)) / TWO_PI**self.n


def build_torus(n: int, K: int, G: Optional[int] = None) -> SpectralOperator:
    """Flat torus T^n: modes |k|_inf <= K, A-eigenvalues |k|_2, grid G^n.

    G >= 4K+1 keeps products of retained modes alias-free in the quadrature.
    """
    if n < 1 or K < 0:
        raise ValueError("need dimension >= 1 and cutoff K >= 0")
    if G is None:
        G = 4 * K + 1
    if G < 4 * K + 1:
        raise ValueError(f"grid too coarse: G={G} < 4K+1={4 * K + 1}")
    axes = np.arange(-K, K + 1)
    modes = np.stack(np.meshgrid(*([axes] * n), indexing="ij"), axis=-1).reshape(-1, n)
    normsq = np.sum(modes**2, axis=1)
    order = np.lexsort(tuple(modes.T[::-1]) + (normsq,))
    modes = modes[order]
    eigenvalues = np.sqrt(np.sum(modes**2, axis=1).astype(float))
    space = FiniteMeasureSpace(np.full(G**n, (TWO_PI / G) ** n))
    transform = TorusTransform(n, K, G, modes)
    return SpectralOperator(
        space,
        eigenvalues,
        transform,
        label=f"torus{n}d-K{K}-G{G}",
        geometry=TorusModel(n=n, K=K, G=G, modes=modes),
    )


# ---------------------------------------------------------------------------
# round 2-sphere
# ---------------------------------------------------------------------------


def normalized_legendre_table(L: int, m: int, x: np.ndarray) -> np.ndarray:
    """Fully normalized associated Legendre values Ptilde_l^m(x), l = m..L.

    Normalization: 2pi * integral_{-1}^{1} Ptilde_l^m(x)^2 dx = 1, so that
    Y_{l0} = Ptilde_l^0 and Y_{lm} = sqrt(2) Ptilde_l^m {cos,sin}(m phi) are
    orthonormal on the unit sphere.  Standard three-term recurrence, stable
    in this normalization for the degrees used here.
    """
    x = np.asarray(x, dtype=float)
    out = np.zeros((L - m + 1, x.size))
    # diagonal start P_m^m
    pmm = np.full(x.size, 1.0 / math.sqrt(4.0 * math.pi))
    sin_theta = np.sqrt(np.maximum(0.0, 1.0 - x * x))
    for k in range(1, m + 1):
        pmm = pmm * math.sqrt((2 * k + 1) / (2.0 * k)) * sin_theta
    out[0] = pmm
    if L == m:
        return out
    out[1] = math.sqrt(2 * m + 3.0) * x * pmm
    for l in range(m + 2, L + 1):
        a = math.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
        b = math.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
        out[l - m] = a * (x * out[l - m - 1] - b * out[l - m - 2])
    return out


@dataclass(frozen=True)
class SphereModel:
    """Round 2-sphere data: degree cutoff and quadrature layout."""

    L_max: int
    n_theta: int
    n_phi: int
    degrees: np.ndarray = field(repr=False)  # degree l of each coefficient

    @property
    def trusted_lambda(self) -> float:
        return self.L_max / 2.0

    @property
    def cell(self) -> float:
        return math.pi / self.n_theta

    def to_params(self) -> dict:
        return {
            "kind": "sphere",
            "L_max": self.L_max,
            "n_theta": self.n_theta,
            "n_phi": self.n_phi,
        }


class SphereTransform(EigenbasisTransform):
    """Real spherical harmonics on a Gauss-Legendre x uniform-phi grid.

    Coefficients are ordered degree-by-degree: for each l the zonal mode
    first, then (cos, sin) pairs for m = 1..l.  Analysis runs an FFT in
    longitude followed by per-order Legendre matrices; adjoint structure is
    exact because the quadrature integrates products of retained harmonics
    exactly.
    """

    def __init__(self, L_max: int, n_theta: int, n_phi: int):
        self.L_max = L_max
        self.n_theta = n_theta
        self.n_phi = n_phi
        self.size = n_theta * n_phi
        self.rank = (L_max + 1) ** 2
        x, w = np.polynomial.legendre.leggauss(n_theta)
        self.cos_theta = x
        self.theta_weights = w  # sums to 2
        self.dphi = TWO_PI / n_phi
        self.phi = np.arange(n_phi) * self.dphi
        # per-order Legendre tables and coefficient bookkeeping
        self._p_tables = [
            normalized_legendre_table(L_max, m, x) for m in range(L_max + 1)
        ]
        degrees = []
        orders = []
        kinds = []  # 0 zonal, 1 cos, 2 sin
        for l in range(L_max + 1):
            degrees.append(l)
            orders.append(0)
            kinds.append(0)
            for m in range(1, l + 1):
                degrees.extend([l, l])
                orders.extend([m, m])
                kinds.extend([1, 2])
        self.degrees = np.asarray(degrees)
        self.orders = np.asarray(orders)
        self.kinds = np.asarray(kinds)
        # index of coefficient (l, m, kind) in the flat ordering
        self._slot = {}
        for i, (l, m, k) in enumerate(zip(self.degrees, self.orders, self.kinds)):
            self._slot[(int(l), int(m), int(k))] = i
        self._idx_zonal = np.asarray(
            [self._slot[(l, 0, 0)] for l in range(L_max + 1)]
        )
        self._idx_cos = [
            np.asarray([self._slot[(l, m, 1)] for l in range(m, L_max + 1)])
            for m in range(1, L_max + 1)
        ]
        self._idx_sin = [
            np.asarray([self._slot[(l, m, 2)] for l in range(m, L_max + 1)])
            for m in range(1, L_max + 1)
        ]

    def index_of(self, l: int, m: int = 0, kind: int = 0) -> int:
        return self._slot[(l, m, kind)]

    @staticmethod
    def _real_if_clean(out: np.ndarray) -> np.ndarray:
        peak_im = float(np.max(np.abs(out.imag)))
        if peak_im <= 1e-13 * max(1.0, float(np.max(np.abs(out.real)))):
            return out.real.copy()
        return out

    def analysis(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u)
        g = u.reshape(self.n_theta, self.n_phi)
        F = np.fft.fft(g, axis=1)
        out = np.zeros(self.rank, dtype=complex)
        wth = self.theta_weights
        out[self._idx_zonal] = self._p_tables[0] @ (wth * (self.dphi * F[:, 0]))
        root2 = math.sqrt(2.0)
        for m in range(1, self.L_max + 1):
            tab = self._p_tables[m]  # (L-m+1, n_theta)
            f_plus = F[:, m]
            f_minus = F[:, self.n_phi - m]
            i_cos = 0.5 * self.dphi * (f_plus + f_minus)
            i_sin = 0.5j * self.dphi * (f_plus - f_minus)
            out[self._idx_cos[m - 1]] = root2 * (tab @ (wth * i_cos))
            out[self._idx_sin[m - 1]] = root2 * (tab @ (wth * i_sin))
        if np.iscomplexobj(u):
            return out
        return self._real_if_clean(out)

    def synthesis(self, c: np.ndarray) -> np.ndarray:
        c = np.asarray(c)
        spectral = np.zeros((self.n_theta, self.n_phi), dtype=complex)
        half = math.sqrt(2.0) / 2.0
        spectral[:, 0] = self._p_tables[0].T @ c[self._idx_zonal]
        for m in range(1, self.L_max + 1):
            tab = self._p_tables[m]
            prof_cos = tab.T @ c[self._idx_cos[m - 1]]
            prof_sin = tab.T @ c[self._idx_sin[m - 1]]
            spectral[:, m] += half * (prof_cos - 1j * prof_sin)
            spectral[:, self.n_phi - m] += half * (prof_cos + 1j * prof_sin)
        out = np.fft.ifft(spectral * self.n_phi, axis=1).ravel()
        if np.iscomplexobj(c):
            return out
        return self._real_if_clean(out)

    def materialize(self) -> np.ndarray:
        if self.size * self.rank > MATERIALIZE_LIMIT:
            raise MemoryError("spherical harmonic basis too large to materialize")
        cols = np.zeros((self.size, self.rank))
        for i in range(self.rank):
            c = np.zeros(self.rank)
            c[i] = 1.0
            cols[:, i] = self.synthesis(c).real
        return cols

    def kernel_diag_max(self, sq_values: np.ndarray) -> float:
        """Exact via the addition theorem: sum_m |Y_lm(x)|^2 = (2l+1)/(4pi),
        valid when the multiplier is constant on each degree block."""
        sq_values = np.asarray(sq_values)
        total = 0.0
        for l in range(self.L_max + 1):
            block = sq_values[self.degrees == l]
            if np.max(block) - np.min(block) > 1e-12 * max(1.0, np.max(block)):
                raise ValueError(
                    "closed-form kernel diagonal needs degree-constant multipliers"
                )
            total += block[0] * (2 * l + 1) / (4.0 * math.pi)
        return float(total)

    def unit_vectors(self) -> np.ndarray:
        """Cartesian coordinates of grid points, shape (size, 3)."""
        sin_theta = np.sqrt(np.maximum(0.0, 1.0 - self.cos_theta**2))
        st, ph = np.meshgrid(sin_theta, self.phi, indexing="ij")
        ct, _ = np.meshgrid(self.cos_theta, self.phi, indexing="ij")
        xyz = np.stack([st * np.cos(ph), st * np.sin(ph), ct], axis=-1)
        return xyz.reshape(-1, 3)


def build_sphere(
    L_max: int, n_theta: Optional[int] = None, n_phi: Optional[int] = None
) -> SpectralOperator:
    """Round 2-sphere up to degree L_max; A-eigenvalue sqrt(l(l+1)), each with
    multiplicity 2l+1.  Quadrature (Gauss-Legendre in colatitude, uniform in
    longitude) integrates products of retained harmonics exactly."""
    if L_max < 0:
        raise ValueError("degree cutoff must be >= 0")
    if n_theta is None:
        n_theta = L_max + 1
    if n_phi is None:
        n_phi = 2 * L_max + 1
    if n_theta < L_max + 1 or n_phi < 2 * L_max + 1:
        raise ValueError(
            f"quadrature too coarse for L_max={L_max}: need n_theta >= {L_max + 1}, "
            f"n_phi >= {2 * L_max + 1}"
        )
    transform = SphereTransform(L_max, n_theta, n_phi)
    weights = np.outer(transform.theta_weights, np.full(n_phi, transform.dphi)).ravel()
    space = FiniteMeasureSpace(weights)
    ls = transform.degrees.astype(float)
    eigenvalues = np.sqrt(ls * (ls + 1.0))
    return SpectralOperator(
        space,
        eigenvalues,
        transform,
        label=f"sphere-L{L_max}",
        geometry=SphereModel(
            L_max=L_max, n_theta=n_theta, n_phi=n_phi, degrees=transform.degrees
        ),
    )


# ---------------------------------------------------------------------------
# rough coefficients and divergence-form operators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoefficientField:
    """A scalar coefficient field with its measured regularity quotients."""

    values: np.ndarray = field(repr=False)
    s: float
    delta: float
    J: int
    holder_quotient: float
    lipschitz_quotient: float
    second_difference_quotient: float


def weierstrass_coefficient(s: float, delta: float, J: int, grid) -> CoefficientField:
    """Lacunary C^s field a(x) = 1 + delta sum_{j=1}^{J} 2^(-js) cos(2^j x.e_j).

    ``grid`` is a tuple of per-axis coordinate arrays (a single array for one
    dimension).  Directions e_j alternate the coordinate axes.  Requires
    delta * sum 2^(-js) < 1/2 so a >= 1/2 (uniform ellipticity).  Measured
    finite-difference quotients over dyadic lags are returned with the field.
    """
    if not 0.0 <= s <= 2.0:
        raise ValueError("regularity s must lie in [0, 2]")
    if J < 0 or delta < 0:
        raise ValueError("need J >= 0 and delta >= 0")
    geom_sum = sum(2.0 ** (-j * s) for j in range(1, J + 1))
    if delta * geom_sum >= 0.5:
        raise ValueError(
            f"ellipticity violated: delta * sum 2^(-js) = {delta * geom_sum:.3f} >= 1/2"
        )
    if isinstance(grid, np.ndarray) and grid.ndim == 1:
        grid = (grid,)
    axes = [np.asarray(g, dtype=float) for g in grid]
    dim = len(axes)
    mesh = np.meshgrid(*axes, indexing="ij")
    a = np.ones_like(mesh[0])
    for j in range(1, J + 1):
        axis = (j - 1) % dim
        a = a + delta * 2.0 ** (-j * s) * np.cos(2.0**j * mesh[axis])

    # regularity scan: circular differences along each axis at dyadic lags
    holder = lipschitz = second = 0.0
    for axis in range(dim):
        n_ax = axes[axis].size
        h = float(axes[axis][1] - axes[axis][0]) if n_ax > 1 else 1.0
        lag = 1
        while lag < n_ax // 2:
            diff = np.max(np.abs(np.roll(a, -lag, axis=axis) - a))
            holder = max(holder, diff / (lag * h) ** s if s > 0 else diff)
            if lag == 1:
                lipschitz = max(lipschitz, diff / h)
                d2 = np.abs(
                    np.roll(a, -1, axis=axis) - 2 * a + np.roll(a, 1, axis=axis)
                )
                second = max(second, float(np.max(d2)) / h**2)
            lag *= 2
    return CoefficientField(
        values=a,
        s=s,
        delta=delta,
        J=J,
        holder_quotient=holder,
        lipschitz_quotient=lipschitz,
        second_difference_quotient=second,
    )


@dataclass(frozen=True)
class RoughMetricModel:
    """Divergence-form model -D^-(a D^+) on a periodic grid of N^dim points."""

    dim: int
    N: int
    s: float
    delta: float
    J: int
    a: np.ndarray = field(repr=False)  # coefficient, shape (N,)*dim

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("rough models are one- or two-dimensional")
        if self.N < 2 or (self.N & (self.N - 1)) != 0:
            raise ValueError("grid size N must be a power of two")
        a = np.asarray(self.a, dtype=float)
        if a.shape != (self.N,) * self.dim:
            raise ValueError("coefficient field shape must match the grid")
        if np.min(a) < 0.5:
            raise ValueError("uniform ellipticity requires a(x) >= 1/2")

    @classmethod
    def make(cls, dim: int, N: int, s: float, delta: float, J: int) -> "RoughMetricModel":
        axes = tuple(np.arange(N) * (TWO_PI / N) for _ in range(dim))
        coeff = weierstrass_coefficient(s, delta, J, axes)
        return cls(dim=dim, N=N, s=s, delta=delta, J=J, a=coeff.values)

    @property
    def trusted_lambda(self) -> float:
        return self.N / 8.0

    @property
    def cell(self) -> float:
        return TWO_PI / self.N

    def coordinates(self) -> np.ndarray:
        axes = np.indices((self.N,) * self.dim).reshape(self.dim, -1).T
        return axes * (TWO_PI / self.N)

    def distances_from(self, index: int = 0) -> np.ndarray:
        coords = self.coordinates()
        delta = np.abs(coords - coords[index])
        delta = np.minimum(delta, TWO_PI - delta)
        return np.sqrt(np.sum(delta**2, axis=1))

    def to_params(self) -> dict:
        return {
            "kind": "rough",
            "dim": self.dim,
            "N": self.N,
            "s": self.s,
            "delta": self.delta,
            "J": self.J,
        }


def build_rough(model: RoughMetricModel) -> SpectralOperator:
    """Assemble and densely diagonalize -D^-(a D^+) on the periodic grid.

    The matrix is a sum of edge quadratic forms a_e (u_j - u_i)^2 / h^2, hence
    symmetric PSD by construction; A carries the square roots of its
    eigenvalues.  Residual contracts: ||Mv - t^2 v|| <= 1e-8 ||M|| per pair
    and orthonormality residual <= 1e-10.
    """
    npts = model.N**model.dim
    if npts > 4096:
        raise ValueError("dense rough models are capped at 4096 grid points")
    h = TWO_PI / model.N
    a_flat = np.asarray(model.a, dtype=float).ravel()
    mat = np.zeros((npts, npts))
    idx = np.arange(npts).reshape((model.N,) * model.dim)
    rows = np.arange(npts)
    for axis in range(model.dim):
        fwd = np.roll(idx, -1, axis=axis).ravel()
        coeff = a_flat / h**2
        np.add.at(mat, (rows, rows), coeff)
        np.add.at(mat, (fwd, fwd), coeff)
        np.subtract.at(mat, (rows, fwd), coeff)
        np.subtract.at(mat, (fwd, rows), coeff)
    asym = float(np.max(np.abs(mat - mat.T)))
    if asym > 1e-12 * max(1.0, float(np.max(np.abs(mat)))):
        raise AssertionError("divergence-form assembly lost symmetry")
    evals, evecs = np.linalg.eigh(mat)
    scale = float(np.max(np.abs(evals))) or 1.0
    if evals[0] < -1e-9 * scale:
        raise NumericalError(f"negative eigenvalue {evals[0]:.3e} in PSD assembly")
    residual = float(np.max(np.abs(mat @ evecs - evecs * evals)))
    if residual > 1e-8 * scale:
        raise NumericalError("eigensolver residual contract violated")
    evals = np.clip(evals, 0.0, None)
    weights = np.full(npts, h**model.dim)
    space = FiniteMeasureSpace(weights)
    vectors = evecs / np.sqrt(weights)[:, None]
    return SpectralOperator.from_eigenpairs(
        space,
        np.sqrt(evals),
        vectors,
        label=f"rough{model.dim}d-N{model.N}-s{model.s}",
        geometry=model,
    )


# ---------------------------------------------------------------------------
# potentials
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Potential:
    """A real potential sampled on a model's grid with its L^p norm."""

    values: np.ndarray = field(repr=False)
    p: float
    norm: float
    kind: str

    def __post_init__(self):
        if np.iscomplexobj(self.values):
            raise ValueError("potentials are real-valued")
        if not np.isfinite(self.norm):
            raise ValueError("potential norm must be finite")


def _geometry_distances(op: SpectralOperator, center: int):
    geom = op.geometry
    if isinstance(geom, (TorusModel, RoughMetricModel)):
        return geom.distances_from(center), geom.cell, geom.n if isinstance(geom, TorusModel) else geom.dim
    if isinstance(geom, SphereModel):
        xyz = op.transform.unit_vectors()
        dots = np.clip(xyz @ xyz[center], -1.0, 1.0)
        return np.arccos(dots), geom.cell, 2
    raise ValueError("this potential kind needs an operator with geometry")


def build_potential(kind: str, model: SpectralOperator, p: float, **params) -> Potential:
    """Potential fields on a model's grid: 'single-bump', 'inverse-power',
    'random', or 'zero'.  The L^p norm is computed in the model's quadrature.

    single-bump(height, fraction): indicator bump of the given height covering
    the stated fraction of the total mass (the grid points nearest the center
    when geometry is available, a leading block otherwise), so the norm is
    height * (fraction * mass)^(1/p) up to grid rounding.
    inverse-power(gamma): d(x, x0)^(-gamma) truncated at one grid cell;
    requires gamma * p < dimension.
    random(seed, amplitude): seeded standard-normal field.
    """
    p = float(p)
    if p < 1:
        raise ValueError("integrability exponent p must be >= 1")
    w = model.space.weights
    npts = model.space.size
    center = int(params.pop("center", 0))
    if kind == "zero":
        values = np.zeros(npts)
    elif kind == "single-bump":
        height = float(params.pop("height", 1.0))
        fraction = float(params.pop("fraction", 0.1))
        if not 0.0 < fraction <= 1.0:
            raise ValueError("support fraction must lie in (0, 1]")
        count = max(1, int(round(fraction * npts)))
        try:
            dist, _, _ = _geometry_distances(model, center)
            support = np.argsort(dist, kind="stable")[:count]
        except ValueError:
            support = np.arange(count)
        values = np.zeros(npts)
        values[support] = height
    elif kind == "inverse-power":
        gamma = float(params.pop("gamma", 1.0))
        dist, cell, dim = _geometry_distances(model, center)
        if gamma <= 0 or gamma * p >= dim:
            raise ValueError(
                f"inverse-power requires 0 < gamma * p < dim, got gamma={gamma}, "
                f"p={p}, dim={dim}"
            )
        values = np.maximum(dist, cell) ** (-gamma)
    elif kind == "random":
        seed = int(params.pop("seed", 0))
        amplitude = float(params.pop("amplitude", 1.0))
        rng = np.random.default_rng(seed)
        values = amplitude * rng.standard_normal(npts)
    else:
        raise ValueError(f"unknown potential kind {kind!r}")
    if params:
        raise TypeError(f"unused potential parameters: {sorted(params)}")
    return Potential(values=values, p=p, norm=lp_norm(values, p, w), kind=kind)
