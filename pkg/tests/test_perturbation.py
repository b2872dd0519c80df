"""Tests for the potential-perturbation pipeline: paired-space norms, the
base constant C0, the smallness measure M(lam), thresholds, splitting, and
the perturbed resolvent with its Neumann iteration."""

import json
import math
from types import SimpleNamespace

import numpy as np
import pytest

import specres.exponents as ex
import specres.manifolds as mf
import specres.model as md
import specres.norms as nm
import specres.perturbation as pb

QUICK = nm.IterationConfig(restarts=3, max_iters=300, tolerance=1e-11, seed=2)


def make_diag(taus, weights=None):
    """Diagonal model: delta-function eigenbasis, W-orthonormalized."""
    taus = np.asarray(taus, dtype=float)
    w = np.ones(len(taus)) if weights is None else np.asarray(weights, dtype=float)
    space = md.FiniteMeasureSpace(w)
    vecs = np.eye(len(taus)) / np.sqrt(w)[:, None]
    return md.SpectralOperator.from_eigenpairs(space, taus, vecs)


def make_potential(op, values, p, kind="test"):
    values = np.asarray(values, dtype=float)
    return mf.Potential(
        values=values, p=p, norm=nm.lp_norm(values, p, op.space.weights), kind=kind
    )


@pytest.fixture(scope="module")
def resonant_instance():
    """One mode at lam = 40 plus a far background, with a one-site bump on
    the resonant site, tuned so M(1) * C0 = 0.45 <= 1/2.

    At q = 100 the q-side smoothing weight is nearly flat, so the composite
    norms are dominated by the single resonant 2->2 leg and the bound chain
    M * C0 >= ||R V|| is close to sharp (recorded decay ratio 0.87 * MC0).
    """
    lam = 40.0
    q = 100.0
    taus = np.sort(np.concatenate([[lam], np.linspace(128.0, 200.0, 12)]))
    op = make_diag(taus)
    grid = [lam, lam + 6.0]
    p = q / (q - 2.0)
    C0 = pb.c0_estimate(op, q, grid, n=2, cfg=QUICK)
    probe = mf.build_potential(
        "single-bump", op, p=p, height=1.0, fraction=1.0 / len(taus)
    )
    M1 = max(pb.m_of_lambda(probe, op, g, q, n=2, cfg=QUICK).bound for g in grid)
    height = 0.45 / (M1 * C0)
    V = mf.build_potential(
        "single-bump", op, p=p, height=height, fraction=1.0 / len(taus)
    )
    return SimpleNamespace(op=op, V=V, q=q, grid=grid, C0=C0, lam=lam)


def decay_ratio(errors, floor=1e-11):
    errors = np.asarray(errors)
    errors = errors[errors > floor]
    steps = np.arange(len(errors))
    return float(np.exp(np.polyfit(steps, np.log(errors), 1)[0]))


class TestEnergySpaces:
    def test_structure(self):
        op = make_diag([1.0, 2.0, 3.0])
        inner, outer = pb.energy_spaces(op, 2.0, 6.0, n=2)
        assert inner.kind == "intersection" and outer.kind == "sum"
        s = float(ex.s_of_q(2, 6))
        assert [(p.s, p.p) for p in inner.parts] == [(0.5, 2.0), (s, 6.0)]
        assert [(p.s, p.p) for p in outer.parts] == [(-0.5, 2.0), (-s, 1.2)]
        assert all(p.lam == 2.0 and p.op is op for p in inner.parts + outer.parts)

    def test_torus_dimension_inferred(self):
        op = mf.build_torus(2, 2, 9)
        inner, _ = pb.energy_spaces(op, 1.5, 6.0)
        assert inner.parts[1].s == pytest.approx(float(ex.s_of_q(2, 6)))

    def test_explicit_dimension_override(self):
        op = make_diag([1.0, 2.0])
        inner, _ = pb.energy_spaces(op, 1.5, 6.0, n=3)
        # n=3, q=6 sits at the gradient-free endpoint: s(q) = 0
        assert inner.parts[1].s == 0.0

    def test_no_geometry_requires_n(self):
        op = make_diag([1.0, 2.0])
        with pytest.raises(ValueError, match="dimension"):
            pb.energy_spaces(op, 1.5, 6.0)


class TestModeMatrixMap:
    def test_adjoint_pairing(self):
        rng = np.random.default_rng(11)
        op = md.random_spectral_operator(rng, 10, lam_max=6.0)
        mat = rng.standard_normal((10, 10)) + 1j * rng.standard_normal((10, 10))
        T = pb.ModeMatrixMap(op, mat)
        for _ in range(5):
            u = rng.standard_normal(10) + 1j * rng.standard_normal(10)
            v = rng.standard_normal(10) + 1j * rng.standard_normal(10)
            lhs = op.space.inner(T.apply(u), v)
            rhs = op.space.inner(u, T.adjoint_apply(v))
            assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)

    def test_shape_validation(self):
        op = make_diag([1.0, 2.0, 3.0])
        with pytest.raises(ValueError, match="rank x rank"):
            pb.ModeMatrixMap(op, np.zeros((2, 3)))

    def test_annihilates_complement(self):
        op = mf.build_torus(1, 2, 11)  # rank 5 < size 11
        rng = np.random.default_rng(0)
        u = rng.standard_normal(11)
        perp = u - op.transform.synthesis(op.transform.analysis(u))
        T = pb.ModeMatrixMap(op, np.ones((op.rank, op.rank)))
        assert np.max(np.abs(T.apply(perp))) < 1e-12


class TestBaseConstant:
    def test_rank_one_closed_form(self):
        rng = np.random.default_rng(3)
        w = np.exp(rng.uniform(-0.5, 0.5, 14))
        space = md.FiniteMeasureSpace(w)
        vec = rng.standard_normal(14)
        vec = vec / space.norm2(vec)
        tau, lam, q, n = 9.0, 2.0, 6.0, 2
        op = md.SpectralOperator.from_eigenpairs(space, np.array([tau]), vec[:, None])
        br = pb.resolvent_xnorm(op, lam, q, n=n, cfg=QUICK)
        r = abs(1.0 / (tau**2 - (lam + 1j) ** 2))
        s = float(ex.s_of_q(n, q))
        qd = float(ex.dual_exponent(q))
        flat = lambda a: (lam**2 + tau**2) ** (a / 2.0)
        legs = {
            (sp, tp): flat(ts) * r * flat(ss)
            * nm.lp_norm(vec, tp, w)
            * nm.lp_norm(vec, ex.dual_exponent(sp), w)
            for sp, ss in ((2.0, 0.5), (qd, s))
            for tp, ts in ((2.0, 0.5), (q, s))
        }
        lower = max(max(legs[(sp, 2.0)], legs[(sp, q)]) for sp in (2.0, qd))
        upper = max(legs[(sp, 2.0)] + legs[(sp, q)] for sp in (2.0, qd))
        assert br.lower == pytest.approx(lower, rel=1e-10)
        assert br.upper == pytest.approx(upper, rel=1e-10)

    def test_identity_toy_maximizer(self):
        op = make_diag(np.full(6, 3.0))
        grid = [1.0, 2.0, 2.8, 3.1, 4.0]
        uppers = [pb.resolvent_xnorm(op, g, 6.0, n=2, cfg=QUICK).upper for g in grid]
        assert grid[int(np.argmax(uppers))] == 3.1  # nearest to the spectrum point
        assert pb.c0_estimate(op, 6.0, grid, n=2, cfg=QUICK) == pytest.approx(
            max(uppers)
        )

    def test_empty_grid_raises(self):
        op = make_diag([1.0, 2.0])
        with pytest.raises(ValueError, match="non-empty"):
            pb.c0_estimate(op, 6.0, [], n=2)

    def test_refinement_monotone(self):
        op = make_diag([0.5, 2.0, 4.0, 7.0])
        coarse = [1.0, 3.0]
        fine = [1.0, 2.0, 3.0, 4.5]
        assert pb.c0_estimate(op, 6.0, fine, n=2, cfg=QUICK) >= pb.c0_estimate(
            op, 6.0, coarse, n=2, cfg=QUICK
        )

    def test_resolvent_bound_soundness(self):
        # ||R f||_X <= C0 ||f||_{X'} <= C0 * (best single-route norm of f)
        rng = np.random.default_rng(8)
        op = make_diag(np.sort(rng.uniform(0.5, 10.0, 20)))
        lam, q, n = 2.5, 6.0, 2
        c0 = pb.c0_estimate(op, q, [lam], n=n, cfg=QUICK)
        inner, outer = pb.energy_spaces(op, lam, q, n=n)
        R = md.resolvent_sq(op, md.ResolventQuery(lam, 1.0))
        for _ in range(20):
            f = rng.standard_normal(20) + 1j * rng.standard_normal(20)
            routes = min(nm.vector_norm_in(f, part) for part in outer.parts)
            assert nm.vector_norm_in(R.apply(f), inner) <= c0 * routes * (1 + 1e-9)

    def test_torus_refinement_stability(self):
        # n=2, K=16, q=6: the grid max moves < 5% under 8 -> 16 lambda points
        op = mf.build_torus(2, 16, 65)
        coarse = pb.c0_estimate(op, 6.0, np.linspace(1.0, 4.0, 8), cfg=QUICK)
        fine = pb.c0_estimate(op, 6.0, np.linspace(1.0, 4.0, 16), cfg=QUICK)
        assert abs(fine - coarse) / coarse <= 0.05


class TestPotentialNorm:
    def test_zero_potential(self):
        op = make_diag([1.0, 2.0, 3.0])
        V = mf.build_potential("zero", op, p=1.5)
        est = pb.m_of_lambda(V, op, 2.0, 6.0, n=2, cfg=QUICK)
        assert est.bound == est.surrogate == est.via_l2 == est.via_lq == 0.0

    def test_duality_pairing_bound(self):
        # |<V u, g>_w| <= bound * ||u||_X * ||g||_X for vectors in the span
        rng = np.random.default_rng(12)
        for seed in (0, 1):
            op = md.random_spectral_operator(rng, 16, lam_max=9.0)
            V = mf.build_potential("random", op, p=1.5, seed=seed, amplitude=0.8)
            lam, q, n = 2.5, 6.0, 3
            est = pb.m_of_lambda(V, op, lam, q, n=n, cfg=QUICK)
            inner, _ = pb.energy_spaces(op, lam, q, n=n)
            for _ in range(25):
                u = rng.standard_normal(16) + 1j * rng.standard_normal(16)
                g = rng.standard_normal(16) + 1j * rng.standard_normal(16)
                u = op.transform.synthesis(op.transform.analysis(u))
                g = op.transform.synthesis(op.transform.analysis(g))
                pair = abs(op.space.inner(V.values * u, g))
                bound = est.bound * nm.vector_norm_in(u, inner) * nm.vector_norm_in(
                    g, inner
                )
                assert pair <= bound * (1 + 1e-9)

    def test_constant_potential_at_endpoint(self):
        # n=3, q=6 has 2 sigma(q) - 1 = 0: the surrogate is lambda-free and
        # the bracket itself decays like the sup-norm chain ||V||_inf / lam
        rng = np.random.default_rng(7)
        taus = np.sort(rng.uniform(0.5, 12.0, 24))
        op = make_diag(taus)
        V = make_potential(op, np.full(24, 0.8), p=1.5, kind="const")
        rows = [
            pb.m_of_lambda(V, op, lam, 6.0, n=3, cfg=QUICK)
            for lam in (1.0, 2.0, 4.0, 8.0)
        ]
        assert len({est.surrogate for est in rows}) == 1
        for est in rows:
            chain = 0.8 / math.sqrt(est.lam**2 + taus[0] ** 2)
            assert est.bound <= chain * 1.001
        bounds = [est.bound for est in rows]
        assert all(b2 <= b1 * (1 + 1e-9) for b1, b2 in zip(bounds, bounds[1:]))

    def test_single_bump_within_recorded_factor(self):
        # recorded max bound/surrogate = 0.174 on this family (torus n=2,
        # K=8, q=6, bump fraction 0.2); frozen with margin at 0.2
        op = mf.build_torus(2, 8, 33)
        V = mf.build_potential("single-bump", op, p=1.5, height=1.0, fraction=0.2)
        for lam in (1.0, 1.5, 2.0):
            est = pb.m_of_lambda(V, op, lam, 6.0, cfg=QUICK)
            assert est.bound <= 0.2 * est.surrogate

    def test_complex_rejected(self):
        op = make_diag([1.0, 2.0])
        fake = SimpleNamespace(
            values=np.array([1j, 0.0]), p=2.0, norm=1.0, kind="bad"
        )
        with pytest.raises(ValueError, match="real"):
            pb.m_of_lambda(fake, op, 2.0, 6.0, n=2)

    def test_lambda_below_one_rejected(self):
        op = make_diag([1.0, 2.0])
        V = mf.build_potential("zero", op, p=1.5)
        with pytest.raises(ValueError, match="lambda >= 1"):
            pb.m_of_lambda(V, op, 0.5, 6.0, n=2)


class TestLambda0:
    def test_arithmetic_example_exact(self):
        assert pb.lambda0(1.0, 0.5, 1.0, 0.25) == 4.0

    def test_zero_norm_gives_one(self):
        assert pb.lambda0(3.0, 0.5, 0.0, 0.25) == 1.0

    def test_homogeneity_in_norm(self):
        base = pb.lambda0(1.5, 0.5, 2.0, 0.25)
        doubled = pb.lambda0(1.5, 0.5, 4.0, 0.25)
        assert doubled == pytest.approx(base * 2.0 ** (1.0 / 0.5), rel=1e-12)

    def test_clamped_at_one(self):
        assert pb.lambda0(1.0, 0.5, 1e-4, 0.25) == 1.0

    def test_supercritical_sigma_raises(self):
        for sig in (0.5, 0.75):
            with pytest.raises(ValueError, match="split"):
                pb.lambda0(1.0, 0.5, 1.0, sig)

    def test_validation(self):
        with pytest.raises(ValueError):
            pb.lambda0(0.0, 0.5, 1.0, 0.25)
        with pytest.raises(ValueError):
            pb.lambda0(1.0, 1.0, 1.0, 0.25)
        with pytest.raises(ValueError):
            pb.lambda0(1.0, 0.5, -1.0, 0.25)

    def test_sub_sobolev_threshold_soundness(self):
        # q = 4 < 6 = Sobolev exponent for n = 3: past the closed-form
        # threshold every grid point satisfies M(lam) <= c / C0
        q, n, c = 4.0, 3, 0.5
        for seed in (0, 1):
            rng = np.random.default_rng(seed)
            op = make_diag(np.sort(rng.uniform(0.0, 30.0, 30)))
            vals = rng.uniform(-1.0, 1.0, 30) * 0.5
            V = make_potential(op, vals, p=q / (q - 2.0), kind="rand")
            grid = np.linspace(1.0, 20.0, 6)
            C0 = pb.c0_estimate(op, q, grid, n=n, cfg=QUICK)
            lam0 = pb.lambda0(C0, c, V.norm, 0.25)
            assert 1.0 < lam0 < 20.0  # non-vacuous: part of the grid qualifies
            for lam in grid[grid >= lam0]:
                est = pb.m_of_lambda(V, op, float(lam), q, n=n, cfg=QUICK)
                assert est.bound * C0 <= c


class TestPotentialSplit:
    def setup_method(self):
        self.op = make_diag(np.linspace(0.5, 8.0, 40))
        rng = np.random.default_rng(21)
        self.V = make_potential(self.op, rng.normal(0.0, 1.0, 40), p=1.5)

    def test_pointwise_identity_and_sup(self):
        big, small = pb.potential_split(self.V, 0.8, self.op)
        assert np.array_equal(big.values + small.values, self.V.values)
        assert np.max(np.abs(small.values)) <= 0.8
        assert np.array_equal(big.values != 0, np.abs(self.V.values) > 0.8)

    def test_alpha_above_sup(self):
        level = np.max(np.abs(self.V.values)) + 0.1
        big, small = pb.potential_split(self.V, level, self.op)
        assert not np.any(big.values)
        assert np.array_equal(small.values, self.V.values)

    def test_alpha_zero_empties_small_part(self):
        big, small = pb.potential_split(self.V, 0.0, self.op)
        assert not np.any(small.values[self.V.values != 0])
        assert np.array_equal(big.values, self.V.values)

    def test_norms_recomputed(self):
        big, small = pb.potential_split(self.V, 0.5, self.op)
        w = self.op.space.weights
        assert big.norm == pytest.approx(nm.lp_norm(big.values, 1.5, w), rel=1e-12)
        assert small.norm == pytest.approx(nm.lp_norm(small.values, 1.5, w), rel=1e-12)
        assert big.p == small.p == self.V.p

    def test_negative_level_raises(self):
        with pytest.raises(ValueError, match="nonnegative"):
            pb.potential_split(self.V, -0.1, self.op)

    def test_bisection_finds_critical_level(self):
        # smallest alpha0 with ||V_big||_{L^{n/2}} below a quarter-of-1/C0
        # style target, on a graded (inverse-power) potential
        op = mf.build_torus(3, 2, 9)
        V = mf.build_potential("inverse-power", op, p=1.5, gamma=1.0)
        target = 0.35 * V.norm
        lo, hi = 0.0, float(np.max(np.abs(V.values)))
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            big, _ = pb.potential_split(V, mid, op)
            if big.norm <= target:
                hi = mid
            else:
                lo = mid
        big, _ = pb.potential_split(V, hi, op)
        assert big.norm <= target
        below, _ = pb.potential_split(V, hi * (1 - 1e-6), op)
        assert below.norm > target  # minimality of the level


class TestPerturbedOperator:
    def test_zero_potential_spectrum_unchanged(self):
        rng = np.random.default_rng(4)
        op = md.random_spectral_operator(rng, 12, lam_max=7.0)
        V = mf.build_potential("zero", op, p=2.0)
        pert = pb.perturbed_operator(op, V)
        assert np.max(np.abs(pert.eigenvalues - op.eigenvalues)) < 1e-12

    def test_constant_shift_exact(self):
        rng = np.random.default_rng(5)
        op = md.random_spectral_operator(rng, 12, lam_max=7.0)
        V = make_potential(op, np.full(12, 0.9), p=2.0, kind="const")
        pert = pb.perturbed_operator(op, V)
        expected = np.sqrt(np.sort(op.eigenvalues**2 + 0.9))
        assert np.max(np.abs(pert.eigenvalues - expected)) < 1e-10

    def test_negative_spectrum_raises(self):
        op = make_diag([1.0, 2.0, 3.0])
        V = make_potential(op, np.full(3, -1.5), p=2.0, kind="const")
        with pytest.raises(ValueError, match="negative spectrum"):
            pb.perturbed_operator(op, V)

    def test_basis_orthonormal_and_geometry_carried(self):
        op = mf.build_torus(2, 2, 9)
        V = mf.build_potential("single-bump", op, p=1.5, height=0.5, fraction=0.3)
        pert = pb.perturbed_operator(op, V)  # validate=True re-checks the basis
        assert pert.geometry is op.geometry
        assert pert.rank == op.rank
        rng = np.random.default_rng(0)
        c = rng.standard_normal(pert.rank)
        u = pert.transform.synthesis(c)
        assert np.max(np.abs(pert.transform.analysis(u) - c)) < 1e-10

    def test_matches_dense_assembly_oracle(self):
        op = mf.build_torus(2, 2, 9)
        V = mf.build_potential("single-bump", op, p=1.5, height=0.7, fraction=0.2)
        basis = np.column_stack(
            [op.transform.synthesis(row) for row in np.eye(op.rank)]
        )
        w = op.space.weights
        compressed = basis.conj().T @ ((w * V.values)[:, None] * basis)
        oracle = np.linalg.eigvalsh(np.diag(op.eigenvalues**2) + compressed)
        pert = pb.perturbed_operator(op, V)
        assert np.max(np.abs(pert.eigenvalues**2 - oracle)) < 1e-9


class TestPerturbedResolvent:
    def test_zero_potential_both_methods(self):
        rng = np.random.default_rng(5)
        op = md.random_spectral_operator(rng, 12, lam_max=8.0)
        V = mf.build_potential("zero", op, p=2.0)
        free = np.diag(1.0 / (op.eigenvalues.astype(complex) ** 2 - (3.0 + 1j) ** 2))
        for method in ("direct", "neumann(3)"):
            mapped, diag = pb.perturbed_resolvent(op, V, 3.0, method=method)
            assert np.max(np.abs(mapped.matrix - free)) < 1e-14
            assert diag["contraction"] == 0.0

    def test_constant_closed_form_both_methods(self):
        op = make_diag(np.linspace(1.0, 7.0, 10), weights=np.full(10, 0.3))
        v = 0.7
        V = make_potential(op, np.full(10, v), p=2.0, kind="const")
        closed = np.diag(1.0 / (op.eigenvalues.astype(complex) ** 2 + v - (4.0 + 1j) ** 2))
        for method in ("direct", "neumann(40)"):
            mapped, _ = pb.perturbed_resolvent(op, V, 4.0, method=method)
            assert np.max(np.abs(mapped.matrix - closed)) < 1e-10

    def test_second_resolvent_identity(self):
        rng = np.random.default_rng(9)
        for _ in range(5):
            op = md.random_spectral_operator(rng, 14, lam_max=8.0)
            V = mf.build_potential(
                "random", op, p=2.0, seed=int(rng.integers(100)), amplitude=0.5
            )
            mapped, _ = pb.perturbed_resolvent(op, V, 2.5, method="direct")
            basis = np.column_stack(
                [op.transform.synthesis(row) for row in np.eye(op.rank)]
            )
            w = op.space.weights
            B = basis.conj().T @ ((w * V.values)[:, None] * basis)
            R = np.diag(1.0 / (op.eigenvalues.astype(complex) ** 2 - (2.5 + 1j) ** 2))
            residue = mapped.matrix - R + R @ B @ mapped.matrix
            assert np.max(np.abs(residue)) < 1e-9

    def test_action_matches_closed_form(self):
        op = make_diag(np.linspace(1.0, 6.0, 8))
        v = 0.4
        V = make_potential(op, np.full(8, v), p=2.0, kind="const")
        mapped, _ = pb.perturbed_resolvent(op, V, 3.0, method="direct")
        rng = np.random.default_rng(1)
        u = rng.standard_normal(8)
        coeffs = op.transform.analysis(u) / (
            op.eigenvalues.astype(complex) ** 2 + v - (3.0 + 1j) ** 2
        )
        assert np.max(np.abs(mapped.apply(u) - op.transform.synthesis(coeffs))) < 1e-12

    def test_singular_system_raises(self):
        op = make_diag([1.0, 2.0, 3.0])
        v = 0.5
        V = make_potential(op, np.full(3, v), p=2.0, kind="const")
        with pytest.raises(md.NumericalError, match="singular"):
            pb.perturbed_resolvent(op, V, 2.0, z2=complex(4.0 + v))

    def test_method_parsing(self):
        op = make_diag([1.0, 2.0])
        V = mf.build_potential("zero", op, p=2.0)
        _, diag = pb.perturbed_resolvent(op, V, 2.0, method="neumann(5)")
        assert diag["method"] == "neumann(5)"
        assert len(diag["errors_by_step"]) == 6
        _, diag = pb.perturbed_resolvent(op, V, 2.0, method="neumann", k=2)
        assert diag["method"] == "neumann(2)"
        with pytest.raises(ValueError, match="unknown method"):
            pb.perturbed_resolvent(op, V, 2.0, method="jacobi")

    def test_divergence_flagged_not_fatal(self):
        op = make_diag([1.0, 1.5, 2.0])
        V = make_potential(op, np.full(3, 30.0), p=2.0, kind="const")
        mapped, diag = pb.perturbed_resolvent(op, V, 1.2, method="neumann(6)", mc0=2.5)
        assert diag["divergent"]
        assert diag["geometric_estimate"] == math.inf
        assert diag["mc0"] == 2.5
        assert isinstance(diag["direct_map"], pb.ModeMatrixMap)
        assert np.all(np.isfinite(diag["errors_by_step"]))
        assert isinstance(mapped, pb.ModeMatrixMap)

    def test_convergence_bound_at_every_step(self):
        # ||neumann(k) - direct||_{X'->X} <= C0 * mc0^k / (1 - mc0)
        op = mf.build_torus(2, 2, 9)
        V = mf.build_potential("single-bump", op, p=1.5, height=0.6, fraction=0.3)
        lam, q = 1.2, 6.0
        C0 = pb.c0_estimate(op, q, [lam], cfg=QUICK)
        M = pb.m_of_lambda(V, op, lam, q, cfg=QUICK).bound
        mc0 = M * C0
        assert mc0 < 1.0
        direct, _ = pb.perturbed_resolvent(op, V, lam, method="direct")
        inner, outer = pb.energy_spaces(op, lam, q)
        for k in range(0, 7):
            nk, _ = pb.perturbed_resolvent(op, V, lam, method=f"neumann({k})")
            gap = pb.ModeMatrixMap(op, nk.matrix - direct.matrix)
            lhs = nm.op_norm_composite(gap, outer, inner, QUICK).lower
            assert lhs <= C0 * mc0**k / (1.0 - mc0) * (1 + 1e-9)

    def test_neumann_ratio_near_mc0(self, resonant_instance):
        inst = resonant_instance
        est = pb.m_of_lambda(inst.V, inst.op, inst.lam, inst.q, n=2, cfg=QUICK)
        mc0 = est.bound * inst.C0
        _, diag = pb.perturbed_resolvent(
            inst.op, inst.V, inst.lam, method="neumann(14)", mc0=mc0
        )
        observed = decay_ratio(diag["errors_by_step"])
        assert observed <= mc0 * (1 + 1e-3)  # certified side
        assert observed >= 0.70 * mc0  # recorded tightness: 0.87 * mc0


class TestFractionalResolvent:
    def test_alpha_two_matches_quadratic(self):
        rng = np.random.default_rng(6)
        op = md.random_spectral_operator(rng, 10, lam_max=6.0)
        V = mf.build_potential("random", op, p=2.0, seed=3, amplitude=0.3)
        frac, _ = pb.fractional_resolvent(op, V, 2.0, alpha=2.0)
        quad, _ = pb.perturbed_resolvent(op, V, 2.0)
        assert np.max(np.abs(frac.matrix - quad.matrix)) < 1e-13

    def test_first_order_closed_form(self):
        op = make_diag(np.linspace(1.0, 9.0, 9))
        v = 0.3
        V = make_potential(op, np.full(9, v), p=2.0, kind="const")
        frac, _ = pb.fractional_resolvent(op, V, 4.0, alpha=1.0)
        closed = np.diag(1.0 / (op.eigenvalues + v - (4.0 + 1j)))
        assert np.max(np.abs(frac.matrix - closed)) < 1e-12

    def test_invalid_alpha_raises(self):
        op = make_diag([1.0, 2.0])
        V = mf.build_potential("zero", op, p=2.0)
        with pytest.raises(ValueError, match="alpha"):
            pb.fractional_resolvent(op, V, 2.0, alpha=0.0)

    def test_torus_growth_exponent(self):
        # first-order perturbed resolvent grows no faster than
        # lam^(2 sigma(q) + 1 - alpha), alpha = 1, n = 2, q = 100
        cfg = nm.IterationConfig(restarts=2, max_iters=150, tolerance=1e-9, seed=3)
        op = mf.build_torus(2, 12, 49)
        q = 100.0
        V = mf.build_potential(
            "single-bump", op, p=q / (q - 2.0), height=0.3, fraction=0.1
        )
        lams = np.array([1.5, 2.0, 3.0])
        norms = []
        for lam in lams:
            mapped, _ = pb.fractional_resolvent(op, V, float(lam), alpha=1.0)
            norms.append(
                nm.operator_norm(mapped, ex.dual_exponent(q), q, cfg).lower
            )
        slope = np.polyfit(np.log(lams), np.log(norms), 1)[0]
        limit = 2.0 * ex.sigma(2, q) + 1.0 - 1.0
        assert slope <= limit + 0.1


class TestStabilityCheck:
    def test_zero_potential_report(self):
        op = mf.build_torus(2, 4, 17)
        V = mf.build_potential("zero", op, p=1.5)
        rep = pb.stability_check(op, V, 6.0, [1.0, 2.0], c=0.5, cfg=QUICK)
        assert rep.M_of_Lambda == ((1.0, 0.0), (2.0, 0.0))
        assert rep.Lambda0 == 1.0
        assert rep.verified
        assert rep.neumann_bound == pytest.approx(rep.C0 / 0.5, rel=1e-12)
        assert rep.details["cluster"]["passed"]
        assert all(s["passed"] for s in rep.details["resolvent_samples"])

    def test_report_invariants(self):
        good = dict(
            C0=2.0,
            c=0.5,
            M_of_Lambda=((1.0, 0.1),),
            Lambda0=1.0,
            neumann_bound=4.0,
            verified=True,
        )
        pb.StabilityReport(**good)
        with pytest.raises(ValueError):
            pb.StabilityReport(**{**good, "c": 1.5})
        with pytest.raises(ValueError):
            pb.StabilityReport(**{**good, "Lambda0": 0.5})
        with pytest.raises(ValueError):
            pb.StabilityReport(**{**good, "neumann_bound": 3.0})

    def test_to_dict_json_roundtrip(self):
        op = make_diag(np.linspace(1.0, 8.0, 10))
        V = make_potential(op, np.full(10, 0.2), p=1.5, kind="const")
        rep = pb.stability_check(op, V, 6.0, [2.0, 3.0], n=2, cfg=QUICK)
        blob = json.dumps(rep.to_dict())
        back = json.loads(blob)
        assert back["C0"] == pytest.approx(rep.C0)
        assert back["Lambda0"] == rep.Lambda0
        assert back["M_of_Lambda"] == [list(pair) for pair in rep.M_of_Lambda]
        assert back["details"]["q"] == 6.0

    def test_sub_threshold_bump_verified(self, resonant_instance):
        inst = resonant_instance
        rep = pb.stability_check(
            inst.op, inst.V, inst.q, inst.grid, c=0.5, n=2, cfg=QUICK
        )
        assert rep.verified
        assert rep.Lambda0 == inst.grid[0]
        assert rep.M_of_Lambda[0][1] * rep.C0 <= 0.5  # M(1) C0 <= 1/2
        for sample in rep.details["resolvent_samples"]:
            assert sample["lower"] <= rep.neumann_bound * 1.05

    def test_super_threshold_unverified(self, resonant_instance):
        inst = resonant_instance
        big = mf.Potential(
            values=inst.V.values * 40.0,
            p=inst.V.p,
            norm=inst.V.norm * 40.0,
            kind="bump",
        )
        rep = pb.stability_check(inst.op, big, inst.q, inst.grid, c=0.5, n=2, cfg=QUICK)
        assert rep.Lambda0 == math.inf
        assert not rep.verified
        assert rep.details["resolvent_samples"] == []
        assert "cluster" not in rep.details

    def test_bad_inputs(self):
        op = make_diag([1.0, 2.0])
        V = mf.build_potential("zero", op, p=1.5)
        with pytest.raises(ValueError, match="non-empty"):
            pb.stability_check(op, V, 6.0, [], n=2)
        for c in (0.0, 1.0):
            with pytest.raises(ValueError, match="contraction"):
                pb.stability_check(op, V, 6.0, [1.0], c=c, n=2)
