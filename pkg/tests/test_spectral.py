import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from pairspec import (PhysParams, GridSpec, build_operator, apply, negative_spectrum,
                      count_below, bs_singular_values, product_symbol, hessian_sup,
                      coherent_kappa, berezin_sandwich, local_density, q_average,
                      cwikel_sval_bound, bs_count_bound, aizenman_lieb, gaussian_potential,
                      smooth_well, coherent_bump, symbol_h, sigma_p, scale_to_pair_frame)
from pairspec.cli import parse_potential
from pairspec.spectral import (axial_hessian_sup, potential_theta, phase_average_negative,
                               symbol_theta, _dense)


def _op(d=1, n=64, L=12.0, a=3.0, p=2.0, masses=(0.5, 0.5), **kw):
    pr = PhysParams(masses[0], masses[1], p)
    return build_operator(gaussian_potential(a=a, d=d), pr, GridSpec(d, n, L * p), **kw)


class TestGrid:
    @pytest.mark.parametrize("bad", [(4, 8, 1.0), (1, 12, 1.0), (2, 8, -1.0)])
    def test_invalid(self, bad):
        with pytest.raises(ValueError):
            GridSpec(*bad)

    def test_geometry(self):
        g = GridSpec(2, 8, 4.0)
        assert g.h == 1.0 and g.size == 64 and g.shape == (8, 8)
        assert_allclose(g.axis()[[0, -1]], [-4.0, 3.0])
        assert_allclose(g.cell_measure, (2 * np.pi / 8) ** 2)
        assert g.points().shape == (8, 8, 2) and g.momenta().shape == (8, 8, 2)

    def test_leak_guard(self):
        with pytest.raises(ValueError):
            _op(L=1.0)
        with pytest.raises(ValueError):
            build_operator(gaussian_potential(d=3), PhysParams(0.5, 0.5, 2.0), GridSpec(1, 8, 8.0))


class TestApply:
    def test_plane_wave(self):
        pr = PhysParams(1.0, 3.0, 4.0)
        g = GridSpec(1, 32, 10.0)
        op = build_operator(parse_potential("zero", 1), pr, g)
        assert not op.real
        for k in (0, 3, 17):
            u = np.exp(1j * g.freqs()[k] * g.axis())
            lam = symbol_h(np.array([[g.freqs()[k]]]), pr)[0]
            assert_allclose(apply(op, u), lam * u, atol=1e-13)

    def test_real_path_matches_dense(self, rng):
        op = _op()
        assert op.real
        u = rng.standard_normal(op.grid.shape)
        assert_allclose(apply(op, u), _dense(op) @ u, atol=1e-12)
        batch = rng.standard_normal((3,) + op.grid.shape)
        assert_allclose(apply(op, batch)[1], apply(op, batch[1]), atol=1e-14)

    @pytest.mark.parametrize("masses", [(0.5, 0.5), (1.0, 3.0)])
    def test_self_adjoint(self, rng, masses):
        op = _op(d=2, n=16, L=6.0, masses=masses)
        u = rng.standard_normal(op.grid.shape) + 1j * rng.standard_normal(op.grid.shape)
        v = rng.standard_normal(op.grid.shape) + 1j * rng.standard_normal(op.grid.shape)
        lhs = np.vdot(apply(op, u), v)
        rhs = np.vdot(u, apply(op, v))
        assert abs(lhs - rhs) <= 1e-12 * abs(lhs)

    def test_shape_error(self):
        with pytest.raises(ValueError):
            apply(_op(), np.zeros(10))


class TestSpectrum:
    def test_free_operator(self):
        pr = PhysParams(1.0, 3.0, 4.0)
        op = build_operator(parse_potential("zero", 2), pr, GridSpec(2, 16, 8.0))
        res = negative_spectrum(op)
        assert res.count == 0 and res.moment == 0
        assert np.min(np.linalg.eigvalsh(_dense(op))) >= -1e-12

    def test_smoothed_multiplier_dominates(self):
        plain = _op(d=2, n=32, L=6.0, p=4.0)
        smooth = _op(d=2, n=32, L=6.0, p=4.0, variant="h-sigma", r=0.1)
        assert np.all(smooth.kinetic >= plain.kinetic - 1e-14)
        assert negative_spectrum(smooth).moment <= negative_spectrum(plain).moment + 1e-12

    def test_dense_vs_lanczos(self):
        op = _op(d=2, n=32, L=6.0, a=12.0)
        dense = negative_spectrum(op)
        lan = negative_spectrum(op, k_max=2, dense_limit=0)
        assert dense.method == "dense" and lan.method == "lanczos"
        assert dense.count == lan.count > 2
        assert_allclose(lan.eigenvalues, dense.eigenvalues, atol=1e-9)
        assert np.max(lan.residuals) < 1e-7

    def test_partial_lanczos(self):
        op = _op(d=2, n=32, L=6.0, a=12.0)
        full = negative_spectrum(op)
        part = negative_spectrum(op, k_max=2, k_limit=2, dense_limit=0)
        assert full.complete and not part.complete and part.count == 2
        assert_allclose(part.eigenvalues, full.eigenvalues[:2], atol=1e-9)
        assert part.moment < full.moment

    @given(st.floats(0.5, 5.0), st.floats(1.0, 2.0))
    def test_monotone_in_potential(self, a, f):
        lo = negative_spectrum(_op(a=a))
        hi = negative_spectrum(_op(a=a * f))
        assert hi.count >= lo.count
        assert hi.moment >= lo.moment - 1e-12

    def test_refinement(self):
        coarse = negative_spectrum(_op(n=128, p=4.0, L=6.0)).moment
        fine = negative_spectrum(_op(n=256, p=4.0, L=6.0)).moment
        assert_allclose(fine, coarse, rtol=1e-6)

    def test_count_below_matches(self):
        op = _op(n=64)
        res = negative_spectrum(op)
        for u in (0.0, 0.5 * res.moment / res.count, -res.eigenvalues[0] * 0.99):
            assert count_below(op, u) == int(np.sum(res.eigenvalues < -u))
        with pytest.raises(ValueError):
            count_below(_op(d=2, n=128, L=6.0), 0.0)

    def test_aizenman_lieb(self):
        op = _op(n=64)
        res = negative_spectrum(op, eps_count=0.0)
        S = aizenman_lieb(lambda u: count_below(op, u), horizon=res.moment)
        assert_allclose(S, res.moment, rtol=1e-12)


class TestBirmanSchwinger:
    @pytest.mark.parametrize("masses,a", [((0.5, 0.5), 3.0), ((1.0, 3.0), 8.0)])
    def test_count_equality(self, masses, a):
        op = _op(n=128, a=a, masses=masses, regularization=1e-6)
        res = negative_spectrum(op)
        s = bs_singular_values(gaussian_potential(a=a, d=1), op.params, op.grid,
                               shift=res.eps_count)
        assert int(np.sum(s > 1)) == res.count > 0

    def test_cwikel_and_count_bound(self):
        V = gaussian_potential(a=3.0, d=1)
        pr = PhysParams(0.5, 0.5, 2.0)
        g = GridSpec(1, 128, 24.0)
        s = bs_singular_values(V, pr, g)
        q = product_symbol(V, pr, g)
        n = np.arange(1, s.size + 1)
        bound = 5 * q_average(q, q, 2 * np.pi * n)
        assert_allclose(bound[:3], [cwikel_sval_bound(k, lambda t: q_average(q, q, t), 1)
                                    for k in (1, 2, 3)], rtol=1e-13)
        assert np.all(s <= bound)
        count = negative_spectrum(build_operator(V, pr, g, regularization=1e-6)).count
        assert bs_count_bound(lambda t: q_average(q, q, t), 1) >= count

    def test_dense_only(self):
        with pytest.raises(ValueError):
            bs_singular_values(gaussian_potential(d=2), PhysParams(0.5, 0.5, 1.0),
                               GridSpec(2, 128, 12.0))


class TestHessian:
    def test_quadratic(self):
        x = np.linspace(-1, 1, 41)
        X, Y = np.meshgrid(x, x, indexing="ij")
        assert_allclose(hessian_sup((X ** 2 + Y ** 2) / 2, x[1] - x[0]), 1.0, rtol=1e-12)
        assert_allclose(hessian_sup(X * Y, x[1] - x[0]), 1.0, rtol=1e-12)

    def test_gaussian(self):
        h = 1e-3
        x = np.arange(-2, 2 + h / 2, h)
        assert_allclose(hessian_sup(np.exp(-x ** 2), h), 2.0, rtol=1e-6)

    def test_axial_matches_full(self):
        h = 0.05
        x = np.arange(-1.5, 1.5 + h / 2, h)
        X, Y, Z = np.meshgrid(x, x, x, indexing="ij")
        full = hessian_sup(np.exp(-(X ** 2 + Y ** 2 + Z ** 2) + X), h)
        rho = np.arange(0, 1.5 + h / 2, h)
        E, R = np.meshgrid(x, rho, indexing="ij")
        axial = axial_hessian_sup(np.exp(-(E ** 2 + R ** 2) + E), h, h, 3)
        assert_allclose(axial, full, rtol=1e-3)

    def test_pair_frame_scaling(self):
        for d in (1, 3):
            V = gaussian_potential(a=2.0, d=d)
            base = potential_theta(V, n=801)
            for p in (2.0, 8.0):
                assert_allclose(potential_theta(scale_to_pair_frame(V, p), n=801),
                                base * p ** -3, rtol=1e-6)

    def test_symbol_theta_large_p(self):
        # the smoothed symbol nearly vanishes on the segment; quadrature must still converge
        th = [symbol_theta(PhysParams(0.5, 0.5, p), 1, 0.1, pts_per_r=32) for p in (1024.0, 4096.0)]
        assert_allclose(th[0], th[1], rtol=2e-3)

    def test_symbol_theta_resolved(self):
        pr = PhysParams(0.5, 0.5, 4.0)
        a = symbol_theta(pr, 1, 0.1, pts_per_r=16)
        b = symbol_theta(pr, 1, 0.1, pts_per_r=32)
        assert_allclose(a, b, rtol=5e-3)
        assert a >= 2 / (3 * 0.1)


class TestKappa:
    def test_examples(self):
        f = coherent_bump(3)
        assert_allclose(coherent_kappa(f, 1.0, 1.0), 2 * f.x_moment * f.grad_moment)
        assert coherent_kappa(f, 5.0, 0.0) == 0
        with pytest.raises(ValueError):
            coherent_kappa(f, -1.0, 1.0)

    def test_reproducible(self):
        k = [coherent_kappa(coherent_bump(3), 2.0, 0.5) for _ in range(2)]
        assert abs(k[0] - k[1]) <= 1e-10 * k[0]


class TestSandwich:
    def test_nonpositive_potential(self):
        res = berezin_sandwich(parse_potential("zero", 1), PhysParams(0.5, 0.5, 4.0),
                               GridSpec(1, 64, 40.0), 0.1)
        assert (res.lower, res.spectral, res.upper_defect) == (0.0, 0.0, 0.0)

    def test_phase_average_limits(self):
        V = smooth_well(a=6.0, d=1)
        pr = PhysParams(0.5, 0.5, 8.0)
        ref = sigma_p(V, pr).sigma_value
        vals = [phase_average_negative(V, pr, r) for r in (0.2, 0.05, 0.01)]
        assert all(v <= ref * (1 + 1e-9) for v in vals)
        assert vals[0] <= vals[1] <= vals[2]
        assert_allclose(vals[2], ref, rtol=1e-2)
        assert phase_average_negative(V, pr, 0.1, kappa=10.0) == 0.0

    def test_d1_lower(self):
        V = gaussian_potential(a=20.0, d=1)
        pr = PhysParams(0.5, 0.5, 8.0)
        res = berezin_sandwich(V, pr, GridSpec(1, 512, 48.0), 0.1)
        assert 0 < res.lower <= res.spectral
        assert res.kappa > 0 and np.isnan(res.upper_defect)

    def test_d1_upper(self):
        V = gaussian_potential(a=3.0, d=1)
        pr = PhysParams(0.5, 0.5, 8.0)
        res = berezin_sandwich(V, pr, GridSpec(1, 256, 48.0), 0.1, delta=0.2, upper=True)
        assert res.upper >= res.spectral and res.upper_defect >= 0
        with pytest.raises(ValueError):
            berezin_sandwich(V, pr, GridSpec(1, 256, 48.0), 0.1, upper=True)


class TestLocalDensity:
    def test_constant_weight(self):
        op = _op(n=128, a=6.0)
        res = negative_spectrum(op, vectors=True)
        V = gaussian_potential(a=6.0, d=1)
        assert_allclose(local_density(lambda y: np.ones(y.shape[:-1]), V, op.params, op.grid,
                                      res), res.count, rtol=1e-12)
        assert local_density(lambda y: np.zeros(y.shape[:-1]), V, op.params, op.grid, res) == 0

    def test_potential_weight(self):
        V = gaussian_potential(a=6.0, d=1)
        op = _op(n=128, a=6.0)
        res = negative_spectrum(op, vectors=True)
        val = local_density(V, V, op.params, op.grid)
        ref = sum(np.vdot(v, (op.potential * op.params.p).ravel() * v).real
                  for v in res.vectors.T)
        assert_allclose(val, ref, rtol=1e-10)
        assert 0 < val < 6.0 * res.count
