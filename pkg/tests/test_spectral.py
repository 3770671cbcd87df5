"""Core spectral representation: grids, transforms, projection, advection, norms."""

import numpy as np
import pytest
import scipy.fft as sfft

from gevrey_ns import (ConfigurationError, FieldInvariantError, GridMismatchError,
                       SpectralVelocity, divergence_defect, from_physical,
                       hermitian_defect, inner_l2, leray, leray_project, make_grid,
                       make_initial_data, nonlinear_term, norm_grad_l2, norm_l2,
                       norm_l4, random_spectrum_field, shear_flow, taylor_green,
                       to_physical, transform_roundtrip, validate_field)

SQRT2_PI = np.pi * np.sqrt(2.0)


class TestGrid:
    def test_lattice_n8(self):
        grid = make_grid(8)
        assert sorted(grid.freqs.tolist()) == [-4, -3, -2, -1, 0, 1, 2, 3]
        # Nyquist row/column masked everywhere
        assert not grid.keep[4, :].any()
        assert not grid.keep[:, 4].any()

    def test_lattice_n32(self):
        grid = make_grid(32)
        assert grid.k_sq.shape == (32, 32)
        assert grid.freqs.max() == 15 or grid.freqs.max() == 16
        assert grid.k_cut == 10

    @pytest.mark.parametrize("bad", [7, 6, 0, -4, 33])
    def test_rejects_bad_sizes(self, bad):
        with pytest.raises(ConfigurationError):
            make_grid(bad)

    def test_dealias_cutoff_avoids_boundary_aliasing(self):
        # 3 * k_cut must stay strictly below n for alias-free products
        for n in (8, 24, 32, 36, 48, 64):
            grid = make_grid(n)
            assert 3 * grid.k_cut < n


class TestTransforms:
    def test_single_mode_roundtrip(self, grid32):
        u1 = np.zeros((32, 32), dtype=complex)
        u1[0, 1] = 0.5
        u1[0, -1] = 0.5
        v = SpectralVelocity(grid32, u1, np.zeros_like(u1))
        rt = transform_roundtrip(v)
        assert (rt - v).max_amplitude() < 1e-15

    def test_random_roundtrip(self, random_field):
        rt = transform_roundtrip(random_field)
        scale = random_field.max_amplitude()
        assert (rt - random_field).max_amplitude() <= 1e-12 * scale

    def test_zero_field(self, grid32):
        z = SpectralVelocity(grid32, np.zeros((32, 32), complex), np.zeros((32, 32), complex))
        assert (transform_roundtrip(z)).max_amplitude() == 0.0

    def test_parseval(self, random_field):
        U1, U2 = to_physical(random_field)
        n = random_field.grid.n
        phys = np.sqrt(np.sum(U1 ** 2 + U2 ** 2) * (2 * np.pi / n) ** 2)
        spec = norm_l2(random_field)
        assert abs(phys - spec) <= 1e-12 * spec


class TestLerayProjection:
    def test_annihilates_gradients(self, grid32):
        rng = np.random.default_rng(0)
        phi = rng.standard_normal((32, 32)) + 1j * rng.standard_normal((32, 32))
        u1 = 1j * grid32.k1 * phi
        u2 = 1j * grid32.k2 * phi
        p = leray_project(grid32, u1, u2)
        assert p.max_amplitude() <= 1e-14 * np.max(np.abs(phi))

    def test_fixes_divergence_free(self, random_field):
        again = leray(random_field)
        assert (again - random_field).max_amplitude() <= 1e-14 * random_field.max_amplitude()

    def test_single_mode_example(self, grid32):
        # e = (1, 1) at xi = (1, 0): P e = e - xi (xi.e)/|xi|^2 = (0, 1)
        u1 = np.zeros((32, 32), complex)
        u2 = np.zeros((32, 32), complex)
        u1[1, 0] = 1.0
        u2[1, 0] = 1.0
        u1[-1, 0] = 1.0
        u2[-1, 0] = 1.0
        p = leray_project(grid32, u1, u2)
        assert abs(p.u1[1, 0]) < 1e-15
        assert abs(p.u2[1, 0] - 1.0) < 1e-15

    def test_idempotent_and_self_adjoint(self, grid32):
        rng = np.random.default_rng(3)
        def rand_field():
            a = rng.standard_normal((2, 32, 32)) + 1j * rng.standard_normal((2, 32, 32))
            return a[0], a[1]
        a1, a2 = rand_field()
        b1, b2 = rand_field()
        pa = leray_project(grid32, a1, a2)
        pb = leray_project(grid32, b1, b2)
        ppa = leray(pa)
        assert (ppa - pa).max_amplitude() <= 1e-14 * pa.max_amplitude()
        # self-adjoint: <Pa, b> = <a, Pb> in the Parseval inner product
        raw_b = SpectralVelocity(grid32, b1, b2)
        raw_a = SpectralVelocity(grid32, a1, a2)
        lhs = inner_l2(pa, raw_b)
        rhs = inner_l2(raw_a, pb)
        assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), 1.0)


class TestNonlinearTerm:
    def test_taylor_green_is_pure_gradient(self, tg):
        out = nonlinear_term(tg, tg)
        assert norm_l2(out) <= 1e-12 * norm_l2(tg) ** 2

    def test_shear_self_advection_vanishes(self, shear):
        out = nonlinear_term(shear, shear)
        assert norm_l2(out) == 0.0

    def test_zero_factor(self, grid32, random_field):
        z = SpectralVelocity(grid32, np.zeros((32, 32), complex), np.zeros((32, 32), complex))
        assert norm_l2(nonlinear_term(z, random_field)) == 0.0
        assert norm_l2(nonlinear_term(random_field, z)) == 0.0

    def test_grid_mismatch(self, grid16, random_field):
        other = shear_flow(grid16, 1.0)
        with pytest.raises(GridMismatchError):
            nonlinear_term(random_field, other)

    def test_bilinearity(self, grid32):
        a = random_spectrum_field(grid32, 2.0, 6, seed=1, l2_norm=0.5)
        b = random_spectrum_field(grid32, 2.0, 6, seed=2, l2_norm=0.5)
        c = random_spectrum_field(grid32, 2.0, 6, seed=3, l2_norm=0.5)
        lhs = nonlinear_term(a, b + c)
        rhs = nonlinear_term(a, b) + nonlinear_term(a, c)
        assert (lhs - rhs).max_amplitude() <= 1e-11 * lhs.max_amplitude()
        two = nonlinear_term(2.0 * a, b)
        assert (two - 2.0 * nonlinear_term(a, b)).max_amplitude() \
            <= 1e-12 * two.max_amplitude()

    def test_output_divergence_free(self, random_field):
        out = nonlinear_term(random_field, random_field)
        validate_field(out)

    def test_energy_neutral_transport(self, random_field):
        out = nonlinear_term(random_field, random_field)
        ip = inner_l2(random_field, out)
        scale = norm_l2(random_field) ** 2 * norm_grad_l2(random_field)
        assert abs(ip) <= 1e-10 * scale

    def test_matches_exact_convolution_on_fine_grid(self, grid32):
        # band-limited inputs; reference on a 2x grid has no aliasing at all
        a = random_spectrum_field(grid32, 1.5, grid32.k_cut, seed=5, l2_norm=1.0)
        b = random_spectrum_field(grid32, 1.5, grid32.k_cut, seed=6, l2_norm=1.0)
        out = nonlinear_term(a, b)

        m = 64
        rows = grid32.oversample_rows(m)

        def embed(h):
            full = np.zeros((m, m), dtype=complex)
            full[np.ix_(rows, rows)] = h
            return full

        A = [sfft.ifft2(embed(c)) * m * m for c in (a.u1, a.u2)]
        B = [sfft.ifft2(embed(c)) * m * m for c in (b.u1, b.u2)]
        ref = {}
        for i, Bi in enumerate(B):
            T1 = sfft.fft2(A[0] * Bi) / (m * m)
            T2 = sfft.fft2(A[1] * Bi) / (m * m)
            kx = np.rint(np.fft.fftfreq(m, 1 / m)).reshape(m, 1)
            ky = np.rint(np.fft.fftfreq(m, 1 / m)).reshape(1, m)
            ref[i] = -1j * (kx * T1 + ky * T2)
        # Leray-project the reference on the fine lattice, then compare low modes
        kx = np.rint(np.fft.fftfreq(m, 1 / m)).reshape(m, 1)
        ky = np.rint(np.fft.fftfreq(m, 1 / m)).reshape(1, m)
        ksq = kx ** 2 + ky ** 2
        inv = np.where(ksq > 0, 1.0 / np.where(ksq > 0, ksq, 1.0), 0.0)
        s = (kx * ref[0] + ky * ref[1]) * inv
        ref1 = ref[0] - kx * s
        ref2 = ref[1] - ky * s
        scale = max(np.max(np.abs(ref1)), np.max(np.abs(ref2)))
        kc = grid32.k_cut
        for out_c, ref_c in ((out.u1, ref1), (out.u2, ref2)):
            for p in range(-kc, kc + 1):
                for q in range(-kc, kc + 1):
                    assert abs(out_c[p % 32, q % 32] - ref_c[p % m, q % m]) <= 1e-10 * scale


class TestNorms:
    def test_shear_closed_forms(self, grid32):
        v = shear_flow(grid32, 2.5)
        assert abs(norm_l2(v) - 2.5 * SQRT2_PI) < 1e-12
        assert abs(norm_grad_l2(v) - 2.5 * SQRT2_PI) < 1e-12
        # integral of sin^4 is 3pi/4 per period, times 2pi in x
        assert abs(norm_l4(shear_flow(grid32, 1.0)) - (1.5 * np.pi ** 2) ** 0.25) < 1e-12

    def test_taylor_green_l2(self, tg):
        assert abs(norm_l2(tg) - SQRT2_PI) < 1e-12
        assert abs(norm_grad_l2(tg) - np.sqrt(2.0) * SQRT2_PI) < 1e-12

    def test_zero_field(self, grid32):
        z = SpectralVelocity(grid32, np.zeros((32, 32), complex), np.zeros((32, 32), complex))
        assert norm_l2(z) == 0.0
        assert norm_grad_l2(z) == 0.0
        assert norm_l4(z) == 0.0


class TestInitialData:
    def test_shear_norm(self, grid32):
        v = make_initial_data(grid32, {"kind": "shear", "amplitude": 1.0})
        assert abs(norm_l2(v) - SQRT2_PI) < 1e-12

    def test_taylor_green_norm(self, grid32):
        v = make_initial_data(grid32, {"kind": "taylor_green", "amplitude": 1.0})
        assert abs(norm_l2(v) - SQRT2_PI) < 1e-12

    def test_random_rescale_contract(self, grid32):
        v = make_initial_data(grid32, {"kind": "random_spectrum", "decay": 2.0,
                                       "k_max": 8, "seed": 7, "l2_norm": 0.01})
        assert abs(norm_l2(v) - 0.01) <= 1e-12

    def test_random_deterministic(self, grid32):
        a = random_spectrum_field(grid32, 2.0, 8, seed=11)
        b = random_spectrum_field(grid32, 2.0, 8, seed=11)
        assert (a - b).max_amplitude() == 0.0

    def test_random_spectrum_cutoff(self, grid32):
        v = random_spectrum_field(grid32, 2.0, 5, seed=1)
        r = np.sqrt(grid32.k_sq)
        assert np.all(v.u1[r > 5.0] == 0)
        assert np.all(v.u2[r > 5.0] == 0)

    @pytest.mark.parametrize("bad", [
        {"kind": "vortex_sheet"},
        {"kind": "shear", "amplitude": -1.0},
        {"kind": "random_spectrum", "decay": 2.0},
        {"kind": "shear", "bogus": 1},
        "not a dict",
    ])
    def test_invalid_specs(self, grid32, bad):
        with pytest.raises(ConfigurationError):
            make_initial_data(grid32, bad)

    @pytest.mark.parametrize("spec", [
        {"kind": "taylor_green", "amplitude": 1.0},
        {"kind": "shear", "amplitude": 0.3},
        {"kind": "random_spectrum", "decay": 2.0, "k_max": 8, "seed": 0, "l2_norm": 1.0},
    ])
    def test_all_generators_satisfy_invariants(self, grid32, spec):
        validate_field(make_initial_data(grid32, spec))


class TestValidation:
    def test_detects_nonzero_mean(self, grid32, shear):
        u1 = shear.u1.copy()
        u1[0, 0] = 1e-3
        with pytest.raises(FieldInvariantError, match="mean"):
            validate_field(SpectralVelocity(grid32, u1, shear.u2.copy()))

    def test_detects_nyquist(self, grid32, shear):
        u1 = shear.u1.copy()
        u1[16, 3] = 1e-3
        with pytest.raises(FieldInvariantError, match="Nyquist"):
            validate_field(SpectralVelocity(grid32, u1, shear.u2.copy()))

    def test_detects_hermitian_break(self, grid32, shear):
        u1 = shear.u1.copy()
        u1[2, 3] = 0.7
        with pytest.raises(FieldInvariantError, match="Hermitian"):
            validate_field(SpectralVelocity(grid32, u1, shear.u2.copy()))

    def test_detects_divergence(self, grid32):
        u1 = np.zeros((32, 32), complex)
        u1[1, 0] = 1.0
        u1[-1, 0] = 1.0
        with pytest.raises(FieldInvariantError, match="divergence"):
            validate_field(SpectralVelocity(grid32, u1, np.zeros_like(u1)))

    def test_defect_helpers(self, random_field):
        assert hermitian_defect(random_field.u1) <= 1e-13 * random_field.max_amplitude()
        assert divergence_defect(random_field) <= 1e-13 * random_field.max_amplitude()


def test_from_physical_custom_field(grid32):
    # an analytic divergence-free field defined on the collocation grid
    from gevrey_ns import physical_grid
    X, Y = physical_grid(32)
    U1 = np.sin(2 * Y) + 0.3 * np.sin(X) * np.cos(3 * Y)
    U2 = -0.1 * np.cos(X) * np.sin(3 * Y)
    v = leray(from_physical(grid32, U1, U2))
    validate_field(v)
    V1, V2 = to_physical(v)
    # projection only removed the gradient part; re-projecting is a no-op
    w = leray(v)
    assert (w - v).max_amplitude() <= 1e-14 * v.max_amplitude()
    assert abs(np.mean(V1)) < 1e-14 and abs(np.mean(V2)) < 1e-14
