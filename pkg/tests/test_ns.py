import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from modns.grid import GridError, brute_convolution, HypothesisError, VectorField, make_grid, random_field, single_mode
from modns.heat import Trajectory, uniform_times
from modns.norms import e_norm, mdot_norm
from modns.ns import (
    OCTANT_E, SMALL_MDOT, SolverConfig, analyticity_radius, analytic_rate, bisect_epsilon,
    counterexample_ratio, divergence_defect, leray_project, load_trajectory, make_initial_data,
    mild_residual, nonlinear_direct, nonlinear_term, octant_defect, octant_mask, octant_restrict,
    picard_solve, radius_crossing_time, save_trajectory, scale_coeffs, scale_field,
    scaled_solve, select_exponents,
)


def _vec(grid, rng, decay=0.5):
    return VectorField(tuple(random_field(grid, rng, decay) for _ in range(grid.d)))


@pytest.fixture(scope="module")
def small_cfg():
    return SolverConfig(OCTANT_E, 2, 2.0, s=-1.0, T=0.5, nt=8)


class TestProjection:
    def test_divergence_free_and_idempotent(self, g2, rng):
        u = leray_project(_vec(g2, rng))
        assert divergence_defect(u) <= 1e-14
        np.testing.assert_allclose(leray_project(u).spectral(), u.spectral(), atol=1e-13)

    def test_gradients_vanish(self, g3, rng):
        phi = random_field(g3, rng).spectral()
        grad = np.stack([1j * x * phi for x in g3.frequency_mesh()])
        out = leray_project(VectorField.from_spectral(g3, grad))
        assert np.abs(out.spectral()).max() <= 1e-12 * np.abs(grad).max()

    def test_needs_d_components(self, g2, rng):
        with pytest.raises(GridError):
            leray_project(VectorField((random_field(g2, rng),)))

    def test_zero_defect(self, g2):
        assert divergence_defect(VectorField.from_spectral(g2, np.zeros((2,) + g2.shape))) == 0


class TestNonlinearity:
    def test_fft_matches_direct_convolution(self, g2_small, rng):
        u = make_initial_data("random_full", g2_small, seed=3)
        with pytest.warns(RuntimeWarning):
            nonlinear_term(u)
        np.testing.assert_allclose(nonlinear_term(u).spectral(), nonlinear_direct(u).spectral(),
                                   atol=1e-11)

    def test_octant_closed(self, g2):
        u = make_initial_data("random_octant", g2, seed=1)
        with pytest.warns(RuntimeWarning):
            out = nonlinear_term(u)
        # the octant is closed under products; only FFT roundoff leaks out
        assert octant_defect(out.spectral(), g2) <= 1e-14

    def test_brute_force_oracle(self, g2_small):
        g = g2_small
        u = make_initial_data("random_octant", g, seed=2, decay=2.0)
        c = u.spectral()
        xi = g.frequency_mesh()
        div = [sum(1j * xi[j] * brute_convolution(c[i], c[j]) for j in range(2)) for i in range(2)]
        ref = leray_project(VectorField.from_spectral(g, np.stack(div))).spectral()
        with pytest.warns(RuntimeWarning):
            out = nonlinear_term(u).spectral()
        np.testing.assert_allclose(out, ref, atol=1e-12)


class TestOctant:
    def test_mask(self, g2):
        m = octant_mask(g2)
        assert m[g2.index_of((0, 0))] and m[g2.index_of((1, 2))]
        assert not m[g2.index_of((-0.25, 1))]

    def test_restrict(self, g2, rng):
        f = octant_restrict(random_field(g2, rng))
        assert octant_defect(f.spectral(), g2) == 0

    @pytest.mark.parametrize("kind", ["polynomial_octant", "exp_weight_octant",
                                      "random_octant", "L2_octant"])
    def test_initial_data(self, g2, kind):
        u = make_initial_data(kind, g2, normalise=(-1.0, 2.0))
        assert octant_defect(u.spectral(), g2) == 0
        assert divergence_defect(u) <= 1e-14
        assert e_norm(u, -1.0, 2.0, 1) == pytest.approx(1.0)

    def test_random_full_normalised_in_hybrid_norm(self, g2):
        u = make_initial_data("random_full", g2, normalise=(0.0, 3.0))
        assert mdot_norm(u, 0.0, 3.0, 1) == pytest.approx(1.0)

    def test_unknown_kind(self, g2):
        with pytest.raises(ValueError):
            make_initial_data("gaussian", g2)


class TestConfig:
    def test_exponents(self):
        assert select_exponents(2, 2) == (4.0, 4.0)
        assert select_exponents(2, 3) == (2.0, 24.0)
        with pytest.raises(HypothesisError):
            select_exponents(4, 3)

    @pytest.mark.parametrize("kw", [dict(regime="other", d=2, r=2.0),
                                    dict(regime=OCTANT_E, d=2, r=2.0, s=0.5),
                                    dict(regime=SMALL_MDOT, d=3, r=2.0),
                                    dict(regime=SMALL_MDOT, d=2, r=2.0, p=5.0),
                                    dict(regime=OCTANT_E, d=2, r=2.0, nt=0)])
    def test_rejects(self, kw):
        with pytest.raises(HypothesisError):
            SolverConfig(**kw)

    def test_hybrid_defaults(self):
        cfg = SolverConfig(SMALL_MDOT, 2, 2.0)
        assert (cfg.gamma, cfg.p) == (2.0, 3.0)


class TestPicard:
    def test_zero_data_gives_zero(self, g2_small, small_cfg):
        u0 = VectorField.from_spectral(g2_small, np.zeros((2,) + g2_small.shape), True)
        traj, diag = picard_solve(u0, small_cfg)
        assert not traj.coeffs.any()
        assert diag.converged and diag.residual == 0

    def test_small_data_converges(self, g2_small, small_cfg):
        u0 = make_initial_data("random_octant", g2_small, normalise=(-1.0, 2.0))
        u0 = VectorField.from_spectral(g2_small, 0.1 * u0.spectral(), True)
        traj, diag = picard_solve(u0, small_cfg)
        assert diag.converged
        assert diag.residual <= 10 * small_cfg.picard_tol
        assert octant_defect(traj.coeffs, g2_small) <= 1e-14
        assert divergence_defect((traj.coeffs, g2_small)) <= 1e-12
        # iterates are recorded verbatim
        assert len(diag.norms) == diag.iterations + 1

    def test_rejects_full_support_in_octant_regime(self, g2_small, small_cfg):
        with pytest.raises(HypothesisError, match="octant"):
            picard_solve(make_initial_data("random_full", g2_small), small_cfg)

    def test_dimension_mismatch(self, g3, small_cfg):
        with pytest.raises(GridError):
            picard_solve(make_initial_data("random_octant", g3), small_cfg)

    def test_residual_of_heat_flow_is_nonlinear_term(self, g2_small, small_cfg):
        # with the nonlinearity cut away everywhere the heat flow is an exact solution
        u0 = make_initial_data("random_octant", g2_small)
        t = small_cfg.times()
        traj = Trajectory(g2_small, t, np.exp(-t[:, None, None, None] * g2_small.xi_sq())
                          * u0.spectral()[None])
        assert mild_residual(traj, u0.spectral(), small_cfg, band_limit=-1) <= 1e-15

    def test_bisection_finds_threshold(self, g2_small, small_cfg):
        base = make_initial_data("random_octant", g2_small, normalise=(-1.0, 2.0))

        def data(eps):
            return VectorField.from_spectral(g2_small, eps * base.spectral(), True)

        res = bisect_epsilon(data, small_cfg, hi=0.5, steps=2, max_doublings=1)
        assert res.eps > 0 and res.diagnostics.converged
        assert res.diagnostics.final_ratio < 0.9


class TestScaling:
    def test_doc_example(self, g2_small):
        h = scale_field(single_mode(g2_small, (0.5, 0.25)), 2)
        assert abs(h.spectral()[g2_small.index_of((1.0, 0.5))]) == 1.0

    def test_round_trip(self, g2):
        c = np.zeros(g2.shape, complex)
        c[g2.index_of((0.5, -1.0))] = 2.0
        up, lost = scale_coeffs(c, g2, 2)
        back, _ = scale_coeffs(up, g2, 0.5)
        assert lost == 0
        np.testing.assert_array_equal(back, c)

    def test_spatial_meaning(self, g2, rng):
        # f(lam x) sampled directly
        f = single_mode(g2, (0.75, 0.25))
        h = scale_field(f, 3)
        x = g2.spatial_mesh()
        np.testing.assert_allclose(h.spatial(), np.exp(1j * 3 * (0.75 * x[0] + 0.25 * x[1])),
                                   atol=1e-12)

    def test_overflow(self, g2):
        with pytest.warns(RuntimeWarning, match="cutoff"):
            h = scale_field(single_mode(g2, (3, 0)), 2)
        assert h.flags[0].startswith("band_overflow")

    @pytest.mark.parametrize("lam", [0.0, -2.0, 1.5, 0.4])
    def test_bad_factor(self, g2, lam):
        with pytest.raises(HypothesisError):
            scale_coeffs(np.ones(g2.shape), g2, lam)

    def test_fractional_needs_sublattice(self, g2):
        with pytest.raises(HypothesisError, match="divisible"):
            scale_coeffs(single_mode(g2, (0.25, 0)).spectral(), g2, 0.5)

    def test_scaled_solve_zero(self, g2_small, small_cfg):
        u0 = VectorField.from_spectral(g2_small, np.zeros((2,) + g2_small.shape), True)
        out = scaled_solve(u0, small_cfg, 2)
        assert out.s0 == -2.0
        assert not out.unscaled.coeffs.any()
        assert out.unscaled.times[-1] == pytest.approx(4 * small_cfg.T)


class TestCounterexample:
    @pytest.mark.parametrize("k", [(1, 0), (2, 1), (3, 3)])
    @pytest.mark.parametrize("s", [-1.0, -0.5])
    def test_two_mode_ratio(self, g2, k, s):
        expect = 2.0 ** (-2 * s * sum(abs(v) for v in k))
        assert counterexample_ratio(g2, k, s) == pytest.approx(expect, rel=1e-10)


class TestRadius:
    @settings(max_examples=15, deadline=None)
    @given(sigma=st.floats(0.1, 3.0))
    def test_recovers_exponential_envelope(self, sigma):
        g = make_grid(2, 4, 4)
        c = np.exp2(-sigma * g.xi_l1()) * octant_mask(g)
        fit = analyticity_radius((c[None], g))
        assert fit.defined
        assert fit.radius == pytest.approx(sigma, rel=1e-8)

    def test_undefined_when_empty(self, g2):
        fit = analyticity_radius((np.zeros((1,) + g2.shape), g2))
        assert not fit.defined and np.isnan(fit.radius)

    def test_crossing(self):
        t = np.array([0.0, 1.0, 2.0])
        assert radius_crossing_time(t, np.array([-1.0, -0.5, 0.5])) == pytest.approx(1.5)
        assert np.isnan(radius_crossing_time(t, np.array([-3.0, -2.0, -1.0])))
        assert radius_crossing_time(t, np.array([0.2, 0.3, 0.4])) == 0.0

    def test_rate(self):
        t = np.linspace(0, 1, 5)
        r = -1 + 0.7 * np.sqrt(t)
        assert analytic_rate(t, r) == pytest.approx(0.7)


def test_trajectory_round_trip(g2_small, rng, tmp_path):
    t = uniform_times(1.0, 2)
    c = np.stack([_vec(g2_small, rng).spectral() for _ in t])
    traj = Trajectory(g2_small, t, c)
    save_trajectory(traj, tmp_path / "tr", {"seed": 1})
    back = load_trajectory(tmp_path / "tr")
    np.testing.assert_allclose(back.times, t)
    np.testing.assert_allclose(back.coeffs, c, rtol=1e-6, atol=1e-5)
