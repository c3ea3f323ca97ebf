import numpy as np
import pytest

from modns.grid import HypothesisError, VectorField, make_grid, random_field, single_mode
from modns.heat import (
    ESTIMATES, HeatError, SmoothingRecord, Trajectory, block_decay_fit, block_horizon, duhamel,
    duhamel_all, export_smoothing_csv, heat_apply, heat_evolve, pulse_forcing,
    riesz_multiplier, smoothing_ratio, uniform_times, validate_exponents,
)


class TestSemigroup:
    def test_single_mode_decay(self, g2):
        f = heat_apply(single_mode(g2, (1.5, -1)), 0.3)
        assert abs(f.spectral()[g2.index_of((1.5, -1))]) == pytest.approx(np.exp(-0.3 * 3.25))

    def test_semigroup_property(self, g2, rng):
        f = random_field(g2, rng)
        a = heat_apply(heat_apply(f, 0.2), 0.5)
        np.testing.assert_allclose(a.spectral(), heat_apply(f, 0.7).spectral(), atol=1e-14)

    def test_vector_keeps_divergence_flag(self, g2, rng):
        u = VectorField((random_field(g2, rng), random_field(g2, rng)), divergence_free=True)
        assert heat_apply(u, 0.1).divergence_free

    def test_negative_time(self, g2):
        with pytest.raises(HeatError):
            heat_apply(single_mode(g2, (0, 0)), -1.0)
        with pytest.raises(HeatError):
            heat_evolve(np.zeros((1,) + g2.shape), np.array([-1.0]), g2)

    def test_evolve_matches_apply(self, g2, rng):
        f = random_field(g2, rng)
        t = uniform_times(1.0, 4)
        path = heat_evolve(f.spectral()[None], t, g2)
        for i, ti in enumerate(t):
            np.testing.assert_allclose(path[i, 0], heat_apply(f, ti).spectral(), atol=1e-14)


class TestTrajectory:
    def test_validation(self, g2):
        c = np.zeros((3, 1) + g2.shape)
        with pytest.raises(HeatError):
            Trajectory(g2, np.array([0.1, 0.2, 0.3]), c)
        with pytest.raises(HeatError):
            Trajectory(g2, np.array([0.0, 0.1, 0.5]), c)
        with pytest.raises(Exception):
            Trajectory(g2, np.array([0.0, 0.1]), c)

    def test_uniform_times(self):
        np.testing.assert_allclose(uniform_times(2.0, 4), [0, 0.5, 1, 1.5, 2])
        with pytest.raises(HeatError):
            uniform_times(0.0, 4)


class TestDuhamel:
    def test_running_sum_matches_direct(self, g2, rng):
        t = uniform_times(0.5, 10)
        f = random_field(g2, rng, decay=0.5).spectral()
        forcing = pulse_forcing(g2, f[None], t, 0.2)
        allp = duhamel_all(forcing)
        for n in (0, 1, 5, 10):
            np.testing.assert_allclose(allp.coeffs[n], duhamel(forcing, n).spectral(),
                                       atol=1e-12)

    def test_constant_forcing_closed_form(self, g2):
        # int_0^t e^{-(t-s)|xi|^2} ds = (1 - e^{-t|xi|^2}) / |xi|^2
        xi = (1.0, 0.5)
        t = uniform_times(1.0, 400)
        prof = single_mode(g2, xi).spectral()[None]
        forcing = Trajectory(g2, t, np.repeat(prof[None], t.size, axis=0))
        val = duhamel_all(forcing).coeffs[-1, 0][g2.index_of(xi)]
        lam = 1.25
        assert abs(val) == pytest.approx((1 - np.exp(-lam)) / lam, rel=1e-5)

    def test_bad_index(self, g2):
        t = uniform_times(1.0, 2)
        forcing = Trajectory(g2, t, np.zeros((3, 1) + g2.shape))
        with pytest.raises(HeatError):
            duhamel(forcing, 5)


class TestBlockTools:
    def test_riesz_multiplier(self, g2):
        r = riesz_multiplier(g2, 1.0)
        assert r[(g2.half,) * 2] == 0
        assert r[g2.index_of((3, 4))] == pytest.approx(5.0)

    def test_decay_fit_single_mode(self, g2):
        # the mode sits at the block centre, so the fitted rate is exactly 1
        c = block_decay_fit(single_mode(g2, (2, 1)), (2, 1), 2.0, uniform_times(0.2, 10))
        assert c == pytest.approx(1.0, abs=1e-10)

    def test_decay_fit_rejects(self, g2):
        with pytest.raises(HeatError):
            block_decay_fit(single_mode(g2, (2, 1)), (0, 0), 2.0, uniform_times(1.0, 4))
        with pytest.raises(HeatError, match="identically zero"):
            block_decay_fit(single_mode(g2, (2, 1)), (-3, 3), 2.0, uniform_times(1.0, 4))

    def test_block_horizon(self):
        assert block_horizon((0, 0)) == 8.0
        assert block_horizon((1, 1), 4.0) == 2.0


class TestSmoothing:
    @pytest.mark.parametrize("gamma", [1.0, 2.0, 4.0])
    def test_heat_time_closed_form(self, g2, gamma):
        # block at its centre: LHS = ((1 - e^{-g T |k|^2}) / (g |k|^2))^{1/g}
        k = (2, 1)
        T = 1.0
        t = uniform_times(T, 4000)
        res = smoothing_ratio("L6.2-heat-time", single_mode(g2, k), {"p": 2.0, "gamma": gamma},
                              k, t)
        k2 = 5.0
        lhs = ((1 - np.exp(-gamma * T * k2)) / (gamma * k2)) ** (1 / gamma)
        assert res.lhs == pytest.approx(lhs, rel=1e-4)
        assert res.rhs == pytest.approx(k2 ** (-1 / gamma), rel=1e-12)

    def test_linf_bound_is_sharp(self, g2, rng):
        res = smoothing_ratio("C6.8-heat-Linf", random_field(g2, rng), {"r": 2.0}, (1, 1),
                              uniform_times(1.0, 8))
        assert res.ratio == pytest.approx(1.0, rel=1e-12)

    def test_registry_statements(self):
        assert len(ESTIMATES) == 22
        for cid, est in ESTIMATES.items():
            assert est.check_id == cid and "<=" in est.statement
            assert est.kind in ("heat", "duhamel")

    def test_unknown_and_missing(self, g2):
        with pytest.raises(KeyError):
            validate_exponents("nope", {}, 2)
        with pytest.raises(HypothesisError, match="needs exponents"):
            validate_exponents("L6.2-heat-time", {"p": 2.0}, 2)

    def test_block_restrictions(self, g2):
        t = uniform_times(1.0, 4)
        with pytest.raises(HypothesisError, match=r"\|k\|_inf >= 1"):
            smoothing_ratio("L6.2-heat-time", single_mode(g2, (0, 0)), {"p": 2, "gamma": 2},
                            (0, 0), t)
        with pytest.raises(HypothesisError, match="k = 0"):
            smoothing_ratio("L6.5-low-heat", single_mode(g2, (1, 0)),
                            {"r": 2, "p": 4, "gamma": 2, "alpha": 1.0}, (1, 0), t)

    def test_duhamel_needs_forcing(self, g2):
        with pytest.raises(HeatError, match="forcing"):
            smoothing_ratio("L6.3-duhamel-time", single_mode(g2, (1, 0)),
                            {"p": 2, "gamma": 2, "gamma1": 2}, (1, 0))

    def test_heat_needs_times(self, g2):
        with pytest.raises(HeatError, match="time samples"):
            smoothing_ratio("C6.8-heat-Linf", single_mode(g2, (1, 0)), {"r": 2.0}, (1, 0))

    def test_low_r_hypothesis_in_two_dims(self, g2):
        with pytest.raises(HypothesisError):
            validate_exponents("C10.8-weighted-low-r", {"r": 2.0, "p": 4.0, "c": 0.1}, 2)


def test_export_csv(tmp_path):
    export_smoothing_csv([SmoothingRecord("L6.2-heat-time", (1, 0), {"p": 2.0}, 0.5, 4, 0)],
                         tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "check_id,k,exponents,ratio,grid_m,seed"
    assert len(lines) == 2
