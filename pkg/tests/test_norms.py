import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from modns.decomp import SHARP, SMOOTH
from modns.grid import VectorField, lp_norm, make_grid, random_field, single_mode, zeros
from modns.heat import Trajectory, uniform_times
from modns.norms import (
    NormError, NormRecord, NormSpec, TimeNormSpec, besov_norm, besov_terms, e_norm, evaluate,
    export_norms_csv, gevrey_ratio, log_gevrey_ratio, lq_sum, m_norm, mdot_norm,
    pointwise_weight_l2, time_lebesgue, timespace_norm, weight_exponent,
)


class TestSingleModes:
    # a sharp block holding one mode has L^p norm |amplitude| for every p
    @pytest.mark.parametrize("xi,s", [((2, 1), -1.0), ((0, 0), 0.5), ((-1.5, 3.25), 2.0)])
    @pytest.mark.parametrize("p", [1.0, 2.0, np.inf])
    def test_e_norm_sharp(self, g2, xi, s, p):
        k = np.floor(np.asarray(xi))
        expect = 2.0 ** (s * np.abs(k).sum())
        assert e_norm(single_mode(g2, xi), s, p, 1, SHARP) == pytest.approx(expect, rel=1e-12)

    def test_m_norm_sharp(self, g2):
        val = m_norm(single_mode(g2, (2, -1)), 2.0, 2, 1, SHARP)
        # bracket of block (2, -1)
        assert val == pytest.approx(1 + 4 + 1, rel=1e-12)

    def test_zero_field(self, g2):
        z = zeros(g2)
        assert e_norm(z, -1, 2, 1) == 0
        assert m_norm(z, 1, 2, 2) == 0
        assert mdot_norm(z, -1, 2, 1) == 0
        assert besov_norm(z, 0, 2, 1) == 0


class TestIdentities:
    def test_sharp_e_l2_l2_is_weighted_plancherel(self, g2, rng):
        f = random_field(g2, rng)
        s = -0.5
        c = f.spectral()
        # sharp block index of each mode is floor(xi) per axis
        l1 = sum(np.abs(np.floor(x)) * np.ones(g2.shape) for x in g2.frequency_mesh())
        expect = np.sqrt(np.sum(np.abs(c * np.exp2(s * l1)) ** 2))
        assert e_norm(f, s, 2, 2, SHARP) == pytest.approx(expect, rel=1e-12)

    def test_vector_equals_scalar_for_one_component(self, g2, rng):
        f = random_field(g2, rng)
        u = VectorField((f,))
        assert e_norm(u, -1, 3, 1) == pytest.approx(e_norm(f, -1, 3, 1), rel=1e-14)

    @settings(max_examples=20, deadline=None)
    @given(q1=st.sampled_from([1.0, 1.5, 2.0, 4.0]), q2=st.sampled_from([2.0, 4.0, np.inf]))
    def test_q_monotone(self, q1, q2):
        g = make_grid(2, 4, 2)
        f = random_field(g, np.random.default_rng(5))
        if q1 <= q2:
            assert e_norm(f, -1, 2, q2) <= e_norm(f, -1, 2, q1) * (1 + 1e-13)

    def test_evaluate_dispatch(self, g2, rng):
        f = random_field(g2, rng)
        assert evaluate(f, NormSpec("E", -1, 2, 1)) == e_norm(f, -1, 2, 1)
        assert evaluate(f, NormSpec("M", 1, 2, 1)) == m_norm(f, 1, 2, 1)
        assert evaluate(f, NormSpec("Besov", 0, 2, 1)) == besov_norm(f, 0, 2, 1, homogeneous=False)

    def test_besov_terms_sum(self, g2, rng):
        f = random_field(g2, rng)
        t = besov_terms(f, 0.5, 2)
        assert lq_sum(np.array(list(t.values())), 1) == pytest.approx(besov_norm(f, 0.5, 2, 1))

    def test_pointwise_weight_l2_at_zero_is_l2(self, g2, rng):
        f = random_field(g2, rng)
        assert pointwise_weight_l2(f, 0.0) == pytest.approx(lp_norm(f, 2), rel=1e-12)


class TestSpecs:
    @pytest.mark.parametrize("kw", [dict(family="X"), dict(family="E", p=0.5),
                                    dict(family="E", q=0.9), dict(family="Mdot", p=1.0),
                                    dict(family="Mdot", p=np.inf)])
    def test_rejects(self, kw):
        with pytest.raises(NormError):
            NormSpec(**kw)

    def test_time_spec(self):
        with pytest.raises(NormError):
            TimeNormSpec(0.5, NormSpec("E"))
        with pytest.raises(NormError):
            TimeNormSpec(2.0, NormSpec("Besov"))


class TestLq:
    def test_values(self):
        v = np.array([3.0, -4.0])
        assert lq_sum(v, 1) == 7
        assert lq_sum(v, 2) == pytest.approx(5)
        assert lq_sum(v, np.inf) == 4
        assert lq_sum(np.array([]), 2) == 0


class TestTime:
    def test_trapezoid_exact_for_linear(self):
        t = np.linspace(0, 2, 9)
        h = (1 + t)[:, None]
        assert time_lebesgue(h, t, 1.0)[0] == pytest.approx(4.0)
        assert time_lebesgue(h, t, np.inf)[0] == 3.0

    def test_weight_exponent(self):
        t = np.array([0.0, 1.0, 100.0])
        np.testing.assert_allclose(weight_exponent(-1, t, "analytic", 0.5), [-1, -0.5, 1])
        np.testing.assert_allclose(weight_exponent(-1, t, "fixed", 0.5), -1)

    def test_constant_path(self, g2, rng):
        f = random_field(g2, rng)
        t = uniform_times(1.0, 8)
        tr = Trajectory(g2, t, np.repeat(f.spectral()[None, None], t.size, axis=0))
        ts = TimeNormSpec(2.0, NormSpec("E", -1, 2, 1, SHARP))
        # unit interval: time L^2 of a constant is the constant
        assert timespace_norm(tr, ts) == pytest.approx(e_norm(f, -1, 2, 1, SHARP), rel=1e-12)


class TestGevrey:
    def test_single_mode(self, g2):
        f = single_mode(g2, (2, 1))
        # |d^a e^{i xi x}| = |xi^a|
        val = gevrey_ratio(f, (3, 2), 0.5, 2)
        assert val == pytest.approx(2**3 * 1**2 * 0.5**5 / (6 * 2), rel=1e-12)

    def test_vanishing_derivative(self, g2):
        assert log_gevrey_ratio(single_mode(g2, (0, 1)), (1, 0), 1.0, 2) == -np.inf
        assert gevrey_ratio(single_mode(g2, (0, 1)), (1, 0), 1.0, 2) == 0.0

    def test_no_overflow_at_high_order(self, g2):
        v = log_gevrey_ratio(single_mode(g2, (4, 4)), (150, 150), 1.0, 2)
        assert np.isfinite(v)

    def test_bad_index(self, g2):
        with pytest.raises(NormError):
            log_gevrey_ratio(single_mode(g2, (1, 1)), (1,), 1.0, 2)


def test_export_csv(tmp_path):
    export_norms_csv([NormRecord("f0", "E", -1.0, 2.0, 1.0, SMOOTH, 0.25)], tmp_path / "n.csv")
    lines = (tmp_path / "n.csv").read_text().splitlines()
    assert lines[0] == "field_id,family,s,p,q,variant,value"
    assert lines[1].endswith("0.25")
