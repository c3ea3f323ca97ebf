import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from modns.decomp import (
    DILATED, DYADIC, SHARP, SMOOTH, WindowError, almost_orthogonality_defect, block,
    block_lp_norms, block_set, bump_cdf, export_window_csv, field_block_norms, make_window,
    phi_radial, psi_radial, reconstruction_error, sigma_1d,
)
from modns.grid import lp_norm, make_grid, random_field, single_mode, to_spatial, lp_of_samples


class TestProfiles:
    def test_bump_cdf_ends(self):
        np.testing.assert_allclose(bump_cdf(np.array([-2.0, -1.0, 1.0, 3.0])), [0, 0, 1, 1],
                                   atol=1e-14)
        assert bump_cdf(0.0) == pytest.approx(0.5, abs=1e-14)

    def test_bump_cdf_monotone(self):
        v = bump_cdf(np.linspace(-1, 1, 401))
        assert np.all(np.diff(v) >= -1e-15)

    def test_sigma_support_and_plateau(self):
        t = np.array([-0.8, -0.76, 0.76, 0.8])
        np.testing.assert_allclose(sigma_1d(t), 0.0, atol=1e-15)
        np.testing.assert_allclose(sigma_1d(np.linspace(-0.25, 0.25, 11)), 1.0, atol=1e-14)

    @settings(max_examples=50, deadline=None)
    @given(t=st.floats(-5, 5))
    def test_sigma_shifts_sum_to_one(self, t):
        ks = np.arange(-8, 9)
        assert np.sum(sigma_1d(t - ks)) == pytest.approx(1.0, abs=1e-13)

    def test_psi_phi(self):
        np.testing.assert_allclose(psi_radial(np.array([0.0, 1.0, 2.0, 5.0])), [1, 1, 0, 0],
                                   atol=1e-14)
        r = np.linspace(0.01, 10, 500)
        js = np.arange(-10, 6)
        tot = sum(phi_radial(r / 2.0**j) for j in js)
        np.testing.assert_allclose(tot, 1.0, atol=1e-12)


class TestWindows:
    @pytest.mark.parametrize("kind,alpha", [(SMOOTH, 1.0), (SHARP, 1.0), (DYADIC, 1.0),
                                            (DILATED, 1.5), (DILATED, 2.0)])
    def test_reconstruction(self, g2, rng, kind, alpha):
        w = make_window(kind, g2, alpha)
        f = random_field(g2, rng)
        assert reconstruction_error(f, w) <= 1e-12

    def test_sharp_symbols_are_indicators(self, g2):
        w = make_window(SHARP, g2)
        for k in w.block_indices():
            sym = w.symbol(k)
            assert set(np.unique(sym)) <= {0.0, 1.0}

    def test_sharp_block_of_single_mode(self, g2):
        w = make_window(SHARP, g2)
        f = single_mode(g2, (1.25, -2.5))
        bs = block_set(f, w)
        live = [k for k, v in bs.pieces.items() if np.abs(v.spectral()).max() > 0]
        # floor(1.25) = 1, floor(-2.5) = -3
        assert live == [(1, -3)]

    def test_block_set_total(self, g2, rng):
        f = random_field(g2, rng)
        bs = block_set(f, make_window(SMOOTH, g2))
        np.testing.assert_allclose(bs.total().spectral(), f.spectral(), atol=1e-12)

    def test_out_of_band_index(self, g2):
        w = make_window(SMOOTH, g2)
        with pytest.warns(RuntimeWarning):
            out = block(single_mode(g2, (0, 0)), (99, 0), w)
        assert "index_out_of_band" in out.flags
        assert not out.spectral().any()

    def test_bad_kind_and_alpha(self, g2):
        with pytest.raises(WindowError):
            make_window("hexagonal", g2)
        with pytest.raises(WindowError):
            make_window(DILATED, g2, -1.0)

    def test_transition_band_too_coarse(self):
        # alpha*[1/4,3/4] at m=4 holds one point for alpha=0.5
        with pytest.raises(WindowError, match="lattice point"):
            make_window(DILATED, make_grid(2, 4, 2), 0.5)

    @pytest.mark.parametrize("kind", [SMOOTH, SHARP])
    def test_almost_orthogonality(self, g2_small, kind):
        assert almost_orthogonality_defect(make_window(kind, g2_small), n_fields=5) <= 1e-12

    def test_csv(self, g2_small, tmp_path):
        w = make_window(SMOOTH, g2_small)
        export_window_csv(w, tmp_path / "w.csv")
        rows = (tmp_path / "w.csv").read_text().splitlines()
        assert rows[0] == "n1,n2,xi1,xi2,value"
        assert len(rows) == 1 + g2_small.n_modes**2


class TestBlockNorms:
    @pytest.mark.parametrize("kind", [SMOOTH, SHARP])
    @pytest.mark.parametrize("p", [1.0, 2.0, 3.0, np.inf])
    def test_local_grid_matches_full_grid(self, g2, rng, kind, p):
        w = make_window(kind, g2)
        c = random_field(g2, rng, decay=0.5).spectral()
        fast = block_lp_norms(c[None, None], w, p, quadrature=4.0)[0]
        # direct oracle: transform every block on the full grid
        ref = np.zeros(w.block_shape())
        for pos, k in zip(np.ndindex(*w.block_shape()), w.block_indices()):
            ref[pos] = lp_of_samples(to_spatial(c * w.symbol(k), 2), p, 2)
        tol = 1e-12 if p == 2 else 0.08
        np.testing.assert_allclose(fast, ref, rtol=tol, atol=1e-12)

    def test_exact_with_full_quadrature(self, g2, rng):
        w = make_window(SMOOTH, g2)
        f = random_field(g2, rng)
        full = field_block_norms(f, w, 3.0, quadrature=None)
        for pos, k in zip(np.ndindex(*w.block_shape()), w.block_indices()):
            assert full[pos] == pytest.approx(lp_norm(block(f, k, w), 3.0), rel=1e-12, abs=1e-14)

    def test_dyadic_shape(self, g2, rng):
        w = make_window(DYADIC, g2)
        out = block_lp_norms(random_field(g2, rng).spectral()[None, None], w, 2.0)
        assert out.shape == (1, w.j_range[1] - w.j_range[0] + 1)

    def test_plancherel_sum(self, g2, rng):
        # sharp blocks are disjoint, so l2 of block L2 norms is the field L2 norm
        w = make_window(SHARP, g2)
        f = random_field(g2, rng)
        bn = field_block_norms(f, w, 2.0)
        assert np.sqrt(np.sum(bn**2)) == pytest.approx(lp_norm(f, 2), rel=1e-12)
