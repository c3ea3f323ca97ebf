"""Gaussian-window short-time Fourier transform on the periodic grid.

The window is ``g(x) = pi^(-d/2) exp(-|x|^2/2)``.  For a band-limited field
``f(t) = sum_n c_n exp(i t.eta_n)`` the transform has the closed form

    V_g f(x, xi) = 2^(d/2) sum_n c_n exp(-|eta_n - xi|^2/2) exp(i x.(eta_n - xi)),

which :func:`stft` evaluates exactly (it is the Gaussian integral done
analytically).  :func:`spatial_stft` computes the same transform by
quadrature against the periodised window and serves as an independent route.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from .grid import Field, HypothesisError, SpectralGrid, pad_spectrum, to_spatial, to_spectral

MIN_PERIOD_IN_STD = 12.0
XI_MARGIN = 4.0


class StftError(HypothesisError):
    """Inadmissible lattice or grid for the Gaussian window."""


@dataclass(frozen=True, eq=False)
class StftCoefficients:
    """Samples of ``V_g f`` on a product lattice.

    ``values`` has axis order ``(x_1, ..., x_d, xi_1, ..., xi_d)``; both
    lattices are tensor products of the 1-D axes stored here.
    """

    grid: SpectralGrid
    x_axis: np.ndarray
    xi_axis: np.ndarray
    values: np.ndarray
    a: float
    b: float

    @property
    def d(self) -> int:
        return self.grid.d


def gaussian_window(x: np.ndarray) -> np.ndarray:
    """``pi^(-d/2) exp(-|x|^2/2)`` for coordinates stacked on axis 0."""
    x = np.asarray(x, dtype=float)
    d = x.shape[0]
    return np.pi ** (-d / 2) * np.exp(-0.5 * np.sum(x**2, axis=0))


def gaussian_field(grid: SpectralGrid, x0=None, omega0=None) -> Field:
    """Periodised, band-limited ``M_omega0 T_x0 g`` as a spectral Field.

    Coefficients are ``g_hat(eta - omega0) exp(-i x0.(eta - omega0)) / P^d``
    with ``g_hat(w) = 2^(d/2) exp(-|w|^2/2)`` and ``P`` the period.
    """
    d = grid.d
    x0 = np.zeros(d) if x0 is None else np.asarray(x0, float)
    omega0 = np.zeros(d) if omega0 is None else np.asarray(omega0, float)
    c = np.ones(grid.shape, dtype=complex) * 2 ** (d / 2) / grid.period**d
    for eta, xa, wa in zip(grid.frequency_mesh(), x0, omega0):
        c = c * np.exp(-0.5 * (eta - wa) ** 2) * np.exp(-1j * xa * (eta - wa))
    return Field(grid, "spectral", c)


def _check_lattice(grid: SpectralGrid, a: float, b: float) -> None:
    if not (a > 0 and b > 0):
        raise StftError(f"lattice steps must be positive, got a={a}, b={b}")
    if a * b > 2 * np.pi + 1e-12:
        raise StftError(f"lattice violates a*b <= 2*pi (a*b = {a * b:.4g})")
    if grid.period < MIN_PERIOD_IN_STD:
        raise StftError(f"period {grid.period:.3g} below {MIN_PERIOD_IN_STD} window widths")


def lattice_axes(grid: SpectralGrid, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """x-lattice covering one period and xi-lattice covering the band plus a margin."""
    nx = int(np.floor(grid.period / a - 1e-9)) + 1
    x = np.arange(nx) * a
    lim = grid.K + XI_MARGIN
    nxi = int(np.floor(lim / b + 1e-9))
    xi = np.arange(-nxi, nxi + 1) * b
    return x, xi


def _axis_kernel(grid: SpectralGrid, x: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """``exp(-(eta-xi)^2/2) exp(i x (eta-xi))`` with shape ``(nx, nxi, N)``."""
    eta = grid.axis_frequencies()
    diff = eta[None, :] - xi[:, None]
    return np.exp(-0.5 * diff**2)[None] * np.exp(1j * x[:, None, None] * diff[None])


def stft_from_coeffs(coeffs: np.ndarray, grid: SpectralGrid, x: np.ndarray,
                     xi: np.ndarray) -> np.ndarray:
    """Exact spectral evaluation of ``V_g f`` on the lattice ``x^d x xi^d``."""
    d = grid.d
    ker = _axis_kernel(grid, x, xi)
    t = coeffs.astype(complex)
    # contract one frequency axis at a time; each step appends an (x, xi) pair
    for _ in range(d):
        t = np.tensordot(ker, t, axes=([2], [0]))  # (nx, nxi, rest..., done pairs...)
        t = np.moveaxis(t, (0, 1), (-2, -1))
    # axes are now (x1, xi1, x2, xi2, ...); reorder to (x1..xd, xi1..xid)
    order = [2 * i for i in range(d)] + [2 * i + 1 for i in range(d)]
    return 2 ** (d / 2) * np.transpose(t, order)


def stft(f: Field, a: float, b: float) -> StftCoefficients:
    """Short-time Fourier transform of ``f`` on the lattice ``aZ^d x bZ^d``.

    Parameters
    ----------
    f : Field
    a, b : float
        Spatial and frequency lattice steps with ``a * b <= 2*pi``.

    Raises
    ------
    StftError
        For lattices outside the frame regime or grids too small for the
        window to decay across one period.
    """
    grid = f.grid
    _check_lattice(grid, a, b)
    x, xi = lattice_axes(grid, a, b)
    vals = stft_from_coeffs(f.spectral(), grid, x, xi)
    return StftCoefficients(grid, x, xi, vals, float(a), float(b))


def spatial_stft(f: Field, x_points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature route for ``V_g f(x, xi)`` at frequencies of the padded lattice.

    For each spatial point ``x`` (rows of ``x_points``, shape ``(n, d)``) the
    product of ``f`` with the periodised window ``g(. - x)`` is sampled on a
    grid fine enough that the window's spectral spread cannot alias into the
    band plus margin, then integrated against ``exp(-i t.xi)`` by FFT.  This
    gives all ``xi`` in ``Z^d/m`` at once.  Returns ``(values, xi_axis)`` with
    values shaped ``(n, M, ..., M)`` in centred frequency order.
    """
    grid = f.grid
    d = grid.d
    L = sfft.next_fast_len(int(grid.m * (2 * grid.K + 2 * XI_MARGIN + 10)) + 1)
    P = grid.period
    fpad = to_spatial(pad_spectrum(f.spectral(), d, L), d)
    t1 = np.arange(L) * P / L
    mesh = np.meshgrid(*([t1] * d), indexing="ij")
    out = []
    for x in np.atleast_2d(x_points):
        diffs = []
        for ax in range(d):
            dd = mesh[ax] - x[ax]
            dd = (dd + P / 2) % P - P / 2  # nearest periodic image; the window is negligible beyond
            diffs.append(dd)
        w = gaussian_window(np.stack(diffs))
        # integral over one period = P^d * mean = P^d * zero-frequency coefficient
        out.append(to_spectral(np.conj(w) * fpad, d) * P**d)
    xi_axis = (np.arange(L) - L // 2) / grid.m
    return np.stack(out), xi_axis


def fourier_symmetry_defect(f: Field, n_x: int = 8) -> float:
    """Max deviation of ``|V_g f(x, xi)|`` (quadrature) from ``|V_g^ f^(xi, -x)|`` (spectral).

    The spectral side is the Gaussian-integral closed form on the Fourier
    side; both are compared on ``n_x`` points per axis times every lattice
    frequency within the band plus margin.
    """
    grid = f.grid
    d = grid.d
    xs = np.linspace(0, grid.period, n_x, endpoint=False)
    pts = np.stack(np.meshgrid(*([xs] * d), indexing="ij"), axis=-1).reshape(-1, d)
    lhs, xi_axis = spatial_stft(f, pts)
    keep = np.abs(xi_axis) <= grid.K + XI_MARGIN
    xi_sel = xi_axis[keep]
    for ax in range(d):
        lhs = np.compress(keep, lhs, axis=1 + ax)
    rhs = stft_from_coeffs(f.spectral(), grid, xs, xi_sel)
    rhs = rhs.reshape((n_x**d,) + (xi_sel.size,) * d)
    return float(np.max(np.abs(np.abs(lhs) - np.abs(rhs)))) if lhs.size else 0.0


# ---------------------------------------------------------------------------
# norms


def _xi_weight(xi_axis: np.ndarray, d: int, s: float, family: str) -> np.ndarray:
    mesh = np.meshgrid(*([xi_axis] * d), indexing="ij")
    if family == "polynomial":
        return (1.0 + sum(m**2 for m in mesh)) ** (s / 2)
    if family == "exponential":
        return np.exp2(s * sum(np.abs(m) for m in mesh))
    raise ValueError(f"unknown weight family {family!r}")


def _mean_lp(vals: np.ndarray, p: float, axes: tuple[int, ...]) -> np.ndarray:
    a = np.abs(vals)
    if np.isinf(p):
        return a.max(axis=axes)
    return np.mean(a**p, axis=axes) ** (1.0 / p)


def stft_mod_norm(coeffs: StftCoefficients, s: float, p: float, q: float,
                  family: str = "exponential") -> float:
    """``|| w(xi) ||V_g f(., xi)||_{L^p_x} ||_{L^q_xi}``.

    The ``x`` integral uses the normalised measure of one period (matching the
    block norms); the ``xi`` integral is a Riemann sum with cell ``b^d``.
    """
    d = coeffs.d
    inner = _mean_lp(coeffs.values, p, tuple(range(d)))
    wv = _xi_weight(coeffs.xi_axis, d, s, family) * inner
    if np.isinf(q):
        return float(wv.max())
    return float((np.sum(wv**q) * coeffs.b**d) ** (1.0 / q))


def gabor_coefficients(f: Field) -> StftCoefficients:
    """Analysis coefficients ``<f, M_m T_l g>`` on the integer lattice."""
    grid = f.grid
    x = np.arange(int(np.floor(grid.period)) + 1, dtype=float)
    x = x[x < grid.period]
    lim = int(grid.K + XI_MARGIN)
    xi = np.arange(-lim, lim + 1, dtype=float)
    vals = stft_from_coeffs(f.spectral(), grid, x, xi)
    return StftCoefficients(grid, x, xi, vals, 1.0, 1.0)


def gabor_coeff_norm(f: Field, s: float, p: float, q: float) -> float:
    """``|| <m>^s || c_(m,l) ||_(l^p_l) ||_(l^q_m)`` with a mean-normalised ``l^p_l``."""
    gc = gabor_coefficients(f)
    d = f.grid.d
    inner = _mean_lp(gc.values, p, tuple(range(d)))
    wv = _xi_weight(gc.xi_axis, d, s, "polynomial") * inner
    if np.isinf(q):
        return float(wv.max())
    return float(np.sum(wv**q) ** (1.0 / q))


def translate(f: Field, x0) -> Field:
    """``f(. - x0)`` by the exact spectral phase."""
    c = f.spectral()
    for eta, xa in zip(f.grid.frequency_mesh(), x0):
        c = c * np.exp(-1j * eta * float(xa))
    return Field(f.grid, "spectral", c)


def export_stft_csv(coeffs: StftCoefficients, path: str | Path) -> None:
    """Rows ``(x index, xi index, re, im)``; multi-indices joined by spaces."""
    d = coeffs.d
    vals = coeffs.values
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x_index", "xi_index", "re", "im"])
        for idx in np.ndindex(vals.shape):
            v = vals[idx]
            w.writerow([" ".join(map(str, idx[:d])), " ".join(map(str, idx[d:])),
                        repr(float(v.real)), repr(float(v.imag))])
