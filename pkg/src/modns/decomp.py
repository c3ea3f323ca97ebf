"""Frequency decompositions: uniform smooth and sharp cubes, dyadic annuli,
dilated lattices.

Uniform windows are tensor products of one-dimensional profiles, which keeps
block extraction cheap: each block only touches a small box of coefficients.
Block L^p norms are evaluated on a block-local quadrature grid (see
:func:`block_lp_norms`).
"""

from __future__ import annotations

import csv
import itertools
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterator

import numpy as np
import scipy.fft as sfft

from .grid import SPECTRAL, Field, SpectralGrid, lp_of_samples, to_spatial

SMOOTH = "smooth"
SHARP = "sharp"
DYADIC = "dyadic"
DILATED = "dilated"
UNIFORM_KINDS = (SMOOTH, SHARP, DILATED)

# points per block bandwidth on the local quadrature grid
DEFAULT_QUADRATURE = 4.0

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(96)


class WindowError(ValueError):
    pass


# ---------------------------------------------------------------------------
# one-dimensional profiles


def _bump(t: np.ndarray) -> np.ndarray:
    """Unnormalised C-infinity bump ``exp(-1/(1-t^2))`` on (-1, 1)."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1
    out[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
    return out


_BUMP_MASS = float(np.sum(_GL_WEIGHTS * _bump(_GL_NODES)))


def bump_cdf(x: np.ndarray) -> np.ndarray:
    """Normalised cumulative integral of the bump, 0 at -1 and 1 at +1.

    Evaluated with Gauss-Legendre quadrature on ``[-1, x]``; smooth monotone
    step used by every window profile.
    """
    x = np.clip(np.asarray(x, dtype=float), -1.0, 1.0)
    half = (x + 1.0) / 2.0
    nodes = half[..., None] * (_GL_NODES + 1.0) - 1.0
    vals = np.sum(_GL_WEIGHTS * _bump(nodes), axis=-1) * half
    return vals / _BUMP_MASS


def sigma_1d(t: np.ndarray) -> np.ndarray:
    """Mollified indicator of ``[-1/2, 1/2]``, supported in ``[-3/4, 3/4]``.

    The mollifier is the bump rescaled to ``[-1/4, 1/4]``, so the profile is
    ``B(4(t+1/2)) - B(4(t-1/2))`` with ``B`` the bump CDF.  Integer shifts sum
    to one by telescoping.
    """
    t = np.asarray(t, dtype=float)
    return bump_cdf(4.0 * (t + 0.5)) - bump_cdf(4.0 * (t - 0.5))


def psi_radial(r: np.ndarray) -> np.ndarray:
    """Radial cut-off: 1 for ``r <= 1``, 0 for ``r >= 2``."""
    r = np.asarray(r, dtype=float)
    return 1.0 - bump_cdf(2.0 * r - 3.0)


def phi_radial(r: np.ndarray) -> np.ndarray:
    """Dyadic annulus profile ``psi(r) - psi(2r)``, supported in ``[1/2, 2]``."""
    return psi_radial(r) - psi_radial(2.0 * r)


# ---------------------------------------------------------------------------
# windows


@dataclass(frozen=True, eq=False)
class Window:
    """Sampled symbols of one window family on a grid.

    For uniform kinds ``profiles[i, n]`` is the one-dimensional symbol of the
    block with coordinate ``indices[i]`` at lattice label ``n`` (array index).
    The d-dimensional symbol of block ``k`` is the tensor product of the rows
    for ``k_1, ..., k_d``.  For the dyadic kind ``radial[j]`` holds the full
    d-dimensional symbol of ``Delta_j``.

    Attributes
    ----------
    kind : str
        One of ``"smooth"``, ``"sharp"``, ``"dyadic"``, ``"dilated"``.
    grid : SpectralGrid
    alpha : float
        Lattice dilation (1 unless ``kind == "dilated"``).
    """

    kind: str
    grid: SpectralGrid
    alpha: float = 1.0
    indices: np.ndarray = field(default=None)
    profiles: np.ndarray = field(default=None)
    lo: np.ndarray = field(default=None)
    width: int = 0
    j_range: tuple[int, int] = (0, -1)
    radial: dict = field(default=None)

    @property
    def is_uniform(self) -> bool:
        return self.kind in UNIFORM_KINDS

    @property
    def support_box(self) -> str:
        if self.kind == SHARP:
            return "k+[0,1)^d"
        if self.kind == DYADIC:
            return "2^(j-1) <= |xi|_2 <= 2^(j+1)"
        return f"alpha*k + alpha*[-3/4,3/4]^d (alpha={self.alpha:g})"

    def block_indices(self) -> Iterator[tuple[int, ...]]:
        if self.kind == DYADIC:
            yield from ((j,) for j in range(self.j_range[0], self.j_range[1] + 1))
            return
        yield from itertools.product(self.indices.tolist(), repeat=self.grid.d)

    def block_shape(self) -> tuple[int, ...]:
        return (len(self.indices),) * self.grid.d

    def centre(self, k) -> np.ndarray:
        """Frequency-space centre (uniform) of block ``k``."""
        return self.alpha * np.asarray(k, dtype=float)

    def symbol(self, index) -> np.ndarray:
        """Full d-dimensional symbol of one block on the lattice."""
        g = self.grid
        if self.kind == DYADIC:
            j = int(index[0] if np.ndim(index) else index)
            if j in self.radial:
                return self.radial[j]
            return np.zeros(g.shape)
        k = tuple(int(v) for v in np.atleast_1d(index))
        rows = []
        for kv in k:
            pos = np.searchsorted(self.indices, kv)
            if pos >= len(self.indices) or self.indices[pos] != kv:
                return np.zeros(g.shape)
            rows.append(self.profiles[pos])
        out = rows[0]
        for r in rows[1:]:
            out = np.multiply.outer(out, r)
        return out

    def symbol_sum(self) -> np.ndarray:
        """Sum of all block symbols on the lattice (1 for a partition of unity)."""
        if self.kind == DYADIC:
            return sum(self.radial.values())
        s1 = self.profiles.sum(axis=0)
        out = s1
        for _ in range(self.grid.d - 1):
            out = np.multiply.outer(out, s1)
        return out


def _uniform_profiles(grid: SpectralGrid, kind: str, alpha: float):
    xi = grid.axis_frequencies()
    n = grid.labels()
    if kind == SHARP:
        ks = np.arange(-grid.K, grid.K + 1)
        prof = (n[None, :] // grid.m == ks[:, None]).astype(float)
    else:
        kmax = int(np.ceil(grid.K / alpha + 0.75))
        ks = np.arange(-kmax, kmax + 1)
        prof = sigma_1d(xi[None, :] / alpha - ks[:, None])
        prof[prof < 1e-300] = 0.0
        total = prof.sum(axis=0)
        prof = prof / total[None, :]
        keep = prof.any(axis=1)
        ks, prof = ks[keep], prof[keep]
    nz = prof > 0
    lo = np.argmax(nz, axis=1)
    hi = prof.shape[1] - np.argmax(nz[:, ::-1], axis=1)
    width = int((hi - lo).max())
    return ks, prof, lo, width


def make_window(kind: str, grid: SpectralGrid, alpha: float = 1.0) -> Window:
    """Build a window family on ``grid``.

    Parameters
    ----------
    kind : {"smooth", "sharp", "dyadic", "dilated"}
    grid : SpectralGrid
    alpha : float
        Lattice dilation for ``kind="dilated"``; block ``k`` is centred at
        ``alpha*k`` with symbol ``sigma(xi/alpha - k)``.

    Raises
    ------
    WindowError
        If ``alpha <= 0`` or the smooth transition band of the window holds
        fewer than two lattice points.
    """
    if kind not in (SMOOTH, SHARP, DYADIC, DILATED):
        raise WindowError(f"unknown window kind {kind!r}")
    if kind == DILATED:
        if not alpha > 0:
            raise WindowError(f"dilation alpha must be positive, got {alpha}")
    else:
        alpha = 1.0
    if kind in (SMOOTH, DILATED):
        # transition band of sigma(xi/alpha) is alpha*[1/4, 3/4]
        lo_edge, hi_edge = alpha / 4.0, 3.0 * alpha / 4.0
        pts = np.floor(hi_edge * grid.m + 1e-9) - np.ceil(lo_edge * grid.m - 1e-9) + 1
        if pts < 2:
            raise WindowError(
                f"transition band alpha*[1/4,3/4] with alpha={alpha:g} holds {int(pts)} "
                f"lattice point(s) at m={grid.m}; need at least 2")
    if kind == DYADIC:
        r = np.sqrt(grid.xi_sq())
        jmin = int(np.floor(-np.log2(grid.m)))
        jmax = int(np.ceil(np.log2(grid.K * np.sqrt(grid.d)) - 1e-12))
        radial = {j: phi_radial(r / 2.0**j) for j in range(jmin, jmax + 1)}
        return Window(DYADIC, grid, 1.0, j_range=(jmin, jmax), radial=radial)
    ks, prof, lo, width = _uniform_profiles(grid, SHARP if kind == SHARP else SMOOTH, alpha)
    return Window(kind, grid, float(alpha), indices=ks, profiles=prof, lo=lo, width=width)


@lru_cache(maxsize=64)
def cached_window(kind: str, grid: SpectralGrid, alpha: float = 1.0) -> Window:
    """Memoised :func:`make_window` (windows are immutable)."""
    return make_window(kind, grid, alpha)


def low_pass_symbol(grid: SpectralGrid, j: int = 0) -> np.ndarray:
    """``psi(2^-j xi)``: the inhomogeneous low block of the dyadic family."""
    return psi_radial(np.sqrt(grid.xi_sq()) / 2.0**j)


# ---------------------------------------------------------------------------
# blocks


@dataclass(frozen=True, eq=False)
class BlockSet:
    variant: str
    pieces: dict

    def total(self) -> Field:
        it = iter(self.pieces.values())
        acc = next(it).spectral().copy()
        for f in it:
            acc += f.spectral()
        return Field(self.pieces_grid, SPECTRAL, acc)

    @property
    def pieces_grid(self) -> SpectralGrid:
        return next(iter(self.pieces.values())).grid


def block(f: Field, index, window: Window) -> Field:
    """Apply the block multiplier of ``window`` at ``index`` to ``f``.

    An index whose window misses the resolved band yields the zero field with
    an ``"index_out_of_band"`` flag.
    """
    if f.grid != window.grid:
        raise WindowError("field and window live on different grids")
    sym = window.symbol(index)
    if not sym.any():
        warnings.warn(f"block index {index} lies outside the resolved band", RuntimeWarning,
                      stacklevel=2)
        return Field(f.grid, SPECTRAL, np.zeros(f.grid.shape, complex), ("index_out_of_band",))
    return Field(f.grid, SPECTRAL, f.spectral() * sym)


def block_set(f: Field, window: Window) -> BlockSet:
    pieces = {}
    for idx in window.block_indices():
        sym = window.symbol(idx)
        if sym.any():
            pieces[idx] = Field(f.grid, SPECTRAL, f.spectral() * sym)
    return BlockSet(window.kind, pieces)


def reconstruction_error(f: Field, window: Window) -> float:
    """Relative l2 error of summing all blocks back together."""
    c = f.spectral()
    err = np.linalg.norm((window.symbol_sum() - 1.0) * c)
    if window.kind == DYADIC:
        # Delta_j kills the mean mode; compare against the mean-free part
        c = c.copy()
        c[(window.grid.half,) * window.grid.d] = 0
        sym = window.symbol_sum().copy()
        sym[(window.grid.half,) * window.grid.d] = 1.0
        err = np.linalg.norm((sym - 1.0) * c)
    nrm = np.linalg.norm(c)
    return float(err / nrm) if nrm > 0 else 0.0


def almost_orthogonality_defect(window: Window, n_fields: int = 50, seed: int = 0) -> float:
    """Max over random fields and blocks of ``||B_k f - B_k sum_l B_{k+l} f||_2 / ||f||_2``.

    The neighbourhood is ``|l|_inf <= 1``.  Norms are taken spectrally
    (Parseval), so the value is the quadrature-free defect.
    """
    if not window.is_uniform:
        raise WindowError("almost orthogonality is defined for uniform windows")
    g = window.grid
    rng = np.random.default_rng(seed)
    fields = rng.standard_normal((n_fields,) + g.shape) + 1j * rng.standard_normal((n_fields,) + g.shape)
    norms = np.sqrt(np.sum(np.abs(fields) ** 2, axis=tuple(range(1, g.d + 1))))
    worst = 0.0
    idx = window.indices
    for k in window.block_indices():
        sym = window.symbol(k)
        neigh = np.zeros(g.shape)
        for ell in itertools.product((-1, 0, 1), repeat=g.d):
            kk = tuple(a + b for a, b in zip(k, ell))
            if all(idx[0] <= v <= idx[-1] for v in kk):
                neigh = neigh + window.symbol(kk)
        mult = sym * (1.0 - neigh)
        if not mult.any():
            continue
        err = np.sqrt(np.sum(np.abs(fields * mult) ** 2, axis=tuple(range(1, g.d + 1))))
        worst = max(worst, float(np.max(err / norms)))
    return worst


def export_window_csv(window: Window, path: str | Path, index=None) -> None:
    """Write ``(lattice point..., symbol value)`` rows for one block or the sum."""
    g = window.grid
    sym = window.symbol_sum() if index is None else window.symbol(index)
    labels = g.labels()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"n{i + 1}" for i in range(g.d)] + ["xi" + str(i + 1) for i in range(g.d)] + ["value"])
        for pos in itertools.product(range(g.n_modes), repeat=g.d):
            n = [int(labels[p]) for p in pos]
            w.writerow(n + [v / g.m for v in n] + [repr(float(sym[pos]))])


# ---------------------------------------------------------------------------
# block L^p norms on local quadrature grids


def local_grid_size(width: int, n_full: int, quadrature: float | None) -> int:
    """Points per axis of the block-local quadrature grid."""
    if quadrature is None:
        return n_full
    size = sfft.next_fast_len(max(int(np.ceil(quadrature * width)), width, 4))
    return n_full if size >= n_full else size


def _gather_boxes(coeffs: np.ndarray, window: Window, d: int) -> np.ndarray:
    """Window-weighted coefficient boxes for every uniform block.

    ``coeffs`` has shape ``(L, C, N, ..., N)``; the result has shape
    ``(L, C, B, ..., B, W, ..., W)`` where ``B`` counts block coordinates per
    axis and ``W`` is the box width.
    """
    N = window.grid.n_modes
    W = window.width
    offs = np.arange(W)
    idx = window.lo[:, None] + offs[None, :]  # (B, W)
    valid = idx < N
    idx_c = np.where(valid, idx, 0)
    wts = np.take_along_axis(window.profiles, idx_c, axis=1) * valid  # (B, W)
    out = coeffs
    # gather axis by axis; spatial axis a sits at position 2 + 2a and becomes (B, W)
    for a in range(d):
        axis = 2 + 2 * a
        out = np.take(out, idx_c, axis=axis)
        shp = [1] * out.ndim
        shp[axis], shp[axis + 1] = wts.shape
        out = out * wts.reshape(shp)
    # now layout (L, C, B1, W1, B2, W2, ...); move W axes to the end
    perm = [0, 1] + [2 + 2 * a for a in range(d)] + [3 + 2 * a for a in range(d)]
    return out.transpose(perm)


def block_lp_norms(coeffs: np.ndarray, window: Window, p: float,
                   quadrature: float | None = DEFAULT_QUADRATURE,
                   chunk: int = 8) -> np.ndarray:
    """L^p norms of every block of a batch of (vector) spectra.

    Parameters
    ----------
    coeffs : ndarray
        Centred spectra of shape ``(L, C, N, ..., N)``: ``L`` batch entries
        (e.g. time samples), ``C`` components combined by pointwise Euclidean
        modulus.
    window : Window
    p : float
        Exponent in ``[1, inf]``.
    quadrature : float or None
        Local grid resolution in points per block bandwidth.  A block of a
        uniform window is a modulated trigonometric polynomial whose modulus
        only depends on its box of coefficients, so its normalised L^p norm
        can be computed on a local grid of ``~quadrature * width`` points per
        axis.  ``None`` uses the full spatial grid.  For ``p = 2`` every
        choice is exact.

    Returns
    -------
    ndarray
        Shape ``(L, *block_shape)`` for uniform windows and ``(L, n_j)`` for
        the dyadic window.
    """
    g = window.grid
    d = g.d
    L = coeffs.shape[0]
    if window.kind == DYADIC:
        js = list(range(window.j_range[0], window.j_range[1] + 1))
        out = np.empty((L, len(js)))
        for i, j in enumerate(js):
            vals = to_spatial(coeffs * window.radial[j], d)
            mod = np.sqrt(np.sum(np.abs(vals) ** 2, axis=1))
            out[:, i] = lp_of_samples(mod, p, d)
        return out
    W = window.width
    M = local_grid_size(W, g.n_modes, quadrature)
    B = len(window.indices)
    out = np.empty((L,) + (B,) * d)
    # skip blocks whose box is identically zero across the batch
    active = _active_blocks(coeffs, window)
    for start in range(0, L, chunk):
        sl = slice(start, min(L, start + chunk))
        boxes = _gather_boxes(coeffs[sl], window, d)  # (l, C, B.., W..)
        if M == g.n_modes:
            # place box at its true offset so the full-grid samples are reproduced
            res = _full_grid_block_norms(boxes, window, p)
        else:
            sub = boxes[(slice(None), slice(None)) + active] if active is not None else boxes
            pad = [(0, 0)] * (sub.ndim - d) + [(0, M - W)] * d
            vals = sfft.ifftn(np.pad(sub, pad), axes=tuple(range(-d, 0))) * M**d
            mod = np.sqrt(np.sum(np.abs(vals) ** 2, axis=1))
            vals_p = lp_of_samples(mod, p, d)
            if active is not None:
                res = np.zeros((vals_p.shape[0],) + (B,) * d)
                res[(slice(None),) + active] = vals_p
            else:
                res = vals_p
        out[sl] = res
    return out


def _active_blocks(coeffs: np.ndarray, window: Window):
    d = window.grid.d
    mag = np.abs(coeffs).reshape((-1,) + coeffs.shape[-d:]).max(axis=0) > 0
    # per-axis occupancy of each block's box
    N = window.grid.n_modes
    idx = window.lo[:, None] + np.arange(window.width)[None, :]
    idx = np.clip(idx, 0, N - 1)
    occ = mag.astype(np.int32)
    for a in range(d):
        occ = np.take(occ, idx, axis=a).any(axis=a + 1).astype(np.int32)
    nz = np.nonzero(occ)
    if len(nz[0]) == occ.size:
        return None
    return nz


def _full_grid_block_norms(boxes: np.ndarray, window: Window, p: float) -> np.ndarray:
    g = window.grid
    d = g.d
    N = g.n_modes
    B = len(window.indices)
    W = window.width
    l_, C = boxes.shape[:2]
    res = np.zeros((l_,) + (B,) * d)
    for k in itertools.product(range(B), repeat=d):
        box = boxes[(slice(None), slice(None)) + k]
        if not box.any():
            continue
        full = np.zeros((l_, C) + (N,) * d, complex)
        sl = tuple(slice(window.lo[kk], min(N, window.lo[kk] + W)) for kk in k)
        crop = tuple(slice(0, s.stop - s.start) for s in sl)
        full[(slice(None), slice(None)) + sl] = box[(slice(None), slice(None)) + crop]
        vals = to_spatial(full, d)
        mod = np.sqrt(np.sum(np.abs(vals) ** 2, axis=1))
        res[(slice(None),) + k] = lp_of_samples(mod, p, d)
    return res


def field_block_norms(f: Field, window: Window, p: float,
                      quadrature: float | None = DEFAULT_QUADRATURE) -> np.ndarray:
    """Block L^p norms of a single scalar field; shape ``block_shape``."""
    return block_lp_norms(f.spectral()[None, None], window, p, quadrature)[0]


def bernstein_constant(f: Field, k, window: Window, p: float) -> float:
    """Ratio ``||B_k f||_p / ||f~_k||_p`` with ``f~_k`` the enlarged block.

    ``f~_k`` uses the sum of window symbols over ``|l|_inf <= 1``, which is 1
    on the support of the block, so the ratio measures the L^p operator norm
    of the block multiplier on functions band-limited near cube ``k``.
    """
    g = window.grid
    c = f.spectral()
    neigh = np.zeros(g.shape)
    for ell in itertools.product((-1, 0, 1), repeat=g.d):
        neigh = neigh + window.symbol(tuple(a + b for a, b in zip(k, ell)))
    num = lp_of_samples(to_spatial(c * window.symbol(k), g.d), p, g.d)
    den = lp_of_samples(to_spatial(c * neigh, g.d), p, g.d)
    return float(num / den) if den > 0 else 0.0
