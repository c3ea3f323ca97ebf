"""Norm evaluations: exponential and polynomial modulation norms, the hybrid
Riesz-potential norm, Besov norms, time-space norms and Gevrey ratios.

All uniform-block norms share one pattern: block L^p norms (see
:func:`modns.decomp.block_lp_norms`) weighted per block and summed in l^q
with a fixed, sorted reduction order so results are bit-stable.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, asdict
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .decomp import (DEFAULT_QUADRATURE, DYADIC, SHARP, SMOOTH, Window, block_lp_norms,
                     cached_window, psi_radial)
from .grid import Field, HypothesisError, SpectralGrid, VectorField, lp_of_samples, to_spatial

FAMILIES = ("E", "M", "Mdot", "Besov", "BesovHom")
LOW_THRESHOLD_J = 2


class NormError(HypothesisError):
    """Inadmissible norm parameters."""


@dataclass(frozen=True)
class NormSpec:
    """Everything needed to evaluate one norm.

    ``weight_exponent_base`` is fixed at 2 (weights ``2**(s|k|)``).
    """

    family: str
    s: float = 0.0
    p: float = 2.0
    q: float = 1.0
    variant: str = SMOOTH
    alpha: float = 1.0
    weight_exponent_base: int = 2

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise NormError(f"unknown norm family {self.family!r}")
        if not (self.p >= 1 and self.q >= 1):
            raise NormError(f"exponents must be >= 1, got p={self.p}, q={self.q}")
        if self.family == "Mdot" and not (1 < self.p < np.inf):
            raise NormError(f"the hybrid norm requires 1 < p < inf, got p={self.p}")


@dataclass(frozen=True)
class TimeNormSpec:
    """Time-space norm ``sum_k w_k ||B_k u||_{L^gamma_t L^p_x}``.

    ``weight_mode="analytic"`` uses the time-dependent weight
    ``s(t) = min(s + c*sqrt(t), |s|)`` inside the time integral.
    """

    gamma: float
    space: NormSpec
    weight_mode: str = "fixed"
    c: float = 0.0

    def __post_init__(self):
        if not self.gamma >= 1:
            raise NormError(f"gamma must be >= 1, got {self.gamma}")
        if self.weight_mode not in ("fixed", "analytic"):
            raise NormError(f"unknown weight mode {self.weight_mode!r}")
        if self.space.family not in ("E", "M"):
            raise NormError("time-space norms are implemented for the E and M families")


# ---------------------------------------------------------------------------
# helpers


def as_batch(f) -> tuple[np.ndarray, SpectralGrid]:
    """Coefficients with shape ``(1, C, N, ..., N)`` for a Field or VectorField."""
    if isinstance(f, Field):
        return f.spectral()[None, None], f.grid
    if isinstance(f, VectorField):
        return f.spectral()[None], f.grid
    raise TypeError(f"expected Field or VectorField, got {type(f).__name__}")


def lq_sum(values: np.ndarray, q: float) -> float:
    """l^q norm of a flat array with a fixed summation order."""
    v = np.sort(np.abs(np.ravel(values)))
    if v.size == 0:
        return 0.0
    if np.isinf(q):
        return float(v[-1])
    if q == 1:
        return float(math.fsum(v))
    return float(math.fsum(v**q) ** (1.0 / q))


def lq_rows(values: np.ndarray, q: float) -> np.ndarray:
    """l^q norm over all trailing axes, batched over axis 0."""
    v = np.abs(values.reshape(values.shape[0], -1))
    if np.isinf(q):
        return v.max(axis=1)
    v = np.sort(v, axis=1)
    return np.sum(v**q, axis=1) ** (1.0 / q)


def block_centres_l1(window: Window) -> np.ndarray:
    """``|alpha*k|_1`` for every uniform block, shape ``block_shape``."""
    c = np.abs(window.alpha * window.indices.astype(float))
    out = c
    for _ in range(window.grid.d - 1):
        out = np.add.outer(out, c)
    return out


def block_centres_bracket(window: Window) -> np.ndarray:
    """Japanese bracket ``(1 + |alpha*k|_2^2)^(1/2)`` per block."""
    c2 = (window.alpha * window.indices.astype(float)) ** 2
    out = c2
    for _ in range(window.grid.d - 1):
        out = np.add.outer(out, c2)
    return np.sqrt(1.0 + out)


def exp_weights(window: Window, s: float) -> np.ndarray:
    return np.exp2(s * block_centres_l1(window))


def poly_weights(window: Window, s: float) -> np.ndarray:
    return block_centres_bracket(window) ** s


def _window(grid: SpectralGrid, variant: str, alpha: float) -> Window:
    if variant == "dilated":
        return cached_window("dilated", grid, float(alpha))
    return cached_window(variant, grid, 1.0)


# ---------------------------------------------------------------------------
# modulation norms


def e_norm(f, s: float, p: float, q: float, variant: str = SMOOTH, alpha: float = 1.0,
           quadrature: float | None = DEFAULT_QUADRATURE) -> float:
    """Exponential-weight modulation norm ``(sum_k 2^(s|k|q) ||B_k f||_p^q)^(1/q)``.

    Parameters
    ----------
    f : Field or VectorField
    s : float
        Regularity; ``|k|`` is the l1 norm of the block centre.
    p, q : float
        Exponents in ``[1, inf]``.
    variant : {"smooth", "sharp", "dilated"}
    alpha : float
        Lattice dilation for the dilated variant (weights ``2^(s*alpha|k|)``).
    quadrature : float or None
        Block-local grid resolution, see :func:`modns.decomp.block_lp_norms`.

    Examples
    --------
    >>> from modns.grid import make_grid, single_mode
    >>> g = make_grid(2, 4, 4)
    >>> round(e_norm(single_mode(g, (2, 1)), -1.0, 2, 1, "sharp"), 12)
    0.125
    """
    NormSpec("E", s, p, q, variant, alpha)
    coeffs, grid = as_batch(f)
    w = _window(grid, variant, alpha)
    bn = block_lp_norms(coeffs, w, p, quadrature)[0]
    return lq_sum(exp_weights(w, s) * bn, q)


def m_norm(f, s: float, p: float, q: float, variant: str = SMOOTH,
           quadrature: float | None = DEFAULT_QUADRATURE) -> float:
    """Polynomial-weight modulation norm with ``<k> = (1 + |k|_2^2)^(1/2)``."""
    NormSpec("M", s, p, q, variant)
    coeffs, grid = as_batch(f)
    w = _window(grid, variant, 1.0)
    bn = block_lp_norms(coeffs, w, p, quadrature)[0]
    return lq_sum(poly_weights(w, s) * bn, q)


def riesz_low_part(coeffs: np.ndarray, grid: SpectralGrid, s: float, p: float,
                   j_max: int = LOW_THRESHOLD_J) -> np.ndarray:
    """``||(sum_{j<=j_max} 2^(2sj) |Delta_j f|^2)^(1/2)||_p`` per batch entry."""
    w = cached_window(DYADIC, grid, 1.0)
    d = grid.d
    acc = np.zeros((coeffs.shape[0],) + grid.shape)
    for j in range(w.j_range[0], min(j_max, w.j_range[1]) + 1):
        vals = to_spatial(coeffs * w.radial[j], d)
        acc += 2.0 ** (2 * s * j) * np.sum(np.abs(vals) ** 2, axis=1)
    return lp_of_samples(np.sqrt(acc), p, d)


def mdot_norm(f, s: float, p: float, q: float, variant: str = SMOOTH,
              j_max: int = LOW_THRESHOLD_J,
              quadrature: float | None = DEFAULT_QUADRATURE) -> float:
    """Hybrid Riesz-potential / modulation norm.

    The low block is measured by the dyadic square function with
    ``j <= j_max``; blocks ``k != 0`` carry the polynomial weight ``<k>^s``.

    Raises
    ------
    NormError
        If ``p`` is 1 or infinite.
    """
    NormSpec("Mdot", s, p, q, variant)
    coeffs, grid = as_batch(f)
    w = _window(grid, variant, 1.0)
    bn = block_lp_norms(coeffs, w, p, quadrature)[0] * poly_weights(w, s)
    centre = tuple(int(np.searchsorted(w.indices, 0)) for _ in range(grid.d))
    bn[centre] = 0.0
    low = float(riesz_low_part(coeffs, grid, s, p, j_max)[0])
    return low + lq_sum(bn, q)


def besov_norm(f, s: float, p: float, q: float, homogeneous: bool = True) -> float:
    """Besov norm ``||{2^(sj) ||Delta_j f||_p}||_{l^q}``.

    The homogeneous form sums over the dyadic ladder resolved by the grid (the
    mean mode is invisible to it).  The inhomogeneous form replaces all
    ``j <= 0`` by the low-pass block ``psi(xi)``.
    """
    if not (p >= 1 and q >= 1):
        raise NormError(f"exponents must be >= 1, got p={p}, q={q}")
    coeffs, grid = as_batch(f)
    w = cached_window(DYADIC, grid, 1.0)
    d = grid.d
    vals = []
    if homogeneous:
        js = range(w.j_range[0], w.j_range[1] + 1)
        for j in js:
            mod = np.sqrt(np.sum(np.abs(to_spatial(coeffs * w.radial[j], d)) ** 2, axis=1))
            vals.append(2.0 ** (s * j) * float(lp_of_samples(mod, p, d)[0]))
    else:
        low = psi_radial(np.sqrt(grid.xi_sq()))
        mod = np.sqrt(np.sum(np.abs(to_spatial(coeffs * low, d)) ** 2, axis=1))
        vals.append(float(lp_of_samples(mod, p, d)[0]))
        for j in range(1, w.j_range[1] + 1):
            mod = np.sqrt(np.sum(np.abs(to_spatial(coeffs * w.radial[j], d)) ** 2, axis=1))
            vals.append(2.0 ** (s * j) * float(lp_of_samples(mod, p, d)[0]))
    return lq_sum(np.array(vals), q)


def besov_terms(f, s: float, p: float) -> dict[int, float]:
    """Per-level terms ``2^(sj) ||Delta_j f||_p`` of the homogeneous ladder."""
    coeffs, grid = as_batch(f)
    w = cached_window(DYADIC, grid, 1.0)
    out = {}
    for j in range(w.j_range[0], w.j_range[1] + 1):
        mod = np.sqrt(np.sum(np.abs(to_spatial(coeffs * w.radial[j], grid.d)) ** 2, axis=1))
        out[j] = 2.0 ** (s * j) * float(lp_of_samples(mod, p, grid.d)[0])
    return out


def pointwise_weight_l2(f, s: float) -> float:
    """``||2^(s|xi|_1) f^||_2`` with the normalised Parseval convention."""
    coeffs, grid = as_batch(f)
    wts = np.exp2(s * grid.xi_l1())
    return float(np.sqrt(np.sum(np.abs(coeffs[0] * wts) ** 2)))


def evaluate(f, spec: NormSpec) -> float:
    """Dispatch on ``spec.family``."""
    if spec.family == "E":
        return e_norm(f, spec.s, spec.p, spec.q, spec.variant, spec.alpha)
    if spec.family == "M":
        return m_norm(f, spec.s, spec.p, spec.q, spec.variant)
    if spec.family == "Mdot":
        return mdot_norm(f, spec.s, spec.p, spec.q, spec.variant)
    return besov_norm(f, spec.s, spec.p, spec.q, homogeneous=spec.family == "BesovHom")


# ---------------------------------------------------------------------------
# time-space norms


def time_lebesgue(values: np.ndarray, times: np.ndarray, gamma: float) -> np.ndarray:
    """``(int |h|^gamma dt)^(1/gamma)`` along axis 0 by composite trapezoid.

    ``gamma = inf`` returns the maximum over samples.  A single sample is
    treated as a zero-length interval and returns that sample for
    ``gamma = inf`` and 0 otherwise.
    """
    v = np.abs(values)
    if np.isinf(gamma):
        return v.max(axis=0)
    if len(times) < 2:
        return np.zeros(v.shape[1:])
    dt = np.diff(times)
    shp = (-1,) + (1,) * (v.ndim - 1)
    vg = v**gamma
    integral = np.sum(0.5 * (vg[1:] + vg[:-1]) * dt.reshape(shp), axis=0)
    return integral ** (1.0 / gamma)


def weight_exponent(s: float, t: np.ndarray, mode: str, c: float) -> np.ndarray:
    """``s`` or ``min(s + c*sqrt(t), |s|)``."""
    t = np.asarray(t, dtype=float)
    if mode == "fixed":
        return np.full(t.shape, float(s))
    return np.minimum(s + c * np.sqrt(t), abs(s))


def timespace_block_norms(coeffs: np.ndarray, times: np.ndarray, grid: SpectralGrid,
                          tspec: TimeNormSpec,
                          quadrature: float | None = DEFAULT_QUADRATURE) -> np.ndarray:
    """Weighted ``||w_k(t) B_k u||_{L^gamma_t L^p_x}`` per block."""
    sp = tspec.space
    w = _window(grid, sp.variant, sp.alpha)
    bn = block_lp_norms(coeffs, w, sp.p, quadrature)  # (T, B..)
    if sp.family == "M":
        wts = poly_weights(w, sp.s)[None]
    elif tspec.weight_mode == "fixed":
        wts = exp_weights(w, sp.s)[None]
    else:
        st = weight_exponent(sp.s, times, "analytic", tspec.c)
        l1 = block_centres_l1(w)
        wts = np.exp2(st.reshape((-1,) + (1,) * l1.ndim) * l1[None])
    return time_lebesgue(bn * wts, times, tspec.gamma)


def timespace_norm(traj, tspec: TimeNormSpec,
                   quadrature: float | None = DEFAULT_QUADRATURE) -> float:
    """Norm of a trajectory: time integral inside, weighted l^q over blocks outside.

    ``traj`` needs ``times``, ``coeffs`` (shape ``(T, C, N, ..., N)``) and
    ``grid`` attributes.

    Raises
    ------
    NormError
        For an empty trajectory.
    """
    if traj.coeffs.shape[0] == 0:
        raise NormError("empty trajectory")
    tb = timespace_block_norms(traj.coeffs, traj.times, traj.grid, tspec, quadrature)
    return lq_sum(tb, tspec.space.q)


# ---------------------------------------------------------------------------
# Gevrey ratios


def log_gevrey_ratio(f, alpha: Sequence[int], rho: float, p: float) -> float:
    """Natural log of ``||d^alpha f||_p rho^|alpha| / alpha!``.

    The derivative is the exact multiplier ``(i xi)^alpha``; the multiplier is
    rescaled by its maximum before transforming so large ``|alpha|`` cannot
    overflow.  Returns ``-inf`` when the derivative vanishes.
    """
    coeffs, grid = as_batch(f)
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != grid.d or min(alpha) < 0:
        raise NormError(f"multi-index must have {grid.d} nonnegative entries")
    if not rho > 0:
        raise NormError("rho must be positive")
    logmult = np.zeros(grid.shape)
    zero = np.zeros(grid.shape, bool)
    for xi, a in zip(grid.frequency_mesh(), alpha):
        if a:
            ax = np.abs(xi) * np.ones(grid.shape)
            zero |= ax == 0
            with np.errstate(divide="ignore"):
                logmult = logmult + a * np.log(np.where(ax > 0, ax, 1.0))
    logmult[zero] = -np.inf
    live = np.isfinite(logmult) & (np.abs(coeffs).max(axis=(0, 1)) > 0)
    if not live.any():
        return -np.inf
    shift = logmult[live].max()
    mult = np.where(np.isfinite(logmult), np.exp(logmult - shift), 0.0)
    phase = 1j ** sum(alpha)
    vals = to_spatial(coeffs * mult * phase, grid.d)
    mod = np.sqrt(np.sum(np.abs(vals) ** 2, axis=1))
    nrm = float(lp_of_samples(mod, p, grid.d)[0])
    if nrm == 0:
        return -np.inf
    n = sum(alpha)
    return math.log(nrm) + shift + n * math.log(rho) - sum(math.lgamma(a + 1) for a in alpha)


def gevrey_ratio(f, alpha: Sequence[int], rho: float, p: float) -> float:
    """``||d^alpha f||_p rho^|alpha| / alpha!`` evaluated in the log domain."""
    val = log_gevrey_ratio(f, alpha, rho, p)
    return 0.0 if val == -np.inf else float(np.exp(min(val, 700.0)))


# ---------------------------------------------------------------------------
# export


@dataclass(frozen=True)
class NormRecord:
    field_id: str
    family: str
    s: float
    p: float
    q: float
    variant: str
    value: float


def export_norms_csv(records: Iterable[NormRecord], path: str | Path) -> None:
    cols = ["field_id", "family", "s", "p", "q", "variant", "value"]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        for r in records:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in asdict(r).items()})
