"""Heat semigroup, Duhamel integrals and block smoothing estimates.

The heat flow ``H(t)`` is applied as the exact multiplier ``exp(-t|xi|_2^2)``,
so the only discretisation error in this module comes from time quadrature
(composite trapezoid for Duhamel integrals and ``L^gamma_t`` norms).

:func:`smoothing_ratio` evaluates the left and right sides of a family of
block smoothing inequalities with constant 1.  The registry :data:`ESTIMATES`
lists them by check id; each entry validates its exponents before any work.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .decomp import DYADIC, SMOOTH, Window, cached_window
from .grid import (Field, GridError, HypothesisError, SpectralGrid, VectorField, lp_of_samples,
                   to_spatial)
from .norms import time_lebesgue


class HeatError(HypothesisError):
    """Invalid time, block or trajectory input."""


# ---------------------------------------------------------------------------
# trajectories


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Spectral states on a uniform time grid starting at 0.

    Attributes
    ----------
    grid : SpectralGrid
    times : ndarray, shape (T,)
    coeffs : ndarray, shape (T, C, N, ..., N)
        Centred spectral coefficients of the ``C`` components at every time.
    """

    grid: SpectralGrid
    times: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or t.size == 0:
            raise HeatError("times must be a non-empty 1-D array")
        if t[0] != 0:
            raise HeatError(f"time grid must start at 0, got {t[0]}")
        if t.size > 1:
            dt = np.diff(t)
            if np.any(dt <= 0) or np.ptp(dt) > 1e-9 * dt.mean():
                raise HeatError("time grid must be uniform and increasing")
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 2 + self.grid.d or c.shape[0] != t.size or c.shape[2:] != self.grid.shape:
            raise GridError(f"coefficient shape {c.shape} does not match times/grid")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "coeffs", c)

    @property
    def n_times(self) -> int:
        return self.times.size

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if self.n_times > 1 else 0.0

    @property
    def n_components(self) -> int:
        return self.coeffs.shape[1]

    def state(self, i: int) -> VectorField:
        return VectorField.from_spectral(self.grid, self.coeffs[i])

    @classmethod
    def from_states(cls, times, states: Sequence[VectorField]) -> "Trajectory":
        grid = states[0].grid
        return cls(grid, np.asarray(times, float), np.stack([s.spectral() for s in states]))


def uniform_times(T: float, nt: int) -> np.ndarray:
    """``nt + 1`` uniform samples of ``[0, T]``."""
    if not T > 0 or nt < 1:
        raise HeatError(f"need T > 0 and nt >= 1, got T={T}, nt={nt}")
    return np.linspace(0.0, float(T), int(nt) + 1)


# ---------------------------------------------------------------------------
# semigroup and Duhamel operator


def heat_multiplier(grid: SpectralGrid, t: float) -> np.ndarray:
    return np.exp(-float(t) * grid.xi_sq())


def heat_apply(f, t: float):
    """Apply ``exp(t*Laplacian)`` to a Field or VectorField.

    Examples
    --------
    >>> from modns.grid import make_grid, single_mode
    >>> g = make_grid(2, 4, 2)
    >>> u = heat_apply(single_mode(g, (1, 1)), 0.5)
    >>> bool(round(abs(u.spectral()[g.index_of((1, 1))]), 12) == round(np.exp(-1.0), 12))
    True
    """
    if not t >= 0:
        raise HeatError(f"heat flow needs t >= 0, got {t}")
    if isinstance(f, VectorField):
        h = heat_multiplier(f.grid, t)
        return VectorField.from_spectral(f.grid, f.spectral() * h, f.divergence_free)
    if isinstance(f, Field):
        return Field(f.grid, "spectral", f.spectral() * heat_multiplier(f.grid, t))
    raise TypeError(f"expected Field or VectorField, got {type(f).__name__}")


def heat_evolve(coeffs: np.ndarray, times: np.ndarray, grid: SpectralGrid) -> np.ndarray:
    """``H(t) u0`` at every time; ``coeffs`` has shape ``(C, N, ..., N)``."""
    xi2 = grid.xi_sq()
    times = np.asarray(times, dtype=float)
    if np.any(times < 0):
        raise HeatError("heat flow needs t >= 0")
    return np.exp(-times.reshape((-1,) + (1,) * xi2.ndim) * xi2)[:, None] * coeffs[None]


def duhamel_coeffs(forcing: np.ndarray, times: np.ndarray, grid: SpectralGrid) -> np.ndarray:
    """Trapezoid Duhamel integral at every time of a uniform grid.

    Uses the running sum ``S_n = H(dt) S_{n-1} + F_n`` (``S_0 = F_0/2``) so the
    cost is linear in the number of steps; ``A_n = dt (S_n - F_n/2)``.
    """
    out = np.zeros_like(forcing, dtype=complex)
    if len(times) < 2:
        return out
    dt = float(times[1] - times[0])
    h = np.exp(-dt * grid.xi_sq())
    acc = 0.5 * forcing[0]
    for n in range(1, len(times)):
        acc = h * acc + forcing[n]
        out[n] = dt * (acc - 0.5 * forcing[n])
    return out


def duhamel(forcing: Trajectory, t_index: int) -> VectorField:
    """Trapezoid quadrature of ``int_0^t H(t - tau) f(tau) dtau`` at one time.

    Every term is evaluated with the exact multiplier, independently of the
    running-sum form used by :func:`duhamel_all`.
    """
    n = int(t_index)
    if not 0 <= n < forcing.n_times:
        raise HeatError(f"t_index {t_index} outside 0..{forcing.n_times - 1}")
    grid = forcing.grid
    acc = np.zeros(forcing.coeffs.shape[1:], dtype=complex)
    if n > 0:
        tn = forcing.times[n]
        for j in range(n + 1):
            wgt = 0.5 if j in (0, n) else 1.0
            acc += wgt * heat_multiplier(grid, tn - forcing.times[j]) * forcing.coeffs[j]
        acc *= forcing.dt
    return VectorField.from_spectral(grid, acc)


def duhamel_all(forcing: Trajectory) -> Trajectory:
    """Duhamel integral at every time of the forcing grid."""
    return Trajectory(forcing.grid, forcing.times,
                      duhamel_coeffs(forcing.coeffs, forcing.times, forcing.grid))


# ---------------------------------------------------------------------------
# block helpers


def _coeff_array(data) -> tuple[np.ndarray, SpectralGrid]:
    if isinstance(data, VectorField):
        return data.spectral(), data.grid
    if isinstance(data, Field):
        return data.spectral()[None], data.grid
    raise TypeError(f"expected Field or VectorField, got {type(data).__name__}")


def block_time_norms(arr: np.ndarray, symbol: np.ndarray, grid: SpectralGrid,
                     p: float) -> np.ndarray:
    """``||B u(t)||_p`` for every leading index of ``arr`` (shape ``(T, C, N..)``)."""
    vals = to_spatial(arr * symbol, grid.d)
    mod = np.sqrt(np.sum(np.abs(vals) ** 2, axis=1))
    return lp_of_samples(mod, p, grid.d)


def gradient_components(arr: np.ndarray, grid: SpectralGrid) -> np.ndarray:
    """Stack ``i xi_j * arr`` along the component axis (axis 1)."""
    parts = [1j * xi * arr for xi in grid.frequency_mesh()]
    return np.concatenate(parts, axis=1)


def riesz_multiplier(grid: SpectralGrid, alpha: float) -> np.ndarray:
    """``|xi|^alpha`` with the mean mode mapped to 0."""
    xi2 = grid.xi_sq()
    out = np.zeros(grid.shape)
    nz = xi2 > 0
    out[nz] = xi2[nz] ** (alpha / 2)
    return out


def block_decay_fit(u0, k: Sequence[int], p: float, times: np.ndarray,
                    window: Window | None = None, floor: float = 1e-12) -> float:
    """Fitted exponential rate of ``||B_k H(t) u0||_p`` in units of ``t|k|_2^2``.

    Returns ``c_fit = -slope`` of the least-squares line through
    ``log ||B_k H(t) u0||_p`` against ``t |k|_2^2`` over samples above ``floor``.

    Raises
    ------
    HeatError
        If ``|k|_inf < 1``, the block of ``u0`` vanishes, or fewer than two
        samples stay above the floor.
    """
    k = np.asarray(k, dtype=int)
    if np.max(np.abs(k)) < 1:
        raise HeatError("the decay fit needs |k|_inf >= 1")
    coeffs, grid = _coeff_array(u0)
    w = window or cached_window(SMOOTH, grid)
    sym = w.symbol(tuple(k))
    if not np.any(np.abs(coeffs * sym) > 0):
        raise HeatError(f"block {tuple(k)} of the data is identically zero")
    times = np.asarray(times, dtype=float)
    nrm = block_time_norms(heat_evolve(coeffs, times, grid), sym, grid, p)
    keep = nrm > floor
    if keep.sum() < 2:
        raise HeatError("fewer than two time samples above the fit floor")
    x = times[keep] * float(np.sum(w.centre(k) ** 2))
    slope = np.polyfit(x, np.log(nrm[keep]), 1)[0]
    return float(-slope)


# ---------------------------------------------------------------------------
# smoothing estimates


@dataclass(frozen=True)
class SmoothingResult:
    check_id: str
    k: tuple[int, ...]
    lhs: float
    rhs: float

    @property
    def ratio(self) -> float:
        if self.rhs == 0:
            return 0.0 if self.lhs == 0 else np.inf
        return self.lhs / self.rhs


@dataclass
class _Context:
    grid: SpectralGrid
    times: np.ndarray
    k: tuple[int, ...]
    window: Window
    ex: Mapping[str, float]

    @property
    def knorm(self) -> float:
        return float(np.sqrt(np.sum(np.asarray(self.k, float) ** 2)))

    @property
    def bracket(self) -> float:
        return float(np.sqrt(1.0 + self.knorm**2))

    @property
    def kl1(self) -> float:
        return float(np.sum(np.abs(self.k)))

    def sym(self, k=None) -> np.ndarray:
        return self.window.symbol(self.k if k is None else k)

    def neighbours(self) -> list[tuple[int, ...]]:
        idx = set(self.window.indices.tolist())
        out = []
        for ell in itertools.product((-1, 0, 1), repeat=self.grid.d):
            kk = tuple(a + b for a, b in zip(self.k, ell))
            if all(v in idx for v in kk):
                out.append(kk)
        return out

    def time_weight(self) -> np.ndarray:
        c = float(self.ex.get("c", 0.0))
        return np.exp2(c * np.sqrt(self.times) * self.kl1)


@dataclass(frozen=True)
class SmoothingEstimate:
    """One block inequality ``lhs <= C * rhs``.

    ``kind`` is ``"heat"`` (data is an initial state) or ``"duhamel"`` (data is
    a forcing trajectory).  ``blocks`` restricts admissible ``k``: ``"high"``
    (``|k|_inf >= 1``), ``"low"`` (``k = 0``) or ``"all"``.
    """

    check_id: str
    statement: str
    kind: str
    blocks: str
    exponents: tuple[str, ...]
    validate: Callable[[Mapping[str, float], int], None]
    evaluate: Callable[[_Context, np.ndarray], tuple[float, float]]


def _req(cond: bool, check_id: str, hypothesis: str) -> None:
    if not cond:
        raise HypothesisError(f"{check_id} requires {hypothesis}")


def _no_hyp(ex, d):
    return None


def _heat_lhs(ctx: _Context, u0: np.ndarray, gamma: float, p: float, alpha: float = 0.0,
              weighted: bool = False, k=None) -> float:
    traj = heat_evolve(u0, ctx.times, ctx.grid)
    sym = ctx.sym(k)
    if alpha:
        sym = sym * riesz_multiplier(ctx.grid, alpha)
    nrm = block_time_norms(traj, sym, ctx.grid, p)
    if weighted:
        nrm = nrm * ctx.time_weight()
    return float(time_lebesgue(nrm, ctx.times, gamma))


def _duhamel_lhs(ctx: _Context, f: np.ndarray, gamma: float, p: float, grad: bool = False,
                 alpha: float = 0.0, weighted: bool = False) -> float:
    sym = ctx.sym()
    a = duhamel_coeffs(f * sym, ctx.times, ctx.grid)
    if grad:
        a = gradient_components(a, ctx.grid)
    mult = riesz_multiplier(ctx.grid, alpha) if alpha else 1.0
    nrm = block_time_norms(a, mult, ctx.grid, p)
    if weighted:
        nrm = nrm * ctx.time_weight()
    return float(time_lebesgue(nrm, ctx.times, gamma))


def _static_rhs(ctx: _Context, u0: np.ndarray, r: float, neighbourhood: bool = False,
                riesz: float = 0.0) -> float:
    blocks = ctx.neighbours() if neighbourhood else [ctx.k]
    mult = riesz_multiplier(ctx.grid, riesz) if riesz else 1.0
    tot = 0.0
    for kk in blocks:
        tot += float(block_time_norms(u0[None] * mult, ctx.window.symbol(kk), ctx.grid, r)[0])
    return tot


def _forcing_rhs(ctx: _Context, f: np.ndarray, gamma: float, p: float,
                 neighbourhood: bool = False, weighted: bool = False) -> float:
    blocks = ctx.neighbours() if neighbourhood else [ctx.k]
    tot = 0.0
    for kk in blocks:
        nrm = block_time_norms(f, ctx.window.symbol(kk), ctx.grid, p)
        if weighted:
            nrm = nrm * ctx.time_weight()
        tot += float(time_lebesgue(nrm, ctx.times, gamma))
    return tot


def _v_pg(cid):
    def v(ex, d):
        _req(ex["p"] >= 1, cid, "1 <= p <= inf")
        _req(ex["gamma"] >= 1, cid, "1 <= gamma <= inf")
    return v


def _v_pgg(cid):
    def v(ex, d):
        _req(ex["p"] >= 1, cid, "1 <= p <= inf")
        _req(1 <= ex["gamma1"] <= ex["gamma"], cid, "1 <= gamma1 <= gamma <= inf")
    return v


def _v_low_heat(ex, d):
    cid = "L6.5-low-heat"
    r, p, g, a = ex["r"], ex["p"], ex["gamma"], ex["alpha"]
    _req(1 < r <= p < np.inf, cid, "1 < r <= p < inf")
    _req(g >= 1, cid, "1 <= gamma <= inf")
    _req(a + d * (1 / r - 1 / p) > 2 / g, cid, "alpha + d(1/r - 1/p) > 2/gamma")


def _v_low_duhamel(ex, d):
    cid = "L6.6-low-duhamel"
    p1, p, g1, g, a = ex["p1"], ex["p"], ex["gamma1"], ex["gamma"], ex["alpha"]
    _req(1 < p1 <= p < np.inf, cid, "1 < p1 <= p < inf")
    _req(1 <= g1 <= g, cid, "1 <= gamma1 <= gamma <= inf")
    _req(d / p1 - d / p + 2 / g1 - 2 / g > 2 - a, cid,
         "d/p1 - d/p + 2/gamma1 - 2/gamma > 2 - alpha")


def _v_c68(ex, d):
    _req(2 <= ex["r"] < ex["p"] < np.inf, "C6.8-heat-L2", "2 <= r < p < inf")


def _v_c69(ex, d):
    _req(2 <= ex["p"] < np.inf, "C6.9-grad-duhamel-L2", "2 <= p < inf")


def _v_r_any(cid):
    def v(ex, d):
        _req(ex["r"] >= 1, cid, "1 <= r <= inf")
    return v


def _v_c611(cid, extra=None):
    def v(ex, d):
        _req(2 <= ex["r"] < d, cid, "2 <= r < d")
        if extra == "p":
            _req(ex["p"] > ex["r"], cid, "p = p(r) > r")
        if extra == "p1":
            _req(ex["r"] < ex["p"] < np.inf and 1 <= ex["p1"] < ex["p"], cid, "p1 < p, p = p(r) > r")
        if extra == "r1":
            _req(1 <= ex["r1"] < ex["r"], cid, "r1 < r")
    return v


def _v_weighted(cid, duh=False):
    def v(ex, d):
        _req(ex["c"] >= 0, cid, "c >= 0")
        _req(ex["p"] >= 1 and ex["gamma"] >= 1, cid, "1 <= p, gamma <= inf")
        if duh:
            _req(1 <= ex["gamma1"] <= ex["gamma"], cid, "1 <= gamma1 <= gamma <= inf")
    return v


def _v_c104(ex, d):
    _req(ex["c"] >= 0, "C10.4-weighted-strichartz", "c >= 0")


def _v_c108(ex, d):
    cid = "C10.8-weighted-low-r"
    _req(ex["c"] >= 0, cid, "c >= 0")
    _req(2 <= ex["r"] < d, cid, "2 <= r < d")
    _req(ex["p"] > ex["r"], cid, "p = p(r) > r")


def _e_dyadic(ctx, u0):
    # k is read as the dyadic level j; LHS carries the decay factor exp(c t 4^j)
    j = int(ctx.k[0])
    w = cached_window(DYADIC, ctx.grid)
    sym = w.symbol((j,))
    traj = heat_evolve(u0, ctx.times, ctx.grid)
    nrm = block_time_norms(traj, sym, ctx.grid, ctx.ex["p"])
    lhs = float(np.max(nrm * np.exp(ctx.ex["c"] * ctx.times * 4.0**j)))
    rhs = float(nrm[0])
    return lhs, rhs


def _e_l62(ctx, u0):
    g, p = ctx.ex["gamma"], ctx.ex["p"]
    return _heat_lhs(ctx, u0, g, p), ctx.knorm ** (-2 / g) * _static_rhs(ctx, u0, p)


def _e_l63(ctx, f):
    g, g1, p = ctx.ex["gamma"], ctx.ex["gamma1"], ctx.ex["p"]
    rhs = ctx.knorm ** (-2 * (1 + 1 / g - 1 / g1)) * _forcing_rhs(ctx, f, g1, p)
    return _duhamel_lhs(ctx, f, g, p), rhs


def _e_l65(ctx, u0):
    ex = ctx.ex
    lhs = _heat_lhs(ctx, u0, ex["gamma"], ex["p"], alpha=ex["alpha"])
    return lhs, _static_rhs(ctx, u0, ex["r"], neighbourhood=True)


def _e_l66(ctx, f):
    ex = ctx.ex
    lhs = _duhamel_lhs(ctx, f, ex["gamma"], ex["p"], alpha=ex["alpha"])
    return lhs, _forcing_rhs(ctx, f, ex["gamma1"], ex["p1"], neighbourhood=True)


def _e_c68_l2(ctx, u0):
    r, p = ctx.ex["r"], ctx.ex["p"]
    lhs = _heat_lhs(ctx, u0, 2.0, p)
    if any(ctx.k):
        return lhs, _static_rhs(ctx, u0, r) / ctx.knorm
    return lhs, _static_rhs(ctx, u0, r, neighbourhood=True, riesz=-1.0)


def _e_heat_linf(key):
    def e(ctx, u0):
        r = float(ctx.grid.d) if key == "d" else ctx.ex["r"]
        return _heat_lhs(ctx, u0, np.inf, r), _static_rhs(ctx, u0, r)
    return e


def _e_c69_l2(ctx, f):
    p = ctx.ex["p"]
    lhs = _duhamel_lhs(ctx, f, 2.0, p, grad=True)
    return lhs, _forcing_rhs(ctx, f, 1.0, p / 2, neighbourhood=True)


def _e_c69_linf(ctx, f):
    r = ctx.ex["r"]
    lhs = _duhamel_lhs(ctx, f, np.inf, r, grad=True)
    return lhs, _forcing_rhs(ctx, f, 1.0, r, neighbourhood=True)


def _e_c610(weighted):
    def e(ctx, u0):
        q = ctx.grid.d + 2.0
        lhs = _heat_lhs(ctx, u0, q, q, weighted=weighted)
        return lhs, ctx.bracket ** (-2 / q) * _static_rhs(ctx, u0, float(ctx.grid.d))
    return e


def _e_c610_grad(gamma_kind, weighted):
    def e(ctx, f):
        d = ctx.grid.d
        q = d + 2.0
        g, p = (q, q) if gamma_kind == "strichartz" else (np.inf, float(d))
        lhs = _duhamel_lhs(ctx, f, g, p, grad=True, weighted=weighted)
        return lhs, _forcing_rhs(ctx, f, q / 2, q / 2, weighted=weighted)
    return e


def _e_c611_l2(ctx, u0):
    r, p = ctx.ex["r"], ctx.ex["p"]
    lhs = _heat_lhs(ctx, u0, 2.0, p)
    return lhs, _static_rhs(ctx, u0, r, neighbourhood=True) / ctx.bracket


def _e_c611_grad_l2(ctx, f):
    lhs = _duhamel_lhs(ctx, f, 2.0, ctx.ex["p"], grad=True)
    return lhs, _forcing_rhs(ctx, f, 1.0, ctx.ex["p1"], neighbourhood=True)


def _e_c611_grad_linf(ctx, f):
    lhs = _duhamel_lhs(ctx, f, np.inf, ctx.ex["r"], grad=True)
    return lhs, _forcing_rhs(ctx, f, 2.0, ctx.ex["r1"], neighbourhood=True)


def _e_l101(ctx, u0):
    g, p = ctx.ex["gamma"], ctx.ex["p"]
    lhs = _heat_lhs(ctx, u0, g, p, weighted=True)
    return lhs, ctx.knorm ** (-2 / g) * _static_rhs(ctx, u0, p)


def _e_l102(ctx, f):
    g, g1, p = ctx.ex["gamma"], ctx.ex["gamma1"], ctx.ex["p"]
    lhs = _duhamel_lhs(ctx, f, g, p, weighted=True)
    rhs = ctx.knorm ** (-2 * (1 + 1 / g - 1 / g1)) * _forcing_rhs(ctx, f, g1, p, weighted=True)
    return lhs, rhs


def _e_c108(ctx, u0):
    r, p = ctx.ex["r"], ctx.ex["p"]
    lhs = _heat_lhs(ctx, u0, 2.0, p, weighted=True)
    return lhs, _static_rhs(ctx, u0, r) / ctx.bracket


def _est(cid, statement, kind, blocks, exps, validate, evaluate):
    return SmoothingEstimate(cid, statement, kind, blocks, tuple(exps), validate, evaluate)


ESTIMATES: dict[str, SmoothingEstimate] = {e.check_id: e for e in [
    _est("L6.4-dyadic-heat", "||D_j H(t)u0||_p <= C exp(-c t 4^j) ||D_j u0||_p",
         "heat", "dyadic", ("p", "c"), _no_hyp, _e_dyadic),
    _est("L6.2-heat-time", "||B_k H u0||_{L^g L^p} <= C |k|^(-2/g) ||B_k u0||_p",
         "heat", "high", ("p", "gamma"), _v_pg("L6.2-heat-time"), _e_l62),
    _est("L6.3-duhamel-time",
         "||B_k A f||_{L^g L^p} <= C |k|^(-2(1+1/g-1/g1)) ||B_k f||_{L^g1 L^p}",
         "duhamel", "high", ("p", "gamma", "gamma1"), _v_pgg("L6.3-duhamel-time"), _e_l63),
    _est("L6.5-low-heat",
         "||(-Lap)^(a/2) B_0 H u0||_{L^g L^p} <= C sum_|l|<=1 ||B_l u0||_r",
         "heat", "low", ("r", "p", "gamma", "alpha"), _v_low_heat, _e_l65),
    _est("L6.6-low-duhamel",
         "||B_0 (-Lap)^(a/2) A f||_{L^g L^p} <= C sum_|l|<=1 ||B_l f||_{L^g1 L^p1}",
         "duhamel", "low", ("p1", "p", "gamma1", "gamma", "alpha"), _v_low_duhamel, _e_l66),
    _est("C6.8-heat-L2", "||B_k H u0||_{L^2 L^p} <= C |k|^-1 ||B_k u0||_r",
         "heat", "all", ("r", "p"), _v_c68, _e_c68_l2),
    _est("C6.8-heat-Linf", "||B_k H u0||_{L^inf L^r} <= C ||B_k u0||_r",
         "heat", "all", ("r",), _v_r_any("C6.8-heat-Linf"), _e_heat_linf("r")),
    _est("C6.9-grad-duhamel-L2",
         "||B_k grad A f||_{L^2 L^p} <= C sum ||B_(k+l) f||_{L^1 L^(p/2)}",
         "duhamel", "all", ("p",), _v_c69, _e_c69_l2),
    _est("C6.9-grad-duhamel-Linf",
         "||B_k grad A f||_{L^inf L^r} <= C sum ||B_(k+l) f||_{L^1 L^r}",
         "duhamel", "all", ("r",), _v_r_any("C6.9-grad-duhamel-Linf"), _e_c69_linf),
    _est("C6.10-strichartz-like",
         "||B_k H u0||_{L^(d+2)_(x,t)} <= C <k>^(-2/(d+2)) ||B_k u0||_d",
         "heat", "all", (), _no_hyp, _e_c610(False)),
    _est("C6.10-grad-duhamel",
         "||B_k grad A f||_{L^(d+2)_(x,t)} <= C ||B_k f||_{L^((d+2)/2)_(x,t)}",
         "duhamel", "all", (), _no_hyp, _e_c610_grad("strichartz", False)),
    _est("C6.10-heat-Linf", "||B_k H u0||_{L^inf L^d} <= C ||B_k u0||_d",
         "heat", "all", (), _no_hyp, _e_heat_linf("d")),
    _est("C6.10-grad-duhamel-Linf",
         "||B_k grad A f||_{L^inf L^d} <= C ||B_k f||_{L^((d+2)/2)_(x,t)}",
         "duhamel", "all", (), _no_hyp, _e_c610_grad("energy", False)),
    _est("C6.11-heat-Linf", "||B_k H u0||_{L^inf L^r} <= C ||B_k u0||_r, 2 <= r < d",
         "heat", "all", ("r",), _v_c611("C6.11-heat-Linf"), _e_heat_linf("r")),
    _est("C6.11-heat-L2", "||B_k H u0||_{L^2 L^p} <= C <k>^-1 sum ||B_(k+l) u0||_r",
         "heat", "all", ("r", "p"), _v_c611("C6.11-heat-L2", "p"), _e_c611_l2),
    _est("C6.11-grad-duhamel-L2",
         "||B_k grad A f||_{L^2 L^p} <= C sum ||B_(k+l) f||_{L^1 L^p1}",
         "duhamel", "all", ("r", "p", "p1"), _v_c611("C6.11-grad-duhamel-L2", "p1"),
         _e_c611_grad_l2),
    _est("C6.11-grad-duhamel-Linf",
         "||B_k grad A f||_{L^inf L^r} <= C sum ||B_(k+l) f||_{L^2 L^r1}",
         "duhamel", "all", ("r", "r1"), _v_c611("C6.11-grad-duhamel-Linf", "r1"),
         _e_c611_grad_linf),
    _est("L10.1-weighted-heat",
         "||2^(c sqrt(t)|k|) B_k H u0||_{L^g L^p} <= C |k|^(-2/g) ||B_k u0||_p",
         "heat", "high", ("p", "gamma", "c"), _v_weighted("L10.1-weighted-heat"), _e_l101),
    _est("L10.2-weighted-duhamel",
         "||2^(c sqrt(t)|k|) B_k A f||_{L^g L^p} <= C |k|^(-2(1+1/g-1/g1))"
         " ||2^(c sqrt(t)|k|) B_k f||_{L^g1 L^p}",
         "duhamel", "high", ("p", "gamma", "gamma1", "c"),
         _v_weighted("L10.2-weighted-duhamel", True), _e_l102),
    _est("C10.4-weighted-strichartz",
         "||2^(c sqrt(t)|k|) B_k H u0||_{L^(d+2)_(x,t)} <= C <k>^(-2/(d+2)) ||B_k u0||_d",
         "heat", "all", ("c",), _v_c104, _e_c610(True)),
    _est("C10.4-weighted-grad-duhamel",
         "||2^(c sqrt(t)|k|) B_k grad A f||_{L^(d+2)} <= C ||2^(c sqrt(t)|k|) B_k f||_{L^((d+2)/2)}",
         "duhamel", "all", ("c",), _v_c104, _e_c610_grad("strichartz", True)),
    _est("C10.8-weighted-low-r",
         "||2^(c sqrt(t)|k|) B_k H u0||_{L^2 L^p} <= C <k>^-1 ||B_k u0||_r, 2 <= r < d",
         "heat", "high", ("r", "p", "c"), _v_c108, _e_c108),
]}


def validate_exponents(check_id: str, exponents: Mapping[str, float], d: int) -> dict:
    """Check exponent names and the hypothesis of ``check_id``; returns a float dict."""
    if check_id not in ESTIMATES:
        raise KeyError(f"unknown smoothing estimate {check_id!r}")
    est = ESTIMATES[check_id]
    missing = [n for n in est.exponents if n not in exponents]
    if missing:
        raise HypothesisError(f"{check_id} needs exponents {missing}")
    ex = {n: float(v) for n, v in exponents.items()}
    est.validate(ex, d)
    return ex


def smoothing_ratio(check_id: str, data, exponents: Mapping[str, float],
                    k: Sequence[int], times: np.ndarray | None = None) -> SmoothingResult:
    """Evaluate both sides of a registered block estimate with constant 1.

    Parameters
    ----------
    check_id : str
        Key of :data:`ESTIMATES`.
    data : Field, VectorField or Trajectory
        Initial state for ``"heat"`` estimates, forcing for ``"duhamel"`` ones.
    exponents : mapping
        Named exponents listed in the estimate (``p``, ``r``, ``gamma``, ...).
    k : sequence of int
        Block index; the dyadic estimate reads ``k[0]`` as the level ``j``.
    times : array, optional
        Time samples for heat estimates (forcing carries its own).

    Raises
    ------
    HypothesisError
        Naming the violated hypothesis when exponents or ``k`` are inadmissible.
    """
    est = ESTIMATES.get(check_id)
    if est is None:
        raise KeyError(f"unknown smoothing estimate {check_id!r}")
    if est.kind == "duhamel":
        if not isinstance(data, Trajectory):
            raise HeatError(f"{check_id} takes a forcing trajectory")
        grid, arr, times = data.grid, data.coeffs, data.times
    else:
        arr, grid = _coeff_array(data)
        if times is None:
            raise HeatError(f"{check_id} needs time samples")
        times = np.asarray(times, dtype=float)
    ex = validate_exponents(check_id, exponents, grid.d)
    k = tuple(int(v) for v in k)
    if est.blocks == "high":
        _req(max(abs(v) for v in k) >= 1, check_id, "|k|_inf >= 1")
    elif est.blocks == "low":
        _req(not any(k), check_id, "k = 0")
    elif est.blocks == "dyadic":
        k = k[:1]
    else:
        _req(len(k) == grid.d, check_id, f"a {grid.d}-dimensional block index")
    if est.blocks != "dyadic" and len(k) != grid.d:
        raise HypothesisError(f"{check_id} requires a {grid.d}-dimensional block index")
    ctx = _Context(grid, times, k, cached_window(SMOOTH, grid), ex)
    lhs, rhs = est.evaluate(ctx, arr)
    return SmoothingResult(check_id, k, float(lhs), float(rhs))


def block_horizon(k: Sequence[int], base: float = 8.0) -> float:
    """Time horizon ``base / |k|_2^2`` (``base`` itself for ``k = 0``)."""
    kk = float(np.sum(np.asarray(k, float) ** 2))
    return base / kk if kk > 0 else base


def pulse_forcing(grid: SpectralGrid, profile: np.ndarray, times: np.ndarray,
                  width: float) -> Trajectory:
    """Forcing ``exp(-t/width) * profile`` on the given times.

    ``profile`` has shape ``(C, N, ..., N)``.  Scaling ``width`` like
    ``|k|^-2`` keeps the forcing near-extremal for block ``k``.
    """
    env = np.exp(-np.asarray(times, float) / float(width))
    return Trajectory(grid, times, env.reshape((-1,) + (1,) * profile.ndim) * profile[None])


# ---------------------------------------------------------------------------
# export


@dataclass(frozen=True)
class SmoothingRecord:
    check_id: str
    k: tuple[int, ...]
    exponents: Mapping[str, float] = field(default_factory=dict)
    ratio: float = 0.0
    grid_m: int = 0
    seed: int = 0


def export_smoothing_csv(records: Iterable[SmoothingRecord], path: str | Path) -> None:
    """Write ``(check_id, k, exponents, ratio, grid_m, seed)`` rows."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["check_id", "k", "exponents", "ratio", "grid_m", "seed"])
        for r in records:
            ex = ";".join(f"{n}={v:g}" for n, v in sorted(r.exponents.items()))
            w.writerow([r.check_id, " ".join(map(str, r.k)), ex, repr(float(r.ratio)),
                        r.grid_m, r.seed])
