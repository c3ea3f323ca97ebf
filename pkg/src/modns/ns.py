"""Incompressible Navier-Stokes pieces: projection, nonlinearity, octant data,
a path-space Picard solver, dilations and analyticity tracking.

The mild formulation solved here is

    u(t) = H(t) u0 - A[P div(u (x) u)](t),

with ``H`` the heat flow, ``A`` the Duhamel integral and ``P`` the Leray
projector.  Fields are complex-valued; octant-supported data are not real.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .decomp import SHARP, SMOOTH
from .grid import (Field, GridError, HypothesisError, SpectralGrid, VectorField, crop_spectrum,
                   load_field, make_grid, pad_spectrum, save_field, to_spatial, to_spectral)
from .heat import Trajectory, duhamel_coeffs, heat_evolve, uniform_times
from .norms import NormSpec, TimeNormSpec, e_norm, mdot_norm, timespace_norm

OCTANT_E = "octant_E"
SMALL_MDOT = "small_Mdot"
REGIMES = (OCTANT_E, SMALL_MDOT)

DATA_KINDS = ("polynomial_octant", "exp_weight_octant", "random_octant", "L2_octant", "random_full")


class SolverError(RuntimeError):
    """Picard iteration aborted; ``diagnostics`` holds the history so far."""

    def __init__(self, msg: str, diagnostics: "PicardDiagnostics | None" = None):
        super().__init__(msg)
        self.diagnostics = diagnostics


# ---------------------------------------------------------------------------
# projection and nonlinearity


def leray_array(coeffs: np.ndarray, grid: SpectralGrid) -> np.ndarray:
    """Leray projection of coefficients with component axis ``-d-1``."""
    xi = grid.frequency_mesh()
    xi2 = grid.xi_sq()
    d = grid.d
    dot = sum(xi[j] * np.take(coeffs, j, axis=-d - 1) for j in range(d))
    inv = np.zeros_like(xi2)
    inv[xi2 > 0] = 1.0 / xi2[xi2 > 0]
    out = np.array(coeffs, dtype=complex, copy=True)
    for i in range(d):
        out[(Ellipsis, i) + (slice(None),) * d] -= xi[i] * dot * inv
    return out


def leray_project(u: VectorField) -> VectorField:
    """``u_hat - xi (xi . u_hat)/|xi|^2`` per mode; the mean mode is untouched."""
    if len(u.components) != u.grid.d:
        raise GridError("the projector needs d components")
    return VectorField.from_spectral(u.grid, leray_array(u.spectral(), u.grid), True)


def divergence_defect(u) -> float:
    """``max |xi . u_hat| / (max|xi| * max|u_hat|)``, 0 for the zero field.

    Accepts a VectorField or a coefficient array with component axis ``-d-1``.
    """
    if isinstance(u, VectorField):
        c, grid = u.spectral(), u.grid
    else:
        c, grid = u
    xi = grid.frequency_mesh()
    d = grid.d
    dot = sum(xi[j] * np.take(c, j, axis=-d - 1) for j in range(d))
    scale = np.max(np.abs(c)) * np.max(np.abs(grid.axis_frequencies())) * math.sqrt(d)
    return float(np.max(np.abs(dot)) / scale) if scale > 0 else 0.0


def nonlinear_array(coeffs: np.ndarray, grid: SpectralGrid,
                    chunk: int = 8) -> tuple[np.ndarray, float]:
    """``P div(u (x) u)`` for a batch ``(T, d, N, ..., N)`` of velocity spectra.

    Products are formed on the padded grid, so the convolution is exact
    before truncation to the band.  Returns the result and the largest
    fraction of product energy that fell outside the band.
    """
    d = grid.d
    L = grid.fft_padded
    n = grid.n_modes
    xi = grid.frequency_mesh()
    out = np.empty(coeffs.shape, dtype=complex)
    lost = 0.0
    for s0 in range(0, coeffs.shape[0], chunk):
        blk = coeffs[s0:s0 + chunk]
        phys = to_spatial(pad_spectrum(blk, d, L), d)
        div = np.zeros(blk.shape, dtype=complex)
        for i in range(d):
            for j in range(i, d):
                full = to_spectral(phys[:, i] * phys[:, j], d)
                kept = crop_spectrum(full, d, n)
                tot = float(np.sum(np.abs(full) ** 2))
                if tot > 0:
                    lost = max(lost, 1.0 - float(np.sum(np.abs(kept) ** 2)) / tot)
                div[:, i] += 1j * xi[j] * kept
                if j != i:
                    div[:, j] += 1j * xi[i] * kept
        out[s0:s0 + chunk] = leray_array(div, grid)
    return out, max(lost, 0.0)


def nonlinear_term(u: VectorField) -> VectorField:
    """``P div(u (x) u)`` with dealiased products and exact spectral derivatives.

    A ``RuntimeWarning`` is emitted when products leave the resolved band.
    """
    grid = u.grid
    res, lost = nonlinear_array(u.spectral()[None], grid)
    if lost > 1e-14:
        warnings.warn(f"nonlinear term truncated {lost:.3e} of the product energy",
                      RuntimeWarning, stacklevel=2)
        comps = tuple(Field(grid, "spectral", c, (f"band_overflow:{lost:.3e}",)) for c in res[0])
        return VectorField(comps, True)
    return VectorField.from_spectral(grid, res[0], True)


def nonlinear_direct(u: VectorField) -> VectorField:
    """Independent route: physical products on the padded grid, then
    ``d_j (u_j u_i)`` by spectral derivative, then projection, one term at a time."""
    grid = u.grid
    d = grid.d
    L = grid.fft_padded
    phys = [to_spatial(pad_spectrum(c.spectral(), d, L), d) for c in u.components]
    xi = grid.frequency_mesh()
    comps = []
    for i in range(d):
        acc = np.zeros(grid.shape, dtype=complex)
        for j in range(d):
            prod = crop_spectrum(to_spectral(phys[j] * phys[i], d), d, grid.n_modes)
            acc = acc + 1j * xi[j] * prod
        comps.append(acc)
    return leray_project(VectorField.from_spectral(grid, np.stack(comps)))


# ---------------------------------------------------------------------------
# octant support and data


def octant_mask(grid: SpectralGrid) -> np.ndarray:
    """Boolean mask of lattice frequencies with every component >= 0."""
    mask = np.ones(grid.shape, bool)
    for x in grid.frequency_mesh():
        mask = mask & (x >= 0)
    return mask


def octant_restrict(f):
    """Zero all coefficients outside the closed first octant."""
    if isinstance(f, VectorField):
        return VectorField.from_spectral(f.grid, f.spectral() * octant_mask(f.grid),
                                         f.divergence_free)
    if isinstance(f, Field):
        return Field(f.grid, "spectral", f.spectral() * octant_mask(f.grid))
    raise TypeError(f"expected Field or VectorField, got {type(f).__name__}")


def octant_defect(coeffs: np.ndarray, grid: SpectralGrid) -> float:
    """Largest coefficient outside the octant relative to the largest overall."""
    top = float(np.max(np.abs(coeffs))) if coeffs.size else 0.0
    if top == 0:
        return 0.0
    return float(np.max(np.abs(coeffs[..., ~octant_mask(grid)]), initial=0.0)) / top


def _polynomial_profile(grid: SpectralGrid) -> np.ndarray:
    xi = grid.frequency_mesh()
    ones = np.ones(grid.shape)
    comps = [xi[1] * ones, -xi[0] * ones] + [np.zeros(grid.shape)] * (grid.d - 2)
    return np.stack(comps).astype(complex)


def make_initial_data(kind: str, grid: SpectralGrid, s: float = -1.0, seed: int = 0,
                      decay: float = 1.0, normalise: tuple[float, float] | None = None
                      ) -> VectorField:
    """Divergence-free initial data.

    Parameters
    ----------
    kind : str
        ``polynomial_octant``: ``P(xi) = (xi_2, -xi_1, 0..)`` on the octant.
        ``exp_weight_octant``: the same times ``2^(-s|xi|_1/2)``.
        ``random_octant``: Gaussian coefficients damped by ``exp(-decay|xi|)``.
        ``L2_octant``: Gaussian coefficients damped by ``exp(-decay|xi|^2)``.
        ``random_full``: like ``random_octant`` without the octant restriction.
    s : float
        Weight exponent used by ``exp_weight_octant`` and by ``normalise``.
    seed : int
        Draws that vanish after projection are redrawn with ``seed + 1, ...``.
    normalise : (family_s, r) or None
        Rescale so ``||u0||_{E^s_{r,1}}`` (octant kinds) or
        ``||u0||_{Mdot^s_{r,1}}`` (``random_full``) equals 1, with ``s`` taken
        from the first entry.
    """
    if kind not in DATA_KINDS:
        raise ValueError(f"unknown data kind {kind!r}; expected one of {DATA_KINDS}")
    mask = octant_mask(grid) if kind != "random_full" else np.ones(grid.shape, bool)
    for attempt in range(100):
        if kind == "polynomial_octant":
            c = _polynomial_profile(grid)
        elif kind == "exp_weight_octant":
            c = _polynomial_profile(grid) * np.exp2(-s * grid.xi_l1() / 2)
        else:
            rng = np.random.default_rng(seed + attempt)
            shp = (grid.d,) + grid.shape
            c = rng.standard_normal(shp) + 1j * rng.standard_normal(shp)
            if kind == "L2_octant":
                c = c * np.exp(-decay * grid.xi_sq())
            else:
                c = c * np.exp(-decay * np.sqrt(grid.xi_sq()))
        c = leray_array(c * mask, grid)
        if np.max(np.abs(c)) > 0:
            break
    else:  # pragma: no cover - a hundred degenerate draws is not reachable in practice
        raise ValueError("could not draw non-degenerate initial data")
    u = VectorField.from_spectral(grid, c, True)
    if normalise is not None:
        ns_, r = normalise
        nrm = (mdot_norm(u, ns_, r, 1) if kind == "random_full" else e_norm(u, ns_, r, 1))
        u = VectorField.from_spectral(grid, c / nrm, True)
    return u


def select_exponents(r: float, d: int, rho: float | None = None) -> tuple[float, float]:
    """Working exponents ``(gamma, p)`` for the octant regime.

    ``r = d`` gives ``(d+2, d+2)``; ``2 <= r < d`` gives ``(2, rho)`` with
    ``rho`` defaulting to ``8d``.

    Raises
    ------
    HypothesisError
        If ``r`` lies outside ``[2, d]``.
    """
    if not 2 <= r <= d:
        raise HypothesisError(f"octant regime requires 2 <= r <= d, got r={r:g}, d={d}")
    if r == d:
        return float(d + 2), float(d + 2)
    return 2.0, float(rho if rho is not None else 8 * d)


# ---------------------------------------------------------------------------
# solver


@dataclass(frozen=True)
class SolverConfig:
    """Solver parameters; validated against the regime hypotheses.

    ``gamma``/``p`` default to :func:`select_exponents` (octant regime) or
    ``(2, 1.5 r)`` (small-data hybrid regime).  The working norm uses the
    sharp cube decomposition evaluated with ``quadrature`` points per block
    width, an equivalent norm that is much cheaper to evaluate.
    """

    regime: str
    d: int
    r: float
    s: float = -1.0
    T: float = 1.0
    nt: int = 64
    picard_tol: float = 1e-8
    max_iters: int = 15
    c_analytic: float = 0.5
    gamma: float | None = None
    p: float | None = None
    rho: float | None = None
    norm_variant: str = SHARP
    quadrature: float = 2.0

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise HypothesisError(f"unknown regime {self.regime!r}; expected one of {REGIMES}")
        if self.regime == OCTANT_E:
            if not self.s < 0:
                raise HypothesisError(f"octant regime requires s < 0, got s={self.s:g}")
            g, p = select_exponents(self.r, self.d, self.rho)
            object.__setattr__(self, "gamma", self.gamma or g)
            object.__setattr__(self, "p", self.p or p)
        else:
            p = self.p or 1.5 * self.r
            if not (self.d <= self.r < p <= 2 * self.r):
                raise HypothesisError(
                    f"small-data hybrid regime requires d <= r < p <= 2r, "
                    f"got d={self.d}, r={self.r:g}, p={p:g}")
            object.__setattr__(self, "gamma", self.gamma or 2.0)
            object.__setattr__(self, "p", p)
        if self.T <= 0 or self.nt < 1 or self.max_iters < 1 or self.picard_tol <= 0:
            raise HypothesisError("need T > 0, nt >= 1, max_iters >= 1, picard_tol > 0")

    def working_norm(self) -> TimeNormSpec:
        if self.regime == OCTANT_E:
            sp = NormSpec("E", self.s, self.p, 1.0, self.norm_variant)
        else:
            sp = NormSpec("M", 0.0, self.p, 1.0, self.norm_variant)
        return TimeNormSpec(self.gamma, sp)

    def times(self) -> np.ndarray:
        return uniform_times(self.T, self.nt)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class PicardDiagnostics:
    """Per-iteration history of a Picard solve, recorded verbatim."""

    norms: list[float] = field(default_factory=list)
    diff_norms: list[float] = field(default_factory=list)
    ratios: list[float] = field(default_factory=list)
    band_loss: list[float] = field(default_factory=list)
    converged: bool = False
    iterations: int = 0
    residual: float = float("nan")
    s0: float | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def final_ratio(self) -> float:
        return self.ratios[-1] if self.ratios else 0.0

    def to_csv(self, path: str | Path) -> None:
        """Rows of ``(iter, norm, diff_norm, ratio)``."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iter", "norm", "diff_norm", "ratio"])
            for i, dn in enumerate(self.diff_norms):
                ratio = self.ratios[i - 1] if i >= 1 and i - 1 < len(self.ratios) else ""
                w.writerow([i + 1, repr(self.norms[i + 1]), repr(dn),
                            repr(ratio) if ratio != "" else ""])


def _tnorm(coeffs, times, grid, tspec, quadrature) -> float:
    traj = Trajectory(grid, times, coeffs)
    return timespace_norm(traj, tspec, quadrature)


def mild_map(u: np.ndarray, lin: np.ndarray, times: np.ndarray,
             grid: SpectralGrid) -> tuple[np.ndarray, float]:
    """One application of ``u -> H u0 - A P div(u (x) u)`` on a whole path."""
    nl, lost = nonlinear_array(u, grid)
    return lin - duhamel_coeffs(nl, times, grid), lost


def picard_solve(u0: VectorField, config: SolverConfig) -> tuple[Trajectory, PicardDiagnostics]:
    """Fixed-point iteration of the mild equation on the whole time grid.

    Iterates ``u^0 = H(t) u0``, ``u^(n+1) = T u^(n)`` until the working
    time-space norm of the difference is at most ``picard_tol * ||u^(n+1)||``
    or ``max_iters`` is reached.  Non-convergence is reported through the
    diagnostics, not raised.

    Raises
    ------
    GridError
        If ``u0`` does not have ``config.d`` components.
    HypothesisError
        If the octant regime is requested for data with support outside the
        first octant.
    SolverError
        If an iterate becomes non-finite; the error carries the diagnostics.
    """
    grid = u0.grid
    if grid.d != config.d or len(u0.components) != config.d:
        raise GridError(f"data has dimension {grid.d} and {len(u0.components)} components, "
                        f"config expects d={config.d}")
    c0 = u0.spectral()
    if config.regime == OCTANT_E and octant_defect(c0, grid) > 0:
        raise HypothesisError("octant regime requires data supported in the first octant")
    times = config.times()
    tspec = config.working_norm()
    q = config.quadrature
    lin = heat_evolve(c0, times, grid)
    u = lin
    diag = PicardDiagnostics()
    diag.norms.append(_tnorm(u, times, grid, tspec, q))
    prev_diff = None
    for it in range(1, config.max_iters + 1):
        new, lost = mild_map(u, lin, times, grid)
        if not np.all(np.isfinite(new)):
            diag.iterations = it
            diag.notes.append("non-finite iterate")
            raise SolverError(f"non-finite iterate at iteration {it}", diag)
        diff = _tnorm(new - u, times, grid, tspec, q)
        nrm = _tnorm(new, times, grid, tspec, q)
        diag.norms.append(nrm)
        diag.diff_norms.append(diff)
        diag.band_loss.append(lost)
        if prev_diff is not None:
            diag.ratios.append(diff / prev_diff if prev_diff > 0 else 0.0)
        prev_diff = diff
        u = new
        diag.iterations = it
        if diff <= config.picard_tol * nrm:
            diag.converged = True
            break
    traj = Trajectory(grid, times, u)
    diag.residual = mild_residual(traj, c0, config)
    if max(diag.band_loss, default=0.0) > 1e-14:
        diag.notes.append(f"band_overflow:{max(diag.band_loss):.3e}")
    return traj, diag


def mild_residual(traj: Trajectory, u0_coeffs: np.ndarray, config: SolverConfig,
                  band_limit: int | None = None) -> float:
    """``||u - H u0 + A P div(u (x) u)|| / ||u||`` in the working norm (0 for u = 0).

    ``band_limit`` truncates the nonlinear term to labels ``|n|_inf <= band_limit``,
    which is the equation an undilated Galerkin solve actually satisfies.
    """
    tspec = config.working_norm()
    g = traj.grid
    lin = heat_evolve(u0_coeffs, traj.times, g)
    if band_limit is None:
        img, _ = mild_map(traj.coeffs, lin, traj.times, g)
    else:
        keep = np.ones(g.shape, bool)
        for lab in g.label_mesh():
            keep &= np.abs(lab) <= band_limit
        nl, _ = nonlinear_array(traj.coeffs, g)
        img = lin - duhamel_coeffs(nl * keep, traj.times, g)
    nrm = _tnorm(traj.coeffs, traj.times, traj.grid, tspec, config.quadrature)
    if nrm == 0:
        return 0.0
    res = _tnorm(traj.coeffs - img, traj.times, traj.grid, tspec, config.quadrature)
    return res / nrm


@dataclass(frozen=True)
class BisectionResult:
    eps: float
    trajectory: Trajectory
    diagnostics: PicardDiagnostics
    history: tuple[tuple[float, bool], ...]


def bisect_epsilon(make_data: Callable[[float], VectorField], config: SolverConfig,
                   lo: float = 0.0, hi: float = 1.0, steps: int = 6,
                   max_ratio: float = 0.9, max_doublings: int = 8) -> BisectionResult:
    """Largest amplitude found by bisection for which the solve converges with
    final contraction ratio below ``max_ratio``.

    ``hi`` is doubled (up to ``max_doublings`` times) while it still succeeds,
    so the bracket straddles the threshold when one exists within that range.  The returned run is the
    best successful one; ``eps = 0`` signals that none succeeded.
    """
    history = []

    def ok(eps):
        try:
            traj, diag = picard_solve(make_data(eps), config)
        except SolverError:
            history.append((eps, False))
            return False, None
        good = diag.converged and diag.final_ratio < max_ratio
        history.append((eps, good))
        return good, (traj, diag)

    best = None
    good, run = ok(hi)
    grow = 0
    while good and grow < max_doublings:
        best = (hi, run)
        lo, hi = hi, 2 * hi
        good, run = ok(hi)
        grow += 1
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        good, run = ok(mid)
        if good:
            best = (mid, run)
            lo = mid
        else:
            hi = mid
    if best is None:
        zero = make_data(0.0)
        traj, diag = picard_solve(zero, config)
        return BisectionResult(0.0, traj, diag, tuple(history))
    return BisectionResult(best[0], best[1][0], best[1][1], tuple(history))


# ---------------------------------------------------------------------------
# dilations


def scale_coeffs(coeffs: np.ndarray, grid: SpectralGrid, lam) -> tuple[np.ndarray, float]:
    """Coefficients of ``f(lam x)`` for integer ``lam`` or ``lam = 1/n``.

    Returns the new coefficients and the fraction of l2 energy dropped
    because it left the band (integer ``lam`` only).
    """
    d = grid.d
    half = grid.half
    num, den = _as_ratio(lam)
    out = np.zeros_like(coeffs, dtype=complex)
    idx = np.argwhere(np.any(np.abs(coeffs.reshape((-1,) + grid.shape)) > 0, axis=0))
    labels = idx - half
    if den > 1 and np.any(labels % den):
        raise HypothesisError(
            f"dilation by 1/{den} needs every occupied label divisible by {den}")
    new = labels * num // den
    inside = np.all(np.abs(new) <= half, axis=1)
    for src, dst in zip(idx[inside], new[inside] + half):
        out[(...,) + tuple(dst)] = coeffs[(...,) + tuple(src)]
    tot = float(np.sum(np.abs(coeffs) ** 2))
    dropped = sum(float(np.sum(np.abs(coeffs[(...,) + tuple(src)]) ** 2))
                  for src in idx[~inside])
    lost = 0.0 if tot == 0 else dropped / tot
    return out, lost


def _as_ratio(lam) -> tuple[int, int]:
    lam = float(lam)
    if lam <= 0:
        raise HypothesisError(f"dilation factor must be positive, got {lam}")
    if abs(lam - round(lam)) < 1e-12 and round(lam) >= 1:
        return int(round(lam)), 1
    inv = 1.0 / lam
    if abs(inv - round(inv)) < 1e-9:
        return 1, int(round(inv))
    raise HypothesisError(f"dilation factor must be an integer or its reciprocal, got {lam}")


def scale_field(f, lam):
    """Exact dilation ``x -> f(lam x)`` by spectral relabelling ``xi -> lam xi``.

    Modes pushed past the cutoff are dropped and the result carries a
    ``band_overflow`` flag plus a ``RuntimeWarning``.

    Examples
    --------
    >>> from modns.grid import make_grid, single_mode
    >>> g = make_grid(2, 4, 2)
    >>> h = scale_field(single_mode(g, (0.5, 0.25)), 2)
    >>> float(abs(h.spectral()[g.index_of((1.0, 0.5))]))
    1.0
    """
    if isinstance(f, VectorField):
        c, lost = scale_coeffs(f.spectral(), f.grid, lam)
        flags = _overflow_flags(lost)
        return VectorField(tuple(Field(f.grid, "spectral", x, flags) for x in c),
                           f.divergence_free)
    if isinstance(f, Field):
        c, lost = scale_coeffs(f.spectral(), f.grid, lam)
        return Field(f.grid, "spectral", c, _overflow_flags(lost))
    raise TypeError(f"expected Field or VectorField, got {type(f).__name__}")


def _overflow_flags(lost: float) -> tuple[str, ...]:
    if lost > 0:
        warnings.warn(f"dilation pushed {lost:.3e} of the energy past the cutoff",
                      RuntimeWarning, stacklevel=3)
        return (f"band_overflow:{lost:.3e}",)
    return ()


def dilation_norm_ratio(f, lam, s: float, p: float, q: float = 1.0,
                        s_ref: float | None = None, variant: str = SMOOTH) -> float:
    """``||f(lam .)||_{E^s_{p,q}} / ||f||_{E^s_ref_{p,q}}`` (``s_ref`` defaults to ``s``).

    With the normalised torus measure ``||f(lam .)||_p = ||f||_p``, so this
    quantity is the whole-space ratio multiplied by ``lam^(d/p)``.
    """
    g = scale_field(f, lam)
    den = e_norm(f, s if s_ref is None else s_ref, p, q, variant)
    return e_norm(g, s, p, q, variant) / den if den > 0 else 0.0


@dataclass(frozen=True)
class ScaledSolve:
    lam: int
    s0: float
    scaled: Trajectory
    unscaled: Trajectory
    diagnostics: PicardDiagnostics


def scaled_solve(u0: VectorField, config: SolverConfig, lam: int) -> ScaledSolve:
    """Large-data path: solve for ``lam u0(lam .)`` then undo the scaling.

    The scaled problem runs on ``[0, T]``; the unscaled trajectory
    ``u(t, x) = u_lam(t/lam^2, x/lam)/lam`` lives on ``[0, lam^2 T]``.  All
    spectra stay on the sublattice ``lam Z^d / m`` so undoing the dilation is
    exact.  The reported ``s0 = s * lam``.
    """
    lam = int(lam)
    if lam < 1:
        raise HypothesisError("scaling factor must be a positive integer")
    v0 = scale_field(u0, lam)
    if any(fl.startswith("band_overflow") for c in v0.components for fl in c.flags):
        raise HypothesisError(f"data too broad for dilation by {lam} on this grid")
    v0 = VectorField.from_spectral(u0.grid, lam * v0.spectral(), True)
    traj, diag = picard_solve(v0, config)
    # products keep the sublattice exactly; FFT roundoff does not
    on = np.ones(u0.grid.shape, bool)
    for lab in u0.grid.label_mesh():
        on &= lab % lam == 0
    top = float(np.max(np.abs(traj.coeffs))) or 1.0
    stray = float(np.max(np.abs(traj.coeffs[..., ~on]), initial=0.0)) / top
    diag.notes.append(f"off-sublattice roundoff {stray:.2e} dropped before unscaling")
    back, _ = scale_coeffs(traj.coeffs * on, traj.grid, 1.0 / lam)
    unscaled = Trajectory(traj.grid, traj.times * lam**2, back / lam)
    s0 = config.s * lam
    diag.s0 = s0
    return ScaledSolve(lam, s0, traj, unscaled, diag)


# ---------------------------------------------------------------------------
# bilinear probes


def bilinear_ratio(u: np.ndarray, v: np.ndarray, times: np.ndarray, grid: SpectralGrid,
                   s: float, variant: str = SMOOTH, quadrature: float | None = 2.0) -> float:
    """``||uv||_{L^((d+2)/2) E^s_((d+2)/2,1)} / (||u|| ||v||)_{L^(d+2) E^s_(d+2,1)}``.

    ``u`` and ``v`` are scalar paths with shape ``(T, N, ..., N)``.
    """
    d = grid.d
    half = (d + 2) / 2
    full = d + 2.0
    prod = np.empty_like(u, dtype=complex)
    L = grid.fft_padded
    for i in range(u.shape[0]):
        pu = to_spatial(pad_spectrum(u[i], d, L), d)
        pv = to_spatial(pad_spectrum(v[i], d, L), d)
        prod[i] = crop_spectrum(to_spectral(pu * pv, d), d, grid.n_modes)
    sp_h = TimeNormSpec(half, NormSpec("E", s, half, 1.0, variant))
    sp_f = TimeNormSpec(full, NormSpec("E", s, full, 1.0, variant))
    num = _tnorm(prod[:, None], times, grid, sp_h, quadrature)
    den = (_tnorm(u[:, None], times, grid, sp_f, quadrature)
           * _tnorm(v[:, None], times, grid, sp_f, quadrature))
    return num / den if den > 0 else 0.0


def counterexample_ratio(grid: SpectralGrid, k: Sequence[int], s: float, p: float = 2.0,
                         variant: str = SMOOTH) -> float:
    """``||uv||_{E^s_{p,1}} / (||u|| ||v||)`` for single modes at ``k`` and ``-k``.

    The product is the constant 1, so the ratio is ``2^(-2 s |k|_1)`` exactly:
    the bilinear estimate cannot hold without the octant restriction.
    """
    from .grid import product_dealiased, single_mode
    u = single_mode(grid, tuple(k))
    v = single_mode(grid, tuple(-x for x in k))
    uv = product_dealiased(u, v)
    return e_norm(uv, s, p, 1, variant) / (e_norm(u, s, p, 1, variant) * e_norm(v, s, p, 1, variant))


# ---------------------------------------------------------------------------
# analyticity radius


@dataclass(frozen=True)
class RadiusFit:
    radius: float
    n_points: int
    defined: bool


def spectral_envelope(coeffs: np.ndarray, grid: SpectralGrid,
                      floor: float = 1e-14) -> tuple[np.ndarray, np.ndarray]:
    """Upper envelope ``max |u_hat|`` on each l1 shell ``|xi|_1 = n/m``."""
    amp = np.sqrt(np.sum(np.abs(coeffs.reshape((-1,) + grid.shape)) ** 2, axis=0))
    shell = np.rint(grid.xi_l1() * grid.m).astype(int)
    nsh = shell.max() + 1
    env = np.zeros(nsh)
    np.maximum.at(env, shell.ravel(), amp.ravel())
    radii = np.arange(nsh) / grid.m
    keep = env > floor
    return radii[keep], env[keep]


def analyticity_radius(traj, t_index: int | None = None, floor: float = 1e-14,
                       min_points: int = 3) -> RadiusFit:
    """Least-squares slope ``sigma`` of ``log2 env(xi) ~ a - sigma |xi|_1``.

    ``traj`` may be a Trajectory (with ``t_index``) or a ``(coeffs, grid)``
    pair.  Only complete shells ``|xi|_1 <= K`` enter the fit: beyond that the
    shells are clipped cube corners holding a handful of modes, whose
    amplitudes can pass through zero.  Shells whose envelope is below
    ``floor`` are excluded; fewer than ``min_points`` remaining shells give
    ``defined = False`` and a NaN radius.
    """
    if isinstance(traj, Trajectory):
        coeffs, grid = traj.coeffs[t_index if t_index is not None else -1], traj.grid
    else:
        coeffs, grid = traj
    r, env = spectral_envelope(coeffs, grid, floor)
    full = r <= grid.K + 1e-12
    r, env = r[full], env[full]
    if r.size < min_points:
        return RadiusFit(float("nan"), int(r.size), False)
    slope = np.polyfit(r, np.log2(env), 1)[0]
    return RadiusFit(float(-slope), int(r.size), True)


def radius_history(traj: Trajectory, floor: float = 1e-14) -> np.ndarray:
    return np.array([analyticity_radius(traj, i, floor).radius for i in range(traj.n_times)])


def radius_crossing_time(times: np.ndarray, radii: np.ndarray) -> float:
    """First time the radius reaches 0, linearly interpolated; NaN if never."""
    for i in range(1, len(radii)):
        if radii[i - 1] < 0 <= radii[i]:
            w = -radii[i - 1] / (radii[i] - radii[i - 1])
            return float(times[i - 1] + w * (times[i] - times[i - 1]))
    return 0.0 if len(radii) and radii[0] >= 0 else float("nan")


def analytic_rate(times: np.ndarray, radii: np.ndarray, horizon_fraction: float = 0.5) -> float:
    """Largest ``c`` with ``radius(t) >= radius(0) + c sqrt(t)`` on the first part of the grid."""
    sel = (times > 0) & (times <= horizon_fraction * times[-1] + 1e-12)
    if not sel.any():
        return float("nan")
    return float(np.min((radii[sel] - radii[0]) / np.sqrt(times[sel])))


# ---------------------------------------------------------------------------
# trajectory serialisation


def save_trajectory(traj: Trajectory, directory: str | Path, config: dict | None = None) -> Path:
    """Directory with ``manifest.json`` and one field container per component and time."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    names = []
    for i in range(traj.n_times):
        for c in range(traj.n_components):
            name = f"t{i:05d}_c{c}.fld"
            save_field(Field(traj.grid, "spectral", traj.coeffs[i, c]), out / name)
            names.append(name)
    g = traj.grid
    manifest = {"grid": {"d": g.d, "m": g.m, "K": g.K, "oversample": g.oversample},
                "times": [float(t) for t in traj.times], "n_components": traj.n_components,
                "files": names, "config": config or {}}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, default=str))
    return out


def load_trajectory(directory: str | Path) -> Trajectory:
    src = Path(directory)
    man = json.loads((src / "manifest.json").read_text())
    g = man["grid"]
    grid = SpectralGrid(g["d"], g["m"], g["K"], g["oversample"])
    nc = man["n_components"]
    times = np.array(man["times"])
    coeffs = np.empty((times.size, nc) + grid.shape, dtype=complex)
    for i in range(times.size):
        for c in range(nc):
            coeffs[i, c] = load_field(src / f"t{i:05d}_c{c}.fld").spectral()
    return Trajectory(grid, times, coeffs)


def diagnostics_to_dict(diag: PicardDiagnostics) -> dict:
    return asdict(diag)
