"""Registry of numerical checks for the inequalities the toolkit implements.

Each check draws a deterministic corpus, evaluates a ratio ``LHS / RHS``
(or an equivalence ratio between two norms) on a ladder of grids, and turns
the statistics into a verdict.  Constants that are only known to exist are
never invented: an inequality passes when its ratio stays bounded and the
maximum does not grow by more than the tolerance per refinement step, unless
the check itself predicts growth.

Every report carries the tolerance policy string :data:`POLICY` so the
artifact-level thresholds are never mistaken for derived constants.
"""

from __future__ import annotations

import csv
import hashlib
import itertools
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .decomp import DILATED, DYADIC, SHARP, SMOOTH, block_lp_norms, cached_window
from .grid import (Field, HypothesisError, SpectralGrid, VectorField, lp_norm, make_grid,
                   product_arrays, random_field, single_mode, to_spatial)
from .heat import (ESTIMATES, block_decay_fit, block_horizon, heat_evolve, pulse_forcing,
                   smoothing_ratio, uniform_times, validate_exponents)
from .norms import (NormSpec, TimeNormSpec, besov_norm, e_norm, exp_weights, gevrey_ratio,
                    lq_rows, lq_sum, m_norm, mdot_norm, pointwise_weight_l2, poly_weights,
                    timespace_norm)
from .ns import (OCTANT_E, SMALL_MDOT, SolverConfig, analytic_rate, bisect_epsilon,
                 counterexample_ratio, dilation_norm_ratio, divergence_defect,
                 leray_array, make_initial_data, mild_residual, octant_defect, octant_mask,
                 picard_solve, radius_crossing_time, radius_history, scale_field, scaled_solve)
from .heat import Trajectory
from .stft import gabor_coeff_norm, stft, stft_mod_norm

PASS, FAIL, INCONCLUSIVE, ERROR = "pass", "fail", "inconclusive", "error"

POLICY = ("artifact tolerance policy: max-ratio growth <= tolerance (default 25%) per ladder "
          "step unless growth is predicted; contraction threshold 0.9; these thresholds are "
          "engineering choices, not derived constants")


# ---------------------------------------------------------------------------
# types


@dataclass(frozen=True)
class CheckSpec:
    """Parameters of one check run.

    ``ladder`` holds the grid refinement values (usually ``m``; some checks
    document another meaning such as the dilation factor or a lattice step).
    ``exponents`` is a tuple of mappings, one per exponent set.
    """

    check_id: str
    trials: int = 10
    seed: int = 0
    ladder: tuple = (4, 8)
    d: int = 2
    K: int = 4
    exponents: tuple = ()
    tolerance: float = 0.25
    params: Mapping = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["exponents"] = [dict(e) for e in self.exponents]
        out["params"] = dict(self.params)
        return out

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, default=repr)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def with_(self, **kw) -> "CheckSpec":
        if "params" in kw:
            kw["params"] = {**dict(self.params), **dict(kw["params"])}
        return replace(self, **kw)


@dataclass
class Outcome:
    """What a runner hands back: ratios per ladder level plus its own criterion."""

    levels: dict
    passed: bool
    details: dict = field(default_factory=dict)
    trend_applies: bool = True


@dataclass
class CheckReport:
    check_id: str
    statement: str
    ratios: dict
    stats: dict
    trend: list
    verdict: str
    seed: int
    config_hash: str
    policy: str = POLICY
    details: dict = field(default_factory=dict)
    elapsed: float = 0.0
    spec: dict = field(default_factory=dict)

    @property
    def all_ratios(self) -> np.ndarray:
        vals = [v for lv in self.ratios.values() for v in lv]
        return np.asarray(vals, dtype=float)

    @property
    def max_ratio(self) -> float:
        return self.stats.get("max", float("nan"))

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))


@dataclass(frozen=True)
class CheckEntry:
    check_id: str
    statement: str
    runner: Callable[[CheckSpec], Outcome]
    defaults: CheckSpec
    validate: Callable[[CheckSpec], None] = lambda spec: None
    predicts_growth: bool = False
    torus_limited: bool = False


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


# ---------------------------------------------------------------------------
# shared helpers


def _rng(spec: CheckSpec, *keys: int) -> np.random.Generator:
    return np.random.default_rng([int(spec.seed)] + [int(k) for k in keys])


def _corpus(grid: SpectralGrid, n: int, rng: np.random.Generator,
            decay=(0.2, 1.0), margin: float | None = None) -> np.ndarray:
    """``n`` random scalar spectra, shape ``(n, 1, N, ..., N)``."""
    out = np.empty((n, 1) + grid.shape, dtype=complex)
    keep = None
    if margin is not None:
        keep = np.ones(grid.shape, bool)
        for xi in grid.frequency_mesh():
            keep &= np.abs(xi) <= grid.K - margin
    for i in range(n):
        c = random_field(grid, rng, decay=rng.uniform(*decay)).spectral()
        out[i, 0] = c if keep is None else c * keep
    return out


def _fields(arr: np.ndarray, grid: SpectralGrid) -> list[Field]:
    return [Field(grid, "spectral", a[0]) for a in arr]


def _exp_sets(spec: CheckSpec, keys: Sequence[str]) -> list[dict]:
    out = []
    for e in spec.exponents:
        out.append({k: float(e[k]) for k in keys})
    return out


def _grid_sets(**axes) -> tuple:
    names = list(axes)
    return tuple(dict(zip(names, vals)) for vals in itertools.product(*axes.values()))


def _key(e: Mapping) -> str:
    return ",".join(f"{k}={v:g}" for k, v in e.items())


def _band_outcome(per_level: list[tuple[str, dict]], tol: float,
                  group: Callable[[str], str] | None = None) -> Outcome:
    """Two-sided equivalence: per exponent set, both ends of the ratio band
    must move by at most ``tol`` (relative) between consecutive levels.

    ``group`` maps a configuration key to a coarser key; bands are then
    pooled over every configuration sharing it.
    """
    if group is not None:
        pooled = []
        for label, cfgs in per_level:
            out: dict = {}
            for k, v in cfgs.items():
                out.setdefault(group(k), []).extend(np.ravel(v).tolist())
            pooled.append((label, {k: np.asarray(v) for k, v in out.items()}))
        per_level = pooled
    levels, bands = {}, {}
    finite = True
    for label, cfgs in per_level:
        levels[label] = [float(v) for arr in cfgs.values() for v in np.ravel(arr)]
        bands[label] = {k: (float(np.min(v)), float(np.max(v))) for k, v in cfgs.items()}
        finite &= all(np.all(np.isfinite(v)) and np.all(np.asarray(v) > 0) for v in cfgs.values())
    worst = 0.0
    labels = [lb for lb, _ in per_level]
    for a, b in zip(labels, labels[1:]):
        for k in bands[a]:
            lo0, hi0 = bands[a][k]
            lo1, hi1 = bands[b][k]
            worst = max(worst, abs(lo1 / lo0 - 1), abs(hi1 / hi0 - 1))
    return Outcome(levels, bool(finite and worst <= tol),
                   {"worst_band_change": worst, "bands": bands}, trend_applies=False)


def _slope(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Least-squares slope and coefficient of determination."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    a, b = np.polyfit(x, y, 1)
    resid = y - (a * x + b)
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss if ss > 0 else 1.0
    return float(a), r2


def _batch_e(C: np.ndarray, window, s: float, p: float, q: float, cache: dict) -> np.ndarray:
    key = (id(window), p)
    if key not in cache:
        cache[key] = block_lp_norms(C, window, p)
    return lq_rows(exp_weights(window, s)[None] * cache[key], q)


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise HypothesisError(msg)


def _check_norm_sets(spec: CheckSpec, family: str, keys=("s", "p", "q")) -> None:
    for e in spec.exponents:
        NormSpec(family, float(e.get("s", 0.0)), float(e.get("p", 2.0)), float(e.get("q", 1.0)))


# ---------------------------------------------------------------------------
# norm equivalences and embeddings


def _run_hybrid(spec: CheckSpec) -> Outcome:
    per = []
    for li, m in enumerate(spec.ladder):
        g = make_grid(spec.d, m, spec.K)
        w = cached_window(SMOOTH, g)
        C = _corpus(g, spec.trials, _rng(spec, li))
        fs = _fields(C, g)
        absxi = np.sqrt(g.xi_sq())
        cfgs = {}
        for e in _exp_sets(spec, ("s", "p", "q")):
            mult = np.where(absxi > 0, absxi, 1.0) ** e["s"] * (absxi > 0)
            direct = lq_rows(block_lp_norms(C * mult, w, e["p"]), e["q"])
            hyb = np.array([mdot_norm(f, e["s"], e["p"], e["q"]) for f in fs])
            cfgs[_key(e)] = hyb / direct
        per.append((f"m={m}", cfgs))
    return _band_outcome(per, spec.tolerance)


def _val_hybrid(spec):
    for e in spec.exponents:
        _require(1 < float(e["p"]) < np.inf, "hybrid norm equivalence requires 1 < p < inf")
        _require(float(e["q"]) >= 1, "hybrid norm equivalence requires q >= 1")


def _run_stft(spec: CheckSpec) -> Outcome:
    m = spec.ladder[0]
    g = make_grid(spec.d, m, spec.K)
    w = cached_window(SMOOTH, g)
    C = _corpus(g, spec.trials, _rng(spec, 0))
    fs = _fields(C, g)
    sets = _exp_sets(spec, ("s", "p", "q"))
    cache: dict = {}
    enorms = {_key(e): _batch_e(C, w, e["s"], e["p"], e["q"], cache) for e in sets}
    per = []
    for step in spec.params.get("lattices", ((1.0, 1.0), (0.5, 0.5))):
        a, b = step
        vals = {_key(e): np.empty(len(fs)) for e in sets}
        for i, f in enumerate(fs):
            V = stft(f, a, b)
            for e in sets:
                vals[_key(e)][i] = stft_mod_norm(V, e["s"], e["p"], e["q"]) / enorms[_key(e)][i]
        per.append((f"a={a:g},b={b:g}", vals))
    return _band_outcome(per, spec.tolerance)


def _val_stft(spec):
    _check_norm_sets(spec, "E")
    for a, b in spec.params.get("lattices", ((1.0, 1.0), (0.5, 0.5))):
        _require(a > 0 and b > 0 and a * b <= 2 * np.pi + 1e-12,
                 "STFT lattice requires a, b > 0 and a*b <= 2*pi")


def _shift_spectrum(C: np.ndarray, d: int, shift: Sequence[int]) -> np.ndarray:
    """``c(n + shift)`` with zero fill (the input is band-limited away from the edge)."""
    out = C
    for ax, sh in enumerate(shift):
        if sh == 0:
            continue
        axis = C.ndim - d + ax
        out = np.roll(out, -sh, axis=axis)
        idx = [slice(None)] * C.ndim
        idx[axis] = slice(-sh, None) if sh > 0 else slice(None, -sh)
        out[tuple(idx)] = 0
    return out


def _run_decomposition(spec: CheckSpec) -> Outcome:
    per = []
    for li, m in enumerate(spec.ladder):
        g = make_grid(spec.d, m, spec.K)
        w = cached_window(SMOOTH, g)
        C = _corpus(g, spec.trials, _rng(spec, li), margin=1.0)
        cache: dict = {}
        cfgs = {}
        for shift in spec.params.get("shifts", ((0.5, 0.0), (0.5, 0.5))):
            lab = tuple(int(round(v * m)) for v in shift) + (0,) * (spec.d - len(shift))
            Cs = _shift_spectrum(C, spec.d, lab)
            for e in _exp_sets(spec, ("s", "p", "q")):
                std = _batch_e(C, w, e["s"], e["p"], e["q"], cache)
                pieces = lq_rows(exp_weights(w, e["s"])[None] * block_lp_norms(Cs, w, e["p"]),
                                 e["q"])
                cfgs[f"shift={shift};" + _key(e)] = std / pieces
        per.append((f"m={m}", cfgs))
    return _band_outcome(per, spec.tolerance)


def _val_decomposition(spec):
    _check_norm_sets(spec, "E")
    for e in spec.exponents:
        _require(float(e["s"]) <= 0, "decomposition norm equivalence requires s <= 0")
    for m in spec.ladder:
        for sh in spec.params.get("shifts", ((0.5, 0.0), (0.5, 0.5))):
            _require(all(abs(v * m - round(v * m)) < 1e-12 for v in sh),
                     "shifted pieces need shifts on the lattice Z^d/m")
            _require(all(abs(v) <= 0.75 for v in sh),
                     "pieces need support in k + [-3/2, 3/2]^d (shift <= 3/4)")


def _run_sharp_smooth(spec: CheckSpec) -> Outcome:
    per = []
    for li, m in enumerate(spec.ladder):
        g = make_grid(spec.d, m, spec.K)
        sm, sh = cached_window(SMOOTH, g), cached_window(SHARP, g)
        C = _corpus(g, spec.trials, _rng(spec, li))
        cache: dict = {}
        cfgs = {}
        for e in _exp_sets(spec, ("s", "p", "q")):
            cfgs[_key(e)] = (_batch_e(C, sm, e["s"], e["p"], e["q"], cache)
                             / _batch_e(C, sh, e["s"], e["p"], e["q"], cache))
        per.append((f"m={m}", cfgs))
    return _band_outcome(per, spec.tolerance)


def _val_sharp_smooth(spec):
    for e in spec.exponents:
        _require(1 < float(e["p"]) < np.inf and 1 < float(e["q"]) < np.inf,
                 "sharp/smooth equivalence requires 1 < p, q < inf")


def _run_dilated(spec: CheckSpec) -> Outcome:
    per = []
    for li, m in enumerate(spec.ladder):
        g = make_grid(spec.d, m, spec.K)
        base = cached_window(SMOOTH, g)
        C = _corpus(g, spec.trials, _rng(spec, li))
        cache: dict = {}
        cfgs = {}
        for a in spec.params.get("alphas", (0.5, 1.0, 2.0)):
            w = cached_window(DILATED, g, float(a))
            for e in _exp_sets(spec, ("s", "p", "q")):
                cfgs[f"alpha={a:g};" + _key(e)] = (
                    _batch_e(C, w, e["s"], e["p"], e["q"], cache)
                    / _batch_e(C, base, e["s"], e["p"], e["q"], cache))
        per.append((f"m={m}", cfgs))
    # q = inf bands hinge on a single block of one sample, so pool per alpha
    return _band_outcome(per, spec.tolerance, group=lambda k: k.split(";")[0])


def _val_dilated(spec):
    _check_norm_sets(spec, "E")
    for e in spec.exponents:
        _require(float(e["s"]) <= 0, "dilated-lattice equivalence requires s <= 0")
    for a in spec.params.get("alphas", (0.5, 1.0, 2.0)):
        _require(a > 0, "dilated-lattice equivalence requires alpha > 0")
        for m in spec.ladder:
            pts = np.floor(0.75 * a * m + 1e-9) - np.ceil(0.25 * a * m - 1e-9) + 1
            _require(pts >= 2, f"alpha={a:g} needs m >= {int(np.ceil(2 / a))} to resolve "
                               "the window transition band")


def _run_embedding(spec: CheckSpec) -> Outcome:
    """``E^{s1}_{p1,q1}`` against ``B^{s0}_{p0,q0}`` including band-edge modes."""
    s1, p1, q1 = (float(spec.params.get(k, v)) for k, v in (("s1", -1), ("p1", 4), ("q1", 1)))
    s0, p0, q0 = (float(spec.params.get(k, v)) for k, v in (("s0", 0), ("p0", 2), ("q0", np.inf)))
    levels = {}
    c0 = None
    for li, m in enumerate(spec.ladder):
        g = make_grid(spec.d, m, spec.K)
        fs = _fields(_corpus(g, spec.trials, _rng(spec, li), decay=(0.0, 1.0)), g)
        K = float(g.K)
        edge = [(K,) + (0.0,) * (g.d - 1), (K,) * g.d, (-K,) + (K,) * (g.d - 1),
                (K, 1.0 / m) + (0.0,) * (g.d - 2)]
        fs += [single_mode(g, xi) for xi in edge]
        r = np.array([e_norm(f, s1, p1, q1) / besov_norm(f, s0, p0, q0, homogeneous=False)
                      for f in fs])
        levels[f"m={m}"] = r.tolist()
        if c0 is None:
            c0 = float(r.max())
    worst = max(max(v) for v in levels.values())
    ok = worst <= (1 + spec.tolerance) * c0
    return Outcome(levels, bool(ok), {"ladder0_constant": c0, "worst": worst,
                                      "limit": (1 + spec.tolerance) * c0}, trend_applies=False)


def _val_embedding(spec):
    s1 = float(spec.params.get("s1", -1))
    p0, p1 = float(spec.params.get("p0", 2)), float(spec.params.get("p1", 4))
    _require(s1 < 0, "Besov-to-E embedding requires s1 < 0")
    _require(p0 <= p1, "Besov-to-E embedding requires p0 <= p1")


def _run_q_monotone(spec: CheckSpec) -> Outcome:
    qs = [float(q) for q in spec.params.get("qs", (1, 1.5, 2, 4, np.inf))]
    slack = float(spec.params.get("ulp_slack", 1e-12))
    levels = {}
    violations = 0
    worst = 0.0
    for li, m in enumerate(spec.ladder):
        g = make_grid(spec.d, m, spec.K)
        w = cached_window(SMOOTH, g)
        C = _corpus(g, spec.trials, _rng(spec, li), decay=(0.0, 1.0))
        rows = []
        for e in _exp_sets(spec, ("s", "p")):
            bn = block_lp_norms(C, w, e["p"]) * exp_weights(w, e["s"])[None]
            vals = np.stack([lq_rows(bn, q) for q in qs])  # (nq, n)
            ratio = vals[1:] / vals[:-1]
            violations += int(np.sum(ratio > 1 + slack))
            worst = max(worst, float(np.max(ratio - 1)))
            rows.extend(ratio.ravel().tolist())
        levels[f"m={m}"] = rows
    return Outcome(levels, violations == 0,
                   {"violations": violations, "max_excess": max(worst, 0.0), "ulp_slack": slack},
                   trend_applies=False)


def _run_plancherel(spec: CheckSpec) -> Outcome:
    per = []
    for li, m in enumerate(spec.ladder):
        g = make_grid(spec.d, m, spec.K)
        w = cached_window(SMOOTH, g)
        C = _corpus(g, spec.trials, _rng(spec, li))
        fs = _fields(C, g)
        cache: dict = {}
        cfgs = {}
        for e in _exp_sets(spec, ("s",)):
            pw = np.array([pointwise_weight_l2(f, e["s"]) for f in fs])
            cfgs[_key(e)] = pw / _batch_e(C, w, e["s"], 2.0, 2.0, cache)
        per.append((f"m={m}", cfgs))
    return _band_outcome(per, spec.tolerance)


def _run_gabor(spec: CheckSpec) -> Outcome:
    per = []
    for li, m in enumerate(spec.ladder):
        g = make_grid(spec.d, m, spec.K)
        fs = _fields(_corpus(g, spec.trials, _rng(spec, li)), g)
        cfgs = {}
        for e in _exp_sets(spec, ("s", "p", "q")):
            cfgs[_key(e)] = np.array([gabor_coeff_norm(f, e["s"], e["p"], e["q"])
                                      / m_norm(f, e["s"], e["p"], e["q"]) for f in fs])
        per.append((f"m={m}", cfgs))
    return _band_outcome(per, spec.tolerance)


def _val_gabor(spec):
    for e in spec.exponents:
        _require(1 <= float(e["p"]) < np.inf and 1 <= float(e["q"]) < np.inf,
                 "Gabor coefficient equivalence requires 1 <= p, q < inf")


def _weight_probe(g: SpectralGrid, s: float) -> Field:
    """``f^(xi) = 2^(-s|xi|_1)`` normalised in L^2."""
    f = Field(g, "spectral", np.exp2(-s * g.xi_l1()).astype(complex))
    return f * (1.0 / lp_norm(f, 2))


def _run_gevrey(spec: CheckSpec) -> Outcome:
    """Light probe bounded over ``|alpha| <= n``; heavy probe unbounded in ``K``.

    The ladder here runs over the band limit ``K`` at fixed ``m``.
    """
    rho = float(spec.params.get("rho", 0.25))
    order = int(spec.params.get("order", 12))
    p = float(spec.params.get("p", 2.0))
    s_light = float(spec.params.get("s_light", 0.5))
    s_heavy = float(spec.params.get("s_heavy", -0.5))
    m = int(spec.params.get("m", 4))
    light, heavy = [], []
    levels = {}
    for K in spec.ladder:
        g = make_grid(spec.d, m, int(K))
        fl, fh = _weight_probe(g, s_light), _weight_probe(g, s_heavy)
        idx = [a for n in range(order + 1) for a in _multi_indices(n, g.d)]
        lv = [gevrey_ratio(fl, a, rho, p) for a in idx]
        hv = max(gevrey_ratio(fh, a, rho, p) for a in _multi_indices(order, g.d))
        light.append(max(lv))
        heavy.append(hv)
        levels[f"K={K}"] = lv
    bound = max(light)
    light_ok = all(abs(b / a - 1) <= spec.tolerance for a, b in zip(light, light[1:]))
    growth = [b / a for a, b in zip(heavy, heavy[1:])]
    min_growth = float(spec.params.get("heavy_growth", 10.0))
    heavy_ok = all(gr >= min_growth for gr in growth) and heavy[-1] > bound
    return Outcome(levels, bool(light_ok and heavy_ok),
                   {"rho": rho, "light_sup": light, "heavy_at_order": heavy,
                    "heavy_growth": growth, "light_bound": bound}, trend_applies=False)


def _multi_indices(n: int, d: int) -> list[tuple[int, ...]]:
    if d == 1:
        return [(n,)]
    return [(a,) + rest for a in range(n + 1) for rest in _multi_indices(n - a, d - 1)]


def _val_gevrey(spec):
    _require(float(spec.params.get("rho", 0.25)) > 0, "Gevrey ratio requires rho > 0")
    _require(float(spec.params.get("s_light", 0.5)) > 0, "bounded Gevrey probe requires s > 0")


def _run_bernstein(spec: CheckSpec) -> Outcome:
    """``||B_k f||_p <= ||F^-1 sigma_k||_1 ||f||_p`` (Young on the sampled torus)."""
    levels = {}
    worst = 0.0
    for li, m in enumerate(spec.ladder):
        g = make_grid(spec.d, m, spec.K)
        w = cached_window(SMOOTH, g)
        fs = _fields(_corpus(g, spec.trials, _rng(spec, li), decay=(0.0, 1.0)), g)
        ks = [tuple([n] + [0] * (g.d - 1)) for n in range(0, g.K)] + [(1,) * g.d]
        rows = []
        for k in ks:
            sym = w.symbol(k)
            kl1 = float(np.mean(np.abs(to_spatial(sym.astype(complex), g.d))))
            for f in fs:
                num = Field(g, "spectral", f.spectral() * sym)
                for p in spec.params.get("ps", (1.0, 2.0, np.inf)):
                    den = lp_norm(f, p)
                    rows.append(lp_norm(num, p) / (kl1 * den) if den > 0 else 0.0)
        worst = max(worst, max(rows))
        levels[f"m={m}"] = rows
    # the constant is explicit, so the bound itself is the criterion
    return Outcome(levels, worst <= 1 + 1e-12, {"worst": worst}, trend_applies=False)


def _run_interpolation(spec: CheckSpec) -> Outcome:
    """``||f||_{B^s_{p,1}} <= C ||f||^(1-t)_{B^s0_{p,inf}} ||f||^t_{B^s1_{p,inf}}``."""
    s0 = float(spec.params.get("s0", -1.0))
    s1 = float(spec.params.get("s1", 1.0))
    theta = float(spec.params.get("theta", 0.5))
    s = (1 - theta) * s0 + theta * s1
    levels = {}
    for li, m in enumerate(spec.ladder):
        g = make_grid(spec.d, m, spec.K)
        fs = _fields(_corpus(g, spec.trials, _rng(spec, li), decay=(0.0, 1.0)), g)
        fs += [single_mode(g, (a,) + (0.0,) * (g.d - 1)) for a in (1.0 / m, 1.0, g.K - 1.0)]
        rows = []
        for p in spec.params.get("ps", (2.0, 4.0)):
            for f in fs:
                den = (besov_norm(f, s0, p, np.inf) ** (1 - theta)
                       * besov_norm(f, s1, p, np.inf) ** theta)
                rows.append(besov_norm(f, s, p, 1) / den)
        levels[f"m={m}"] = rows
    finite = all(np.all(np.isfinite(v)) for v in levels.values())
    return Outcome(levels, bool(finite), {"s": s, "theta": theta})


def _val_interpolation(spec):
    th = float(spec.params.get("theta", 0.5))
    _require(0 < th < 1, "interpolation requires 0 < theta < 1")
    _require(float(spec.params.get("s0", -1)) != float(spec.params.get("s1", 1)),
             "interpolation requires s0 != s1")


# ---------------------------------------------------------------------------
# scaling


def _band_limited_corpus(g: SpectralGrid, n: int, rng, limit: int) -> list[Field]:
    """Mean-free random fields with labels ``|n|_inf <= limit``."""
    keep = np.ones(g.shape, bool)
    for lab in g.label_mesh():
        keep &= np.abs(lab) <= limit
    out = []
    for _ in range(n):
        c = random_field(g, rng).spectral() * keep
        c[(g.half,) * g.d] = 0.0
        out.append(Field(g, "spectral", c))
    return out


def _scaling_sets(spec):
    return _exp_sets(spec, ("s", "p", "q"))


def _run_scaling_bound(spec: CheckSpec) -> Outcome:
    g = make_grid(spec.d, spec.ladder[0], spec.K)
    lams = [int(v) for v in spec.params.get("lambdas", (2, 4, 8))]
    fs = _band_limited_corpus(g, spec.trials, _rng(spec, 0), g.half // max(lams))
    levels = {}
    for lam in lams:
        rows = []
        for e in _scaling_sets(spec):
            rows += [dilation_norm_ratio(f, lam, e["s"], e["p"], e["q"]) for f in fs]
        levels[f"lambda={lam}"] = rows
    return Outcome(levels, True, {"note": "torus-normalised ratio lambda^(d/p)||f_lam||/||f||"})


def _run_scaling_small_o(spec: CheckSpec) -> Outcome:
    g = make_grid(spec.d, spec.ladder[0], spec.K)
    lams = [1] + [int(v) for v in spec.params.get("lambdas", (2, 4, 8))]
    fs = _band_limited_corpus(g, spec.trials, _rng(spec, 0), g.half // max(lams))
    levels = {f"lambda={lam}": [] for lam in lams}
    bad = 0
    for e in _scaling_sets(spec):
        for f in fs:
            seq = [dilation_norm_ratio(f, lam, e["s"], e["p"], e["q"]) for lam in lams]
            for lam, v in zip(lams, seq):
                levels[f"lambda={lam}"].append(v)
            bad += int(not all(b < a for a, b in zip(seq, seq[1:])))
    return Outcome(levels, bad == 0, {"non_decreasing_fields": bad}, trend_applies=False)


def _run_scaling_contract(spec: CheckSpec) -> Outcome:
    g = make_grid(spec.d, spec.ladder[0], spec.K)
    ns_ = [int(v) for v in spec.params.get("inverse_lambdas", (2, 4, 8))]
    top = max(ns_)
    base = _band_limited_corpus(g, spec.trials, _rng(spec, 0), g.half // top)
    fs = [scale_field(f, top) for f in base]  # every label divisible by top
    levels = {}
    for n in ns_:
        lam = 1.0 / n
        rows = []
        for e in _scaling_sets(spec):
            rows += [dilation_norm_ratio(f, lam, e["s"], e["p"], 1.0, s_ref=e["s"] * lam)
                     for f in fs]
        levels[f"lambda=1/{n}"] = rows
    return Outcome(levels, True, {})


def _val_scaling(spec):
    for e in spec.exponents:
        _require(float(e["s"]) < 0, "dilation estimates require s < 0")
        NormSpec("E", float(e["s"]), float(e["p"]), float(e["q"]))


def _val_scaling_small_o(spec):
    _val_scaling(spec)
    for e in spec.exponents:
        _require(float(e["p"]) < np.inf, "the little-o dilation bound requires p < inf")


# ---------------------------------------------------------------------------
# heat and Duhamel blocks


def _block_inputs(g: SpectralGrid, k, sym: np.ndarray, rng, n: int,
                  centre=None) -> list[np.ndarray]:
    """A single mode at the block centre plus ``n`` random block-limited spectra."""
    c = np.zeros(g.shape, complex)
    xi = tuple(float(v) for v in (k if centre is None else centre))
    c[g.index_of(xi)] = 1.0
    out = [c]
    for _ in range(n):
        out.append((rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)) * sym)
    return out


def _heat_decay(spec: CheckSpec) -> Outcome:
    levels, infs, oracle = {}, [], 0.0
    npts = int(spec.params.get("n_times", 33))
    for li, m in enumerate(spec.ladder):
        g = make_grid(spec.d, m, spec.K)
        rng = _rng(spec, li)
        flat = Field(g, "spectral", np.ones(g.shape, complex))
        fs = [flat] + [random_field(g, rng) for _ in range(spec.trials)]
        ks = []
        for n in range(1, g.K):
            ks.append((n,) + (0,) * (g.d - 1))
            ks.append((n,) * g.d)
            ks.append((-n,) + (n,) * (g.d - 1))
        rows = []
        for k in ks:
            kk = float(np.sum(np.square(k)))
            t = np.linspace(0.0, 1.0 / kk, npts)
            rows += [block_decay_fit(f, k, 2.0, t) for f in fs]
            # single mode oracles: slope is |xi|^2 / |k|^2 exactly
            for off in (0.0, 0.25):
                xi = tuple(v + off for v in k)
                pred = float(np.sum(np.square(xi))) / kk
                got = block_decay_fit(single_mode(g, xi), k, 2.0, t)
                oracle = max(oracle, abs(got - pred))
        levels[f"m={m}"] = rows
        infs.append(min(rows))
    stable = all(abs(b / a - 1) <= float(spec.params.get("inf_change", 0.10))
                 for a, b in zip(infs, infs[1:]))
    ok = all(v > 0 for v in infs) and stable and oracle <= 1e-10
    return Outcome(levels, bool(ok), {"inf_c": infs, "oracle_error": oracle},
                   trend_applies=False)


# k-sweeps asserted flat; the weighted analogues only report their slope
_FLAT_PREFIXES = ("C6.8", "C6.9", "C6.10", "C6.11")
_SLOPE_PREFIXES = _FLAT_PREFIXES + ("C10.4", "C10.8")


def _smoothing_runner(check_id: str):
    est = ESTIMATES[check_id]

    def run(spec: CheckSpec) -> Outcome:
        nt = int(spec.params.get("nt", 64))
        base = float(spec.params.get("base", 8.0))
        low_base = float(spec.params.get("low_base", 4.0))
        levels, slopes = {}, {}
        flat_check = check_id.startswith(_FLAT_PREFIXES)
        want_slope = check_id.startswith(_SLOPE_PREFIXES)
        for li, m in enumerate(spec.ladder):
            g = make_grid(spec.d, m, spec.K)
            w = cached_window(SMOOTH, g)
            rng = _rng(spec, li)
            zero = (0,) * g.d
            axis = [(n,) + (0,) * (g.d - 1) for n in range(1, g.K)]
            if est.blocks == "high":
                ks = axis
            elif est.blocks == "low":
                ks = [zero]
            elif est.blocks == "dyadic":
                dy = cached_window(DYADIC, g)
                ks = [(j,) for j in range(max(dy.j_range[0], 0), dy.j_range[1] + 1)
                      if 2.0**j <= g.K]
            else:
                ks = [zero] + axis
            rows = []
            per_k: dict = {}
            for ex in spec.exponents:
                for k in ks:
                    if est.blocks == "dyadic":
                        sym = cached_window(DYADIC, g).symbol(k)
                        centre = (2.0 ** k[0],) + (0.0,) * (g.d - 1)
                        T = base / 4.0 ** k[0]
                    else:
                        sym = w.symbol(k)
                        centre = k if any(k) else (1.0 / m,) + (0.0,) * (g.d - 1)
                        T = block_horizon(k, base) if any(k) else low_base * m**2
                    times = uniform_times(T, nt)
                    best = 0.0
                    for c in _block_inputs(g, k, sym, rng, spec.trials, centre):
                        if est.kind == "heat":
                            r = smoothing_ratio(check_id, Field(g, "spectral", c), ex, k, times)
                        else:
                            f = pulse_forcing(g, c[None], times, T / 8.0)
                            r = smoothing_ratio(check_id, f, ex, k)
                        rows.append(r.ratio)
                        best = max(best, r.ratio)
                    per_k.setdefault(_key(ex), {})[k] = best
            levels[f"m={m}"] = rows
            if want_slope:
                for key, byk in per_k.items():
                    hk = [(math.sqrt(sum(v * v for v in k)), r) for k, r in byk.items() if any(k)]
                    if len(hk) >= 2:
                        sl, _ = _slope(np.log([a for a, _ in hk]), np.log([b for _, b in hk]))
                        slopes[f"m={m};{key}"] = sl
        tol = float(spec.params.get("slope_tol", 0.1))
        finite = all(np.all(np.isfinite(v)) for v in levels.values())
        flat_ok = not flat_check or all(abs(v) <= tol for v in slopes.values())
        return Outcome(levels, bool(finite and flat_ok),
                       {"slopes": slopes, "slope_tol": tol if flat_check else None})

    return run


def _smoothing_validator(check_id: str):
    def v(spec: CheckSpec) -> None:
        if not spec.exponents:
            raise HypothesisError(f"{check_id} needs at least one exponent set")
        for ex in spec.exponents:
            validate_exponents(check_id, ex, spec.d)
    return v


_SMOOTHING_DEFAULTS = {
    "L6.4-dyadic-heat": ({"p": 2, "c": 0.2}, {"p": 4, "c": 0.2}),
    "L6.2-heat-time": ({"p": 2, "gamma": 2}, {"p": 4, "gamma": 1}, {"p": 2, "gamma": np.inf}),
    "L6.3-duhamel-time": ({"p": 2, "gamma": 2, "gamma1": 1}, {"p": 4, "gamma": np.inf, "gamma1": 2}),
    "L6.5-low-heat": ({"r": 2, "p": 4, "gamma": 2, "alpha": 1},
                      {"r": 2, "p": 3, "gamma": 4, "alpha": 0.5}),
    "L6.6-low-duhamel": ({"p1": 2, "p": 4, "gamma1": 1, "gamma": 2, "alpha": 1},),
    "C6.8-heat-L2": ({"r": 2, "p": 4},),
    "C6.8-heat-Linf": ({"r": 2}, {"r": 4}),
    "C6.9-grad-duhamel-L2": ({"p": 4},),
    "C6.9-grad-duhamel-Linf": ({"r": 2},),
    "C6.10-strichartz-like": ({},),
    "C6.10-grad-duhamel": ({},),
    "C6.10-heat-Linf": ({},),
    "C6.10-grad-duhamel-Linf": ({},),
    "C6.11-heat-Linf": ({"r": 2},),
    "C6.11-heat-L2": ({"r": 2, "p": 24},),
    "C6.11-grad-duhamel-L2": ({"r": 2, "p": 24, "p1": 12},),
    "C6.11-grad-duhamel-Linf": ({"r": 2, "r1": 1.5},),
    "L10.1-weighted-heat": ({"p": 2, "gamma": 2, "c": 0.5},),
    "L10.2-weighted-duhamel": ({"p": 2, "gamma": 2, "gamma1": 1, "c": 0.5},),
    "C10.4-weighted-strichartz": ({"c": 0.5},),
    "C10.4-weighted-grad-duhamel": ({"c": 0.5},),
    "C10.8-weighted-low-r": ({"r": 2, "p": 24, "c": 0.5},),
}

_THREE_D = ("C6.11-heat-Linf", "C6.11-heat-L2", "C6.11-grad-duhamel-L2",
            "C6.11-grad-duhamel-Linf", "C10.8-weighted-low-r")


# ---------------------------------------------------------------------------
# bilinear estimates


def _path_product(u: np.ndarray, v: np.ndarray, g: SpectralGrid) -> np.ndarray:
    return product_arrays(u, v, g, check_band=False)[0]


def _heat_path(c: np.ndarray, times, g: SpectralGrid) -> np.ndarray:
    return heat_evolve(c[None], times, g)[:, 0]


def _tn(path: np.ndarray, times, g, gamma, family, s, p, mode="fixed", c=0.0, q=2.0):
    spec = TimeNormSpec(gamma, NormSpec(family, s, p, 1.0, SMOOTH), mode, c)
    return timespace_norm(Trajectory(g, times, path[:, None]), spec, q)


def _run_modulation_bilinear(spec: CheckSpec) -> Outcome:
    levels = {}
    T = float(spec.params.get("T", 1.0))
    nt = int(spec.params.get("nt", 16))
    for li, m in enumerate(spec.ladder):
        g = make_grid(spec.d, m, spec.K)
        rng = _rng(spec, li)
        times = uniform_times(T, nt)
        low = np.ones(g.shape, bool)
        for xi in g.frequency_mesh():
            low &= np.abs(xi) <= g.K / 2
        rows = []
        for _ in range(spec.trials):
            u = _heat_path(random_field(g, rng).spectral() * low, times, g)
            v = _heat_path(random_field(g, rng).spectral() * low, times, g)
            uv = _path_product(u, v, g)
            for e in spec.exponents:
                num = _tn(uv, times, g, e["gamma"], "M", e["s"], e["p"])
                den = (_tn(u, times, g, e["gamma1"], "M", e["s"], e["p1"])
                       * _tn(v, times, g, e["gamma2"], "M", e["s"], e["p2"]))
                rows.append(num / den)
        levels[f"m={m}"] = rows
    return Outcome(levels, all(np.all(np.isfinite(v)) for v in levels.values()),
                   {"max_vs_unit_constant": max(max(v) for v in levels.values())})


def _val_holder(spec, need_s_nonneg: bool, open_p: bool):
    for e in spec.exponents:
        p, p1, p2 = float(e["p"]), float(e["p1"]), float(e["p2"])
        g, g1, g2 = float(e["gamma"]), float(e["gamma1"]), float(e["gamma2"])
        _require(abs(1 / p - 1 / p1 - 1 / p2) < 1e-12, "bilinear estimate requires 1/p = 1/p1 + 1/p2")
        _require(abs(1 / g - 1 / g1 - 1 / g2) < 1e-12,
                 "bilinear estimate requires 1/gamma = 1/gamma1 + 1/gamma2")
        if need_s_nonneg:
            _require(float(e["s"]) >= 0, "polynomial-weight algebra estimate requires s >= 0")
        if open_p:
            _require(all(1 < x < np.inf for x in (p, p1, p2)),
                     "bilinear estimate requires 1 < p, p1, p2 < inf")


def _octant_pairs(g: SpectralGrid, rng, n: int, times) -> list[tuple[np.ndarray, np.ndarray]]:
    """Random low-frequency octant pairs plus identical single-mode pairs near block edges."""
    mask = octant_mask(g)
    low = mask.copy()
    for xi in g.frequency_mesh():
        low &= np.abs(xi) <= g.K / 2
    pairs = []
    for _ in range(n):
        a = (rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)) * low
        b = (rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)) * low
        pairs.append((_heat_path(a, times, g), _heat_path(b, times, g)))
    lim = int(round(1.5 * g.m))
    for lab in itertools.product(range(0, lim + 1), repeat=g.d):
        c = np.zeros(g.shape, complex)
        c[tuple(g.half + x for x in lab)] = 1.0
        path = _heat_path(c, times, g)
        pairs.append((path, path))
    return pairs


def _bilinear_ratio_w(u, v, times, g, s, mode="fixed", c=0.0):
    d = g.d
    half, full = (d + 2) / 2, d + 2.0
    uv = _path_product(u, v, g)
    num = _tn(uv, times, g, half, "E", s, half, mode, c)
    den = (_tn(u, times, g, full, "E", s, full, mode, c)
           * _tn(v, times, g, full, "E", s, full, mode, c))
    return num / den if den > 0 else 0.0


def _run_octant_bilinear(spec: CheckSpec) -> Outcome:
    T = float(spec.params.get("T", 0.25))
    nt = int(spec.params.get("nt", 4))
    ss = [float(e["s"]) for e in spec.exponents]
    levels, fits = {}, {}
    ok = True
    for li, m in enumerate(spec.ladder):
        g = make_grid(spec.d, m, spec.K)
        times = uniform_times(T, nt)
        pairs = _octant_pairs(g, _rng(spec, li), spec.trials, times)
        consts = []
        rows = []
        for s in ss:
            rs = [_bilinear_ratio_w(u, v, times, g, s) for u, v in pairs]
            rows += rs
            consts.append(max(rs))
        slope, r2 = _slope([abs(s) for s in ss], np.log2(consts))
        fits[f"m={m}"] = {"log2_C": np.log2(consts).tolist(), "slope": slope, "r2": r2}
        ok &= slope > 0 and r2 >= float(spec.params.get("min_r2", 0.9))
        levels[f"m={m}"] = rows
    return Outcome(levels, bool(ok), {"fits": fits, "s": ss})


def _val_octant(spec):
    _require(len(spec.exponents) >= 2, "growth fit needs at least two values of s")
    for e in spec.exponents:
        _require(float(e["s"]) < 0, "octant bilinear estimate requires s < 0")


def _run_weighted_bilinear(spec: CheckSpec) -> Outcome:
    nt = int(spec.params.get("nt", 8))
    cw = float(spec.params.get("c", 0.5))
    levels = {}
    fits = {}
    for li, m in enumerate(spec.ladder):
        g = make_grid(spec.d, m, spec.K)
        rows = []
        consts = {}
        for T in spec.params.get("horizons", (0.25, 1.0)):
            times = uniform_times(float(T), nt)
            pairs = _octant_pairs(g, _rng(spec, li), spec.trials, times)
            for e in spec.exponents:
                rs = [_bilinear_ratio_w(u, v, times, g, float(e["s"]), "analytic", cw)
                      for u, v in pairs]
                rows += rs
                consts[f"T={T:g};s={e['s']:g}"] = max(rs)
        levels[f"m={m}"] = rows
        fits[f"m={m}"] = consts
    finite = all(np.all(np.isfinite(v)) for v in levels.values())
    return Outcome(levels, bool(finite), {"constants": fits, "c": cw})


# ---------------------------------------------------------------------------
# counterexample, solver, analyticity


def _run_counterexample(spec: CheckSpec) -> Outcome:
    ks = [tuple(k) for k in spec.params.get("ks", ((1, 1), (2, 2), (4, 4)))]
    levels, errs, growth_ok = {}, [], True
    for m in spec.ladder:
        g = make_grid(spec.d, m, spec.K)
        rows = []
        for e in spec.exponents:
            s = float(e["s"])
            rs = []
            for k in ks:
                k = k + (0,) * (g.d - len(k))
                r = counterexample_ratio(g, k, s, float(e.get("p", 2.0)))
                pred = 2.0 ** (-2 * s * sum(abs(v) for v in k))
                errs.append(abs(r / pred - 1))
                rs.append(r)
            l1 = [sum(abs(v) for v in k) for k in ks]
            need = 2.0 ** (1.8 * abs(s) * (l1[-1] - l1[0]))
            growth_ok &= rs[-1] / rs[0] >= need
            rows += rs
        levels[f"m={m}"] = rows
    ok = max(errs) <= float(spec.params.get("rel_tol", 0.10)) and growth_ok
    return Outcome(levels, bool(ok), {"max_rel_error": max(errs), "growth_ok": growth_ok})


def _val_counterexample(spec):
    for e in spec.exponents:
        _require(float(e["s"]) < 0, "the two-mode counterexample needs s < 0")
    for k in spec.params.get("ks", ((1, 1), (2, 2), (4, 4))):
        _require(max(abs(v) for v in k) <= spec.K, "counterexample modes must lie in the band")


def _solver_config(spec: CheckSpec, d=None, r=None, regime=OCTANT_E, nt=None) -> SolverConfig:
    P = spec.params
    return SolverConfig(regime, d or spec.d, float(r or P.get("r", spec.d)),
                        s=float(P.get("s", -1.0)), T=float(P.get("T", 1.0)),
                        nt=int(nt or P.get("nt", 64)), picard_tol=float(P.get("tol", 1e-8)),
                        max_iters=int(P.get("max_iters", 15)))


def _path_defects(traj) -> tuple[float, float]:
    octd = max(octant_defect(traj.coeffs[i], traj.grid) for i in range(traj.n_times))
    divd = max(divergence_defect((traj.coeffs[i], traj.grid)) for i in range(traj.n_times))
    return octd, divd


def _run_small_data(spec: CheckSpec) -> Outcome:
    P = spec.params
    levels, info = {}, {}
    ok = True
    for li, m in enumerate(spec.ladder):
        g = make_grid(spec.d, m, spec.K)
        cfg = _solver_config(spec)
        base = make_initial_data(P.get("kind", "random_octant"), g, s=cfg.s,
                                 seed=spec.seed + li, normalise=(cfg.s, cfg.r))

        def make(eps, base=base, g=g):
            return VectorField.from_spectral(g, eps * base.spectral(), True)

        zero_traj, _ = picard_solve(make(0.0), cfg)
        zero_exact = bool(np.all(zero_traj.coeffs == 0))
        t0 = time.perf_counter()
        res = bisect_epsilon(make, cfg, hi=float(P.get("eps_start", 1.0)),
                             steps=int(P.get("bisect_steps", 5)))
        t_bisect = time.perf_counter() - t0
        t0 = time.perf_counter()
        traj, diag = picard_solve(make(res.eps), cfg)
        t_solve = time.perf_counter() - t0
        octd, divd = _path_defects(traj)
        lvl_ok = (zero_exact and res.eps > 0 and diag.converged and diag.final_ratio < 0.9
                  and diag.iterations <= 15 and diag.residual <= 10 * cfg.picard_tol
                  and octd <= 1e-9 and divd <= 1e-9)
        ok &= lvl_ok
        levels[f"m={m}"] = list(diag.ratios)
        info[f"m={m}"] = {"eps": res.eps, "iterations": diag.iterations,
                          "final_ratio": diag.final_ratio, "residual": diag.residual,
                          "octant_defect": octd, "div_defect": divd, "zero_exact": zero_exact,
                          "solve_seconds": t_solve, "bisect_seconds": t_bisect,
                          "config": cfg.to_dict()}
    return Outcome(levels, bool(ok), info, trend_applies=False)


def _val_octant_solver(spec):
    for m in spec.ladder:
        _solver_config(spec)


def _run_scaled(spec: CheckSpec) -> Outcome:
    """Dilated solve mapped back: convergence, covariance and ``s0 = s lam``.

    Data live on ``|n|_inf <= half/lam`` and ``|xi|_1 >= min_l1``.  The
    unscaled path must satisfy the mild equation with the nonlinearity cut to
    the same band, which is exactly what the dilated Galerkin solve computes.
    """
    P = spec.params
    lam = int(P.get("lambda", 2))
    amp = float(P.get("amplitude", 8.0))
    levels, info = {}, {}
    ok = True
    for li, m in enumerate(spec.ladder):
        g = make_grid(spec.d, m, spec.K)
        cfg = _solver_config(spec)
        keep = g.xi_l1() >= float(P.get("min_l1", 1.0))
        for lab in g.label_mesh():
            keep &= np.abs(lab) <= g.half // lam
        u = make_initial_data("random_octant", g, s=cfg.s, seed=spec.seed + li, decay=0.0)
        c = leray_array(u.spectral() * keep, g)
        c = c / e_norm(VectorField.from_spectral(g, c, True), cfg.s, cfg.r, 1)
        u0 = VectorField.from_spectral(g, amp * c, True)
        out = scaled_solve(u0, cfg, lam)
        big = replace(cfg, T=cfg.T * lam**2)
        resid = mild_residual(out.unscaled, u0.spectral(), big, band_limit=g.half // lam)
        start_err = float(np.max(np.abs(out.unscaled.coeffs[0] - u0.spectral())))
        d = out.diagnostics
        lvl_ok = (d.converged and d.final_ratio < 0.9 and resid <= 10 * cfg.picard_tol
                  and abs(out.s0 - cfg.s * lam) < 1e-15 and start_err <= 1e-12)
        ok &= lvl_ok
        levels[f"m={m}"] = list(d.ratios)
        info[f"m={m}"] = {"lambda": lam, "s0": out.s0, "amplitude": amp,
                          "iterations": d.iterations, "final_ratio": d.final_ratio,
                          "unscaled_residual": resid, "initial_state_error": start_err,
                          "notes": list(d.notes)}
    return Outcome(levels, bool(ok), info, trend_applies=False)


def _run_mdot_small(spec: CheckSpec) -> Outcome:
    P = spec.params
    cases = P.get("cases", ((2, 2.0, 4, 4), (3, 3.0, 4, 2)))  # (d, r, m, K)
    factor = float(P.get("factor", 3.0))
    levels, info = {}, {}
    ok = True
    for ci, (d, r, m, K) in enumerate(cases):
        g = make_grid(int(d), int(m), int(K))
        nt = int(P.get("nt", 64)) if d == 2 else int(P.get("nt_3d", 32))
        cfg = _solver_config(spec, d=int(d), r=float(r), regime=SMALL_MDOT, nt=nt)
        base = make_initial_data("random_full", g, s=-1.0, seed=spec.seed + ci,
                                 normalise=(-1.0, float(r)))

        def make(eps, base=base, g=g):
            return VectorField.from_spectral(g, eps * base.spectral(), True)

        res = bisect_epsilon(make, cfg, hi=float(P.get("eps_start", 1.0)),
                             steps=int(P.get("bisect_steps", 2)),
                             max_doublings=int(P.get("max_doublings", 2)))
        traj = res.trajectory
        u0n = mdot_norm(make(res.eps), -1.0, float(r), 1.0)
        sup = max(mdot_norm(traj.state(i), -1.0, float(r), 1.0) for i in range(traj.n_times))
        ratio = sup / u0n if u0n > 0 else float("nan")
        case_ok = res.eps > 0 and res.diagnostics.converged and ratio <= factor
        ok &= case_ok
        label = f"d={d},r={r:g}"
        levels[label] = [ratio]
        info[label] = {"eps": res.eps, "sup_over_initial": ratio, "iterations":
                       res.diagnostics.iterations, "final_ratio": res.diagnostics.final_ratio,
                       "boundary_case": float(r) == float(d)}
    return Outcome(levels, bool(ok), info, trend_applies=False)


def _val_mdot_small(spec):
    for d, r, m, K in spec.params.get("cases", ((2, 2.0, 4, 4), (3, 3.0, 4, 2))):
        _solver_config(spec, d=int(d), r=float(r), regime=SMALL_MDOT)


def _run_analyticity(spec: CheckSpec) -> Outcome:
    P = spec.params
    m = spec.ladder[0]
    g = make_grid(spec.d, m, spec.K)
    amp = float(P.get("amplitude", 0.5))
    levels, info = {}, {}
    crossings = []
    ok = True
    for nt in P.get("nts", (64, 128)):
        cfg = _solver_config(spec, nt=int(nt))
        u = make_initial_data("exp_weight_octant", g, s=cfg.s, normalise=(cfg.s, cfg.r))
        u0 = VectorField.from_spectral(g, amp * u.spectral(), True)
        traj, diag = picard_solve(u0, cfg)
        rad = radius_history(traj)
        mono = bool(np.all(np.diff(rad) >= -1e-9))
        c_fit = analytic_rate(traj.times, rad)
        cross = radius_crossing_time(traj.times, rad)
        crossings.append(cross)
        ok &= diag.converged and mono and c_fit > 0
        levels[f"nt={nt}"] = rad.tolist()
        info[f"nt={nt}"] = {"monotone": mono, "c_fit": c_fit, "crossing_time": cross,
                            "radius0": float(rad[0]), "converged": diag.converged}
    stable = (all(np.isfinite(crossings))
              and all(abs(b / a - 1) <= float(P.get("crossing_tol", 0.30))
                      for a, b in zip(crossings, crossings[1:])))
    info["crossing_stable"] = bool(stable)
    return Outcome(levels, bool(ok and stable), info, trend_applies=False)


# ---------------------------------------------------------------------------
# registry


def _entry(check_id, statement, runner, validate=None, predicts_growth=False,
           torus_limited=False, **defaults) -> CheckEntry:
    spec = CheckSpec(check_id, **defaults)
    return CheckEntry(check_id, statement, runner, spec, validate or (lambda s: None),
                      predicts_growth, torus_limited)


_SPQ = _grid_sets

REGISTRY: dict[str, CheckEntry] = {}


def _register(e: CheckEntry) -> None:
    REGISTRY[e.check_id] = e


_register(_entry(
    "P4.1-hybrid-equiv",
    "||f||_{Mdot^s_{p,q}} (square-function low part + <k>^s high blocks) ~ "
    "||{||(-Lap)^(s/2) B_k f||_p}||_{l^q}, 1 < p < inf",
    _run_hybrid, _val_hybrid, exponents=_SPQ(s=(-1.0, 0.5), p=(2.0, 4.0), q=(1.0, 2.0))))
_register(_entry(
    "P5.1-stft-equiv",
    "||f||_{E^s_{p,q}} ~ || 2^(s|xi|) ||V_g f(., xi)||_p ||_{L^q_xi}",
    _run_stft, _val_stft, trials=8, ladder=(4,),
    exponents=_SPQ(s=(-1.0, 0.0, 0.5), p=(1.0, 2.0, np.inf), q=(1.0, 2.0, np.inf)),
    params={"lattices": ((1.0, 1.0), (0.5, 0.5))}))
_register(_entry(
    "P5.2-decomposition",
    "||f||_{E^s_{p,q}} <~ ||{2^(s|k|) f_k}||_{l^q(L^p)} for f = sum f_k, "
    "supp f_k^ in k + [-3/2, 3/2]^d, s <= 0",
    _run_decomposition, _val_decomposition,
    exponents=_SPQ(s=(-1.0, 0.0), p=(1.0, 2.0, np.inf), q=(1.0, 2.0))))
_register(_entry(
    "P5.4-norm-equiv",
    "smooth-window and sharp-cube E^s_{p,q} norms are equivalent, 1 < p, q < inf",
    _run_sharp_smooth, _val_sharp_smooth,
    exponents=_SPQ(s=(-1.0, 0.0, 0.5), p=(1.5, 2.0, 4.0), q=(1.5, 2.0, 4.0))))
_register(_entry(
    "P5.5-dilated-equiv",
    "windows sigma(xi/alpha - k) with weights 2^(s alpha|k|) give equivalent E^s_{p,q} norms, "
    "s <= 0, alpha > 0",
    _run_dilated, _val_dilated, ladder=(8, 16), trials=30,
    exponents=_SPQ(s=(-1.0, 0.0), p=(1.0, 2.0, np.inf), q=(1.0, 2.0, np.inf)),
    params={"alphas": (0.5, 1.0, 2.0)}))
_register(_entry(
    "P5.8-besov-embedding",
    "||f||_{E^{s1}_{p1,q1}} <~ ||f||_{B^{s0}_{p0,q0}}, s1 < 0, p0 <= p1",
    _run_embedding, _val_embedding,
    params={"s1": -1.0, "p1": 4.0, "q1": 1.0, "s0": 0.0, "p0": 2.0, "q0": np.inf}))
_register(_entry(
    "P5.9-q-monotonicity",
    "||f||_{E^s_{p,q2}} <= ||f||_{E^s_{p,q1}} for q1 <= q2",
    _run_q_monotone, exponents=_SPQ(s=(-1.0, 0.0, 0.5), p=(1.0, 2.0, np.inf)),
    params={"qs": (1.0, 1.5, 2.0, 4.0, np.inf), "ulp_slack": 1e-12}))
_register(_entry(
    "P5.9-plancherel",
    "||2^(s|xi|) f^||_2 ~ ||f||_{E^s_{2,2}}",
    _run_plancherel, exponents=_SPQ(s=(-1.0, -0.5, 0.0, 0.5))))
_register(_entry(
    "P8.1-scaling-bound",
    "||f(lam .)||_{E^s_{p,q}} <~ lam^(-d/p) ||f||_{E^s_{p,q}} uniformly in lam > 1, s < 0",
    _run_scaling_bound, _val_scaling, trials=20, ladder=(4,), K=8,
    exponents=_SPQ(s=(-1.0,), p=(1.0, 2.0), q=(1.0,)), params={"lambdas": (2, 4, 8)}))
_register(_entry(
    "P8.2-scaling-small-o",
    "lam^(d/p) ||f(lam .)||_{E^s_{p,q}} -> 0 as lam -> inf, s < 0, p < inf",
    _run_scaling_small_o, _val_scaling_small_o, trials=20, ladder=(4,), K=8,
    exponents=_SPQ(s=(-1.0,), p=(1.0, 2.0), q=(1.0,)), params={"lambdas": (2, 4, 8)}))
_register(_entry(
    "P8.3-scaling-contract",
    "||f(lam .)||_{E^s_{p,1}} <~ lam^(-d/p) ||f||_{E^(s lam)_{p,1}} for lam < 1, s < 0",
    _run_scaling_contract, _val_scaling, trials=20, ladder=(4,), K=8,
    exponents=_SPQ(s=(-1.0,), p=(1.0, 2.0), q=(1.0,)),
    params={"inverse_lambdas": (2, 4, 8)}))
_register(_entry(
    "P-A2-gabor",
    "||f||_{M^s_{p,q}} ~ ||{<m>^s ||<f, M_m T_l g>||_{l^p_l}}||_{l^q_m}, 1 <= p, q < inf",
    _run_gabor, _val_gabor, exponents=_SPQ(s=(0.0, 1.0), p=(1.0, 2.0), q=(1.0, 2.0))))
_register(_entry(
    "P-A3-gevrey",
    "||d^a f||_p rho^|a| / a! bounded for f in E^s, s > 0; unbounded for heavy tails",
    _run_gevrey, _val_gevrey, ladder=(8, 16, 32),
    params={"rho": 0.25, "order": 12, "p": 2.0, "s_light": 0.5, "s_heavy": -0.5, "m": 4,
            "heavy_growth": 10.0}))
_register(_entry(
    "L6.1-heat-decay",
    "||B_k H(t) u0||_p <~ exp(-c t |k|^2) ||B_k u0||_p, |k|_inf >= 1",
    _heat_decay, trials=3))
for _cid, _sets in _SMOOTHING_DEFAULTS.items():
    _three = _cid in _THREE_D
    _register(_entry(
        _cid, ESTIMATES[_cid].statement, _smoothing_runner(_cid), _smoothing_validator(_cid),
        torus_limited=ESTIMATES[_cid].blocks == "low", trials=2 if _three else 3,
        d=3 if _three else 2, K=4 if _three else 8, ladder=(4,) if _three else (4, 8),
        exponents=tuple(dict(s) for s in _sets),
        params={"nt": 32} if _three else {}))
_register(_entry(
    "L7.1-bilinear-modulation",
    "||u1 u2||_{L~^g M^s_{p,1}} <= ||u1||_{L~^g1 M^s_{p1,1}} ||u2||_{L~^g2 M^s_{p2,1}}, s >= 0",
    _run_modulation_bilinear, lambda s: _val_holder(s, True, False), trials=4,
    exponents=tuple({"s": s, "p": 2.0, "p1": 4.0, "p2": 4.0, "gamma": 2.0, "gamma1": 4.0,
                     "gamma2": 4.0} for s in (0.0, 1.0))))
_register(_entry(
    "L9.1-bilinear-octant",
    "||uv||_{L~^((d+2)/2) E^s_{(d+2)/2,1}} <~ 2^(C|s|) ||u|| ||v|| in L~^(d+2) E^s_{d+2,1}, "
    "octant support, s < 0",
    _run_octant_bilinear, _val_octant, trials=4, ladder=(4, 8),
    exponents=({"s": -2.0}, {"s": -1.0}, {"s": -0.5})))
_register(_entry(
    "L10.3-weighted-bilinear",
    "the octant bilinear bound with weights 2^((s + c sqrt(t))|k|) holds with constant "
    "2^(C(|s| + c sqrt(T)))",
    _run_weighted_bilinear, _val_octant, trials=2, ladder=(4,),
    exponents=({"s": -1.0}, {"s": -0.5}), params={"c": 0.5, "horizons": (0.25, 1.0)}))
_register(_entry(
    "S9-counterexample",
    "without the octant condition ||uv||_{E^s_{p,1}} / (||u|| ||v||) = 2^(-2s|k|) is unbounded",
    _run_counterexample, _val_counterexample, predicts_growth=True, ladder=(4, 8),
    exponents=({"s": -1.0, "p": 2.0}, {"s": -0.5, "p": 2.0}),
    params={"ks": ((1, 1), (2, 2), (4, 4)), "rel_tol": 0.10}))
_register(_entry(
    "T1.1-small-data",
    "small octant data in E^s_{r,1} give a global mild solution by contraction",
    _run_small_data, _val_octant_solver, ladder=(4,),
    params={"r": 2.0, "s": -1.0, "T": 1.0, "nt": 64, "bisect_steps": 4}))
_register(_entry(
    "T1.1-scaled",
    "large octant data solved after dilation: u_lam0 = lam u0(lam .) with s0 = s lam",
    _run_scaled, _val_octant_solver, ladder=(4,),
    params={"r": 2.0, "s": -1.0, "T": 1.0, "nt": 64, "lambda": 2, "amplitude": 8.0,
            "min_l1": 1.0}))
_register(_entry(
    "T1.2-small-data",
    "small data in Mdot^-1_{r,1} (d <= r) give solutions with sup_t ||u(t)|| <~ ||u0||",
    _run_mdot_small, _val_mdot_small,
    params={"cases": ((2, 2.0, 4, 4), (3, 3.0, 4, 2)), "nt": 64, "nt_3d": 32,
            "factor": 3.0, "bisect_steps": 2, "max_doublings": 2}))
_register(_entry(
    "S10-analyticity",
    "the analyticity radius of an octant solution grows at least like s + c sqrt(t)",
    _run_analyticity, _val_octant_solver, ladder=(4,),
    params={"r": 2.0, "s": -1.0, "T": 1.0, "nts": (64, 128), "amplitude": 0.5}))
_register(_entry(
    "B-bernstein",
    "||m(D) f||_p <= ||F^-1 m||_1 ||f||_p for the block multipliers",
    _run_bernstein, trials=4))
_register(_entry(
    "GN-interpolation",
    "||f||_{Bdot^s_{p,1}} <~ ||f||^(1-t)_{Bdot^s0_{p,inf}} ||f||^t_{Bdot^s1_{p,inf}}, "
    "s = (1-t)s0 + t s1",
    _run_interpolation, _val_interpolation, torus_limited=True,
    params={"s0": -1.0, "s1": 1.0, "theta": 0.5, "ps": (2.0, 4.0)}))


# ---------------------------------------------------------------------------
# running


def _stats(vals: np.ndarray) -> dict:
    vals = vals[np.isfinite(vals)] if vals.size else vals
    if vals.size == 0:
        return {"n": 0, "max": float("nan"), "median": float("nan"), "p95": float("nan")}
    return {"n": int(vals.size), "max": float(np.max(vals)), "median": float(np.median(vals)),
            "p95": float(np.percentile(vals, 95))}


def resolve_spec(check_id: str, spec: CheckSpec | None = None, **overrides) -> CheckSpec:
    """Registered defaults for ``check_id`` with ``overrides`` applied."""
    if check_id not in REGISTRY:
        raise KeyError(f"unknown check id {check_id!r}")
    base = spec if spec is not None else REGISTRY[check_id].defaults
    return base.with_(**overrides) if overrides else base


def run_check(check_id: str, spec: CheckSpec | None = None, **overrides) -> CheckReport:
    """Run one registered check.

    Raises
    ------
    KeyError
        For an unregistered id.
    HypothesisError
        When the exponent sets or parameters violate the hypothesis of the
        estimate; raised before any trial is run.
    """
    entry = REGISTRY.get(check_id)
    if entry is None:
        raise KeyError(f"unknown check id {check_id!r}")
    spec = resolve_spec(check_id, spec, **overrides)
    if spec.check_id != check_id:
        spec = spec.with_(check_id=check_id)
    entry.validate(spec)
    t0 = time.perf_counter()
    out = entry.runner(spec)
    elapsed = time.perf_counter() - t0
    maxima = [max(v) if len(v) else float("nan") for v in out.levels.values()]
    trend = [b / a - 1 if a > 0 else float("inf") for a, b in zip(maxima, maxima[1:])]
    trend_ok = (entry.predicts_growth or not out.trend_applies
                or all(t <= spec.tolerance for t in trend))
    if out.passed and trend_ok:
        verdict = PASS
    elif entry.torus_limited:
        verdict = INCONCLUSIVE
    else:
        verdict = FAIL
    details = dict(out.details)
    details["level_max"] = dict(zip(out.levels.keys(), maxima))
    details["criterion_met"] = bool(out.passed)
    details["trend_ok"] = bool(trend_ok)
    vals = np.asarray([v for lv in out.levels.values() for v in lv], dtype=float)
    return CheckReport(check_id, entry.statement, {k: list(map(float, v)) for k, v in out.levels.items()},
                       _stats(vals), trend, verdict, spec.seed, spec.config_hash(),
                       details=_jsonable(details), elapsed=elapsed, spec=_jsonable(spec.to_dict()))


@dataclass
class SuiteResult:
    reports: list
    errors: dict

    def rows(self) -> list[dict]:
        out = []
        for r in self.reports:
            out.append({"id": r.check_id, "verdict": r.verdict, "n": r.stats.get("n", 0),
                        "max": r.stats.get("max"), "median": r.stats.get("median"),
                        "p95": r.stats.get("p95"), "seed": r.seed, "config_hash": r.config_hash,
                        "seconds": round(r.elapsed, 3)})
        for cid, msg in self.errors.items():
            out.append({"id": cid, "verdict": ERROR, "n": 0, "max": None, "median": None,
                        "p95": None, "seed": None, "config_hash": None, "seconds": None,
                        "error": msg})
        return out


def run_suite(ids="all", overrides: Mapping[str, Mapping] | None = None,
              workers: int = 1, common: Mapping | None = None) -> SuiteResult:
    """Run several checks in registry order.

    ``ids`` is ``"all"`` or an iterable of ids (duplicates are dropped).
    ``overrides`` maps an id to spec overrides; ``common`` applies to all.
    Failures of one check are recorded in ``errors`` without stopping the
    others.  With ``workers > 1`` checks run on a thread pool; the results
    are merged back in registry order.
    """
    if isinstance(ids, str):
        ids = list(REGISTRY) if ids == "all" else [ids]
    seen = []
    for cid in ids:
        if cid not in seen:
            seen.append(cid)
    order = {cid: i for i, cid in enumerate(REGISTRY)}
    seen.sort(key=lambda c: order.get(c, len(order)))
    overrides = overrides or {}

    def one(cid):
        try:
            kw = {**dict(common or {}), **dict(overrides.get(cid, {}))}
            return cid, run_check(cid, **kw), None
        except Exception as exc:  # recorded, the suite carries on
            return cid, None, f"{type(exc).__name__}: {exc}"

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, seen))
    else:
        results = [one(c) for c in seen]
    reports = [r for _, r, e in results if r is not None]
    errors = {c: e for c, _, e in results if e is not None}
    return SuiteResult(reports, errors)


# ---------------------------------------------------------------------------
# output


def write_json(result: SuiteResult | CheckReport, path: str | Path) -> Path:
    path = Path(path)
    if isinstance(result, CheckReport):
        payload = {"policy": POLICY, "report": result.to_dict()}
    else:
        payload = {"policy": POLICY, "reports": [r.to_dict() for r in result.reports],
                   "errors": result.errors}
    path.write_text(json.dumps(payload, indent=2, sort_keys=True))
    return path


def write_csv(result: SuiteResult, path: str | Path) -> Path:
    path = Path(path)
    cols = ["id", "verdict", "n", "max", "median", "p95", "seed", "config_hash", "seconds",
            "error"]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        for row in result.rows():
            w.writerow({c: ("" if row.get(c) is None else row.get(c)) for c in cols})
    return path


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.4g}"
    return str(v)


def markdown_summary(result: SuiteResult) -> str:
    lines = [f"_{POLICY}_", "", "| id | verdict | n | max | median | p95 | seconds |",
             "|---|---|---|---|---|---|---|"]
    for row in result.rows():
        lines.append("| " + " | ".join(_fmt(row.get(c)) for c in
                                        ("id", "verdict", "n", "max", "median", "p95",
                                         "seconds")) + " |")
    return "\n".join(lines) + "\n"


def write_markdown(result: SuiteResult, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(markdown_summary(result))
    return path
