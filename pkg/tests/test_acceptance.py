"""Acceptance suite: one test per criterion, each recording a pass/fail line.

Thresholds are the published tolerances; nothing is loosened here.  Heavy
criteria are marked ``slow`` (deselect with ``-m "not slow"``).
"""

import time

import numpy as np
import pytest

from modns.decomp import DYADIC, SHARP, SMOOTH, make_window, reconstruction_error
from modns.grid import lp_norm, make_grid, random_field
from modns.heat import ESTIMATES
from modns.verify import PASS, resolve_spec, run_check

BAND_TOL = 0.25


def test_reconstruction_and_plancherel(criterion_line):
    g = make_grid(2, 8, 8)
    wins = [make_window(k, g) for k in (SMOOTH, SHARP, DYADIC)]
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst_rec = worst_pl = 0.0
    for _ in range(100):
        f = random_field(g, rng, decay=float(rng.uniform(0, 1)))
        worst_rec = max(worst_rec, *(reconstruction_error(f, w) for w in wins))
        spectral = np.sqrt(np.sum(np.abs(f.spectral()) ** 2))
        worst_pl = max(worst_pl, abs(lp_norm(f, 2) - spectral) / spectral)
    elapsed = time.perf_counter() - t0
    ok = worst_rec <= 1e-10 and worst_pl <= 1e-10 and elapsed < 10
    criterion_line(1, ok, f"reconstruction {worst_rec:.1e}, plancherel {worst_pl:.1e}, "
                          f"{elapsed:.1f}s for 100 fields")
    assert ok


@pytest.mark.slow
def test_norm_equivalences(criterion_line):
    smooth_sharp = run_check("P5.4-norm-equiv", trials=50)
    dilated = run_check("P5.5-dilated-equiv", trials=50)
    mono = run_check("P5.9-q-monotonicity", trials=50)
    c1 = smooth_sharp.details["worst_band_change"]
    c2 = dilated.details["worst_band_change"]
    viol = mono.details["violations"]
    ok = (c1 <= BAND_TOL and c2 <= BAND_TOL and viol == 0
          and smooth_sharp.verdict == dilated.verdict == mono.verdict == PASS)
    criterion_line(2, ok, f"smooth/sharp band change {c1:.3f}, dilated {c2:.3f}, "
                          f"q-monotonicity violations {viol}")
    assert ok


def test_stft_equivalence(criterion_line):
    spec = resolve_spec("P5.1-stft-equiv")
    rep = run_check("P5.1-stft-equiv", spec)
    exps = {(e["s"], e["p"], e["q"]) for e in spec.exponents}
    grid_ok = exps == {(s, p, q) for s in (-1.0, 0.0, 0.5) for p in (1.0, 2.0, np.inf)
                       for q in (1.0, 2.0, np.inf)}
    change = rep.details["worst_band_change"]
    ok = grid_ok and change <= BAND_TOL and rep.verdict == PASS
    criterion_line(3, ok, f"band change {change:.3f} across lattices {list(rep.ratios)}")
    assert ok


def test_besov_embedding(criterion_line):
    rep = run_check("P5.8-besov-embedding")
    d = rep.details
    ok = d["worst"] <= 1.25 * d["ladder0_constant"] and rep.verdict == PASS
    criterion_line(4, ok, f"worst {d['worst']:.3f} vs 1.25 x ladder-0 constant "
                          f"{d['ladder0_constant']:.3f}")
    assert ok


def test_heat_decay(criterion_line):
    rep = run_check("L6.1-heat-decay")
    inf_c = rep.details["inf_c"]
    spread = max(abs(b / a - 1) for a, b in zip(inf_c, inf_c[1:]))
    oracle = rep.details["oracle_error"]
    ok = min(inf_c) > 0 and spread <= 0.10 and oracle <= 1e-10
    criterion_line(5, ok, f"inf c_fit {[round(c, 4) for c in inf_c]}, change {spread:.3f}, "
                          f"oracle error {oracle:.1e}")
    assert ok


@pytest.mark.slow
def test_block_bounds_flat_in_k(criterion_line):
    ids = [c for c in ESTIMATES if c.startswith(("C6.8", "C6.9", "C6.10", "C6.11"))]
    slopes, bad = {}, []
    for cid in ids:
        rep = run_check(cid)
        worst = max(rep.details["slopes"].values(), key=abs)
        slopes[cid] = worst
        if abs(worst) > 0.1:
            bad.append(f"{cid} {worst:+.3f}")
    ok = not bad
    detail = f"{len(ids) - len(bad)}/{len(ids)} estimates with |slope| <= 0.1"
    if bad:
        detail += "; outside: " + ", ".join(bad)
    criterion_line(6, ok, detail)
    assert ok, detail


def test_bilinear_octant_growth(criterion_line):
    rep = run_check("L9.1-bilinear-octant")
    fits = rep.details["fits"]
    assert rep.spec["exponents"] == [{"s": -2.0}, {"s": -1.0}, {"s": -0.5}]
    ok = all(f["slope"] > 0 and f["r2"] >= 0.9 for f in fits.values())
    criterion_line(7, ok, "; ".join(f"{k}: slope {f['slope']:.2f}, R2 {f['r2']:.4f}"
                                    for k, f in fits.items()))
    assert ok


def test_counterexample(criterion_line):
    rep = run_check("S9-counterexample")
    ks = [sum(abs(v) for v in k) for k in rep.spec["params"]["ks"]]
    err = rep.details["max_rel_error"]
    ok = sorted(ks) == [2, 4, 8] and err <= 0.10
    criterion_line(8, ok, f"|k| in {ks}, max relative error {err:.1e}")
    assert ok


@pytest.mark.slow
def test_picard_solver(criterion_line):
    t0 = time.perf_counter()
    rep = run_check("T1.1-small-data", ladder=(8,), K=8)
    elapsed = time.perf_counter() - t0
    d = rep.details["m=8"]
    cfg = d["config"]
    setup_ok = (cfg["d"], cfg["nt"], cfg["T"]) == (2, 64, 1.0) and rep.spec["K"] == 8
    ok = (setup_ok and d["zero_exact"] and d["final_ratio"] < 0.9 and d["iterations"] <= 15
          and d["residual"] <= 10 * cfg["picard_tol"]
          and d["octant_defect"] <= 1e-9 and d["div_defect"] <= 1e-9 and elapsed < 300)
    criterion_line(9, ok, f"eps {d['eps']}, {d['iterations']} iterations, ratio "
                          f"{d['final_ratio']:.3f}, residual {d['residual']:.1e}, defects "
                          f"{d['octant_defect']:.0e}/{d['div_defect']:.0e}, {elapsed:.0f}s")
    assert ok


def test_scaling(criterion_line):
    reps = [run_check(c, trials=20) for c in
            ("P8.1-scaling-bound", "P8.2-scaling-small-o", "P8.3-scaling-contract")]
    ok = all(r.verdict == PASS for r in reps)
    criterion_line(10, ok, ", ".join(f"{r.check_id} {r.verdict} (n={r.stats['n']})"
                                     for r in reps))
    assert ok


def test_analyticity(criterion_line):
    rep = run_check("S10-analyticity")
    runs = [rep.details["nt=64"], rep.details["nt=128"]]
    times = [r["crossing_time"] for r in runs]
    spread = abs(times[1] / times[0] - 1)
    ok = (all(r["monotone"] and r["c_fit"] > 0 and r["converged"] for r in runs)
          and spread <= 0.30)
    criterion_line(11, ok, f"c_fit {[round(r['c_fit'], 3) for r in runs]}, crossing "
                           f"{[round(t, 4) for t in times]} (change {spread:.1e})")
    assert ok


def test_gevrey(criterion_line):
    rep = run_check("P-A3-gevrey")
    d = rep.details
    heavy = d["heavy_at_order"]
    ok = (rep.spec["params"]["order"] == 12 and rep.verdict == PASS
          and max(d["light_sup"]) <= d["light_bound"] and heavy[-1] > 1e3 * heavy[0])
    criterion_line(12, ok, f"light sup {max(d['light_sup']):.3f} at rho {d['rho']}, heavy "
                           f"ratio at order 12 {[f'{h:.2g}' for h in heavy]}")
    assert ok


@pytest.mark.slow
def test_small_data_hybrid(criterion_line):
    rep = run_check("T1.2-small-data")
    cases = {k: v for k, v in rep.details.items() if k.startswith("d=")}
    ok = set(cases) == {"d=2,r=2", "d=3,r=3"} and all(
        c["sup_over_initial"] <= 3.0 for c in cases.values())
    criterion_line(13, ok, ", ".join(f"{k}: sup/initial {c['sup_over_initial']:.3f} "
                                     f"at eps {c['eps']}" for k, c in cases.items()))
    assert ok
