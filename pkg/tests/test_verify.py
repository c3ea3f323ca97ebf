import csv
import json

import pytest

from modns.grid import HypothesisError
from modns.heat import ESTIMATES
from modns.verify import (
    ERROR, FAIL, INCONCLUSIVE, PASS, POLICY, REGISTRY, CheckEntry, CheckSpec, Outcome,
    markdown_summary, resolve_spec, run_check, run_suite, write_csv, write_json,
)


def _entry(levels, passed=True, growth=False, torus=False, trend_applies=True):
    def runner(spec):
        return Outcome(levels, passed, {"note": 1}, trend_applies)
    return CheckEntry("fake", "a <= C b", runner, CheckSpec("fake"), predicts_growth=growth,
                      torus_limited=torus)


@pytest.fixture
def fake(monkeypatch):
    def install(entry):
        monkeypatch.setitem(REGISTRY, "fake", entry)
    return install


class TestVerdictRule:
    @pytest.mark.parametrize("levels,passed,growth,torus,applies,verdict", [
        ({"m=4": [1.0], "m=8": [1.2]}, True, False, False, True, PASS),
        ({"m=4": [1.0], "m=8": [1.3]}, True, False, False, True, FAIL),
        ({"m=4": [1.0], "m=8": [2.0]}, True, True, False, True, PASS),
        ({"m=4": [1.0], "m=8": [2.0]}, True, False, False, False, PASS),
        ({"m=4": [1.0], "m=8": [1.0]}, False, False, False, True, FAIL),
        ({"m=4": [1.0], "m=8": [1.0]}, False, False, True, True, INCONCLUSIVE),
        ({"m=4": [1.0], "m=8": [0.5]}, True, False, False, True, PASS),
    ])
    def test_table(self, fake, levels, passed, growth, torus, applies, verdict):
        fake(_entry(levels, passed, growth, torus, applies))
        rep = run_check("fake")
        assert rep.verdict == verdict
        assert rep.policy == POLICY

    def test_report_fields(self, fake):
        fake(_entry({"m=4": [0.5, 1.0], "m=8": [1.1]}))
        rep = run_check("fake")
        assert rep.stats["n"] == 3 and rep.stats["max"] == 1.1
        assert rep.trend == [pytest.approx(0.1)]
        assert rep.details["level_max"] == {"m=4": 1.0, "m=8": 1.1}
        assert rep.details["note"] == 1

    def test_suite_records_errors(self, fake):
        def boom(spec):
            raise RuntimeError("kaput")
        fake(CheckEntry("fake", "x", boom, CheckSpec("fake")))
        res = run_suite(["fake"])
        assert res.reports == []
        assert res.rows()[0]["verdict"] == ERROR
        assert "kaput" in res.errors["fake"]


class TestSpec:
    def test_hash_stable_and_sensitive(self):
        a = CheckSpec("x", params={"b": 1})
        assert a.config_hash() == CheckSpec("x", params={"b": 1}).config_hash()
        assert a.config_hash() != a.with_(seed=1).config_hash()

    def test_with_merges_params(self):
        a = CheckSpec("x", params={"a": 1, "b": 2})
        assert dict(a.with_(params={"b": 3}).params) == {"a": 1, "b": 3}

    def test_resolve(self):
        spec = resolve_spec("S9-counterexample", trials=2)
        assert spec.trials == 2
        with pytest.raises(KeyError):
            resolve_spec("nope")


class TestRegistry:
    def test_every_estimate_registered(self):
        for cid in ESTIMATES:
            assert cid in REGISTRY

    def test_statements(self):
        for cid, e in REGISTRY.items():
            assert e.check_id == cid and e.statement

    def test_unknown_id(self):
        with pytest.raises(KeyError):
            run_check("not-a-check")

    def test_hypothesis_checked_before_trials(self):
        with pytest.raises(HypothesisError):
            run_check("L6.2-heat-time", exponents=({"p": 2.0, "gamma": 0.5},))


class TestCheapChecks:
    @pytest.mark.parametrize("cid", ["S9-counterexample", "P5.9-plancherel", "B-bernstein",
                                     "GN-interpolation", "P5.8-besov-embedding"])
    def test_pass(self, cid):
        assert run_check(cid).verdict == PASS

    def test_deterministic(self):
        a = run_check("P5.4-norm-equiv", trials=3)
        b = run_check("P5.4-norm-equiv", trials=3)
        assert a.ratios == b.ratios and a.config_hash == b.config_hash

    def test_seed_changes_ratios(self):
        a = run_check("P5.4-norm-equiv", trials=3)
        b = run_check("P5.4-norm-equiv", trials=3, seed=7)
        assert a.ratios != b.ratios


@pytest.fixture(scope="module")
def result():
    return run_suite(["B-bernstein", "S9-counterexample", "B-bernstein"])


class TestWriters:
    def test_registry_order_and_dedup(self, result):
        ids = [r.check_id for r in result.reports]
        assert ids == [c for c in REGISTRY if c in ("S9-counterexample", "B-bernstein")]

    def test_json(self, result, tmp_path):
        data = json.loads(write_json(result, tmp_path / "r.json").read_text())
        assert data["policy"] == POLICY
        assert {r["check_id"] for r in data["reports"]} == {"S9-counterexample", "B-bernstein"}

    def test_csv(self, result, tmp_path):
        with open(write_csv(result, tmp_path / "r.csv")) as fh:
            rows = list(csv.DictReader(fh))
        assert {r["verdict"] for r in rows} == {PASS}
        assert float(rows[0]["max"]) > 0

    def test_markdown(self, result):
        md = markdown_summary(result)
        assert POLICY in md and "| S9-counterexample | pass |" in md
