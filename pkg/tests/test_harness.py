import random
from fractions import Fraction
from math import comb

import pytest

from dpsecagg.errors import ConverseViolation, ParameterError, ProtocolFailure
from dpsecagg.harness import (
    RATES_CSV_HEADER,
    DropoutModel,
    adversarial_worst,
    all_schedules,
    converse_check,
    make_runner,
    random_schedule,
    rate_sweep,
    rates_csv,
    run_protocol,
    survivor_sets,
    sweep,
)
from dpsecagg.model import DropoutSchedule, ProblemParams, RateReport, sample_demand


class TestDropoutModels:
    def test_parse(self):
        assert DropoutModel.parse("none").mode == "none"
        m = DropoutModel.parse("fixed:1,2,3;1,3")
        assert m.u1 == {1, 2, 3} and m.u2 == {1, 3}
        assert DropoutModel.parse("random:0.25").density == 0.25
        with pytest.raises(ParameterError):
            DropoutModel.parse("sometimes")

    def test_schedule_counts(self):
        k, u = 5, 3
        assert len(list(survivor_sets(k, u))) == sum(comb(k, s) for s in range(u, k + 1))
        expected = sum(comb(k, s1) * sum(comb(s1, s2) for s2 in range(u, s1 + 1)) for s1 in range(u, k + 1))
        assert len(list(all_schedules(k, u))) == expected

    def test_random_schedules_valid(self):
        rng = random.Random(0)
        for _ in range(200):
            random_schedule(6, 3, 0.6, rng).validate(6, 3)

    def test_worst_needs_instance(self):
        with pytest.raises(ParameterError):
            list(DropoutModel.parse("worst").schedules(4, 3))


class TestRunProtocol:
    def test_unknown_control(self):
        p = ProblemParams(3, 2, 1, 7, 2)
        with pytest.raises(ParameterError):
            make_runner("single", p, sample_demand(p, random.Random(0), nonzero=True), random.Random(0), "x")

    def test_failure_carries_stage_and_transcript(self):
        p = ProblemParams(3, 2, 1, 7, 2)
        f = sample_demand(p, random.Random(0), nonzero=True)
        with pytest.raises(ProtocolFailure) as err:
            run_protocol("single", p, f, [[0, 0]] * 3, DropoutSchedule([1]), random.Random(0))
        assert err.value.stage == "validate"
        assert err.value.transcript.error["type"] == "ScheduleError"

    def test_exhaustive_outputs_identical_per_u1(self):
        p = ProblemParams(4, 3, 2, 11, 2)
        rng = random.Random(1)
        f = sample_demand(p, rng)
        w = [[rng.randrange(11) for _ in range(2)] for _ in range(4)]
        seen = {}
        for s in DropoutModel.parse("exhaustive").schedules(4, 3):
            t, _ = run_protocol("multi", p, f, w, s, rng)
            seen.setdefault(tuple(t.u1), set()).add(str(t.decoded))
        assert all(len(v) == 1 for v in seen.values())


class TestConverse:
    def test_gap(self):
        r = RateReport("multi", Fraction(1), Fraction(1), Fraction(1), Fraction(1), 2, 2, 2, 3)
        assert converse_check(r) == Fraction(3, 2)

    def test_violation(self):
        r = RateReport("multi", Fraction(1), Fraction(1, 2), Fraction(1), Fraction(1, 2), 2, 2, 2, 3)
        with pytest.raises(ConverseViolation):
            converse_check(r)


class TestSweepAndRates:
    def test_sweep(self):
        rep = sweep("baseline", ProblemParams(4, 3, 2, 11, 3), trials=3, seed=1)
        assert rep.ok and rep.runs == 3 * 9

    def test_sweep_parallel_matches_serial(self):
        p = ProblemParams(4, 2, 1, 11, 2)
        a = sweep("single", p, trials=4, seed=2, workers=2)
        b = sweep("single", p, trials=4, seed=2)
        assert (a.runs, a.passed) == (b.runs, b.passed)

    def test_worst_case_loads_constant(self):
        w = adversarial_worst(ProblemParams(5, 3, 2, 11, 4), "multi")
        assert w.constant and w.load == 4
        w = adversarial_worst(ProblemParams(5, 3, 1, 11, 6), "single")
        assert w.constant and w.load == 2

    def test_rate_sweep_points(self):
        pts = rate_sweep(4, 3, [1, 2])
        got = {(pt.kc, pt.scheme): (pt.r1, pt.r2) for pt in pts}
        assert got[(2, "multi")] == (1, 1)
        assert got[(2, "baseline")] == (2, Fraction(2, 3))
        assert got[(1, "single")] == (1, Fraction(1, 3))
        for scheme in ("baseline",):
            r2s = [got[(kc, scheme)][1] for kc in (1, 2)]
            assert r2s == sorted(r2s)

    def test_rates_csv(self):
        text = rates_csv(rate_sweep(4, 3, [1, 2]))
        lines = text.splitlines()
        assert lines[0] == "# schema_version=1"
        assert lines[1] == RATES_CSV_HEADER
        assert lines[3].split(",")[:2] == ["2", "1"]
        assert float(lines[3].split(",")[-1]) == 1.5

    def test_rate_sweep_rejects_uncovered(self):
        with pytest.raises(ParameterError):
            rate_sweep(4, 3, [3])
