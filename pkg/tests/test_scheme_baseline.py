import random
from fractions import Fraction

import pytest

from dpsecagg.codes import Matrix
from dpsecagg.errors import RewriteExhausted
from dpsecagg.harness import run_protocol
from dpsecagg.model import DemandMatrix, DropoutSchedule, ProblemParams
from dpsecagg.scheme_baseline import BaselineRunner, rewrite_demand_for_baseline, run_baseline

P = ProblemParams(4, 3, 2, 11, 6)


class TestRewrite:
    def test_nonzero_demand_untouched(self):
        f = DemandMatrix.from_rows([[1, 2, 3, 4], [5, 6, 7, 9]], 11)
        rw = rewrite_demand_for_baseline(f, random.Random(0))
        assert rw.is_identity and rw.demand == f

    def test_zeros_mixed_away(self):
        f = DemandMatrix.from_rows([[1, 0, 3, 0], [0, 6, 0, 9]], 11)
        rw = rewrite_demand_for_baseline(f, random.Random(0))
        assert 0 not in rw.demand.f.entries
        assert rw.unmix @ rw.demand.f == f.f
        assert rw.unmix @ rw.mix == Matrix.identity(2, 11)

    def test_single_row_cannot_be_mixed(self):
        with pytest.raises(RewriteExhausted):
            rewrite_demand_for_baseline(DemandMatrix.from_rows([[1, 0, 2]], 11), random.Random(0))


class TestRuns:
    def test_rates(self):
        f = DemandMatrix.from_rows([[1, 2, 3, 4], [5, 6, 7, 9]], 11)
        _, r = run_baseline(P, f, [[1] * 6] * 4, DropoutSchedule([1, 2, 3]), random.Random(0))
        assert (r.r1, r.r2) == (2, Fraction(2, 3))

    def test_independent_repetitions(self):
        f = DemandMatrix.from_rows([[1, 2, 3, 4], [5, 6, 7, 9]], 11)
        runner = BaselineRunner(P, f, random.Random(1))
        keys = [rep.material[1].own_key for rep in runner.reps]
        assert keys[0] != keys[1]

    def test_zero_entries_decoded_through_unmix(self):
        f = DemandMatrix.from_rows([[1, 0, 3, 0], [0, 6, 0, 9]], 11)
        rng = random.Random(5)
        w = [[rng.randrange(11) for _ in range(6)] for _ in range(4)]
        t, _ = run_protocol("baseline", P, f, w, DropoutSchedule([1, 3, 4], [1, 4, 3]), rng)
        assert t.decoded == f.apply(w, {1, 3, 4})
