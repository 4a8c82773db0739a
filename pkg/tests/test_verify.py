import random

import pytest

from dpsecagg.codes import Matrix
from dpsecagg.errors import EnumerationTooLarge, InsufficientSamples, NonlinearityDetected
from dpsecagg.model import DemandMatrix, DropoutSchedule, ProblemParams, sample_demand
from dpsecagg.verify import (
    FrozenRun,
    LinearViewDecomposition,
    demand_map,
    extract_linear_view,
    mi_exhaustive,
    privacy_query_uniformity,
    security_rank_check,
    security_realizations,
    view_distribution_compare,
)

SINGLE = ProblemParams(3, 2, 1, 11, 2)
MULTI = ProblemParams(4, 3, 2, 11, 4)


class TestLinearView:
    def test_zero_offset_guard(self):
        with pytest.raises(NonlinearityDetected):
            extract_linear_view(lambda w, r: [w[0] + 1], 1, 0, 7)

    def test_nonlinear_guard(self):
        with pytest.raises(NonlinearityDetected):
            extract_linear_view(lambda w, r: [w[0] * w[0] % 7], 1, 0, 7)

    def test_single_round1_block_structure(self):
        f = DemandMatrix.from_rows([[2, 3, 4]], 11)
        run = FrozenRun("single", SINGLE, f, DropoutSchedule([1, 2, 3]), random.Random(0))
        d = run.server_view(random.Random(1))
        qs = run.context["queries"]
        # X rows: identity on W, Q_i on the user's own key
        for i in (1, 2, 3):
            for s in range(2):
                row = (i - 1) * 2 + s
                assert d.a.row(row) == [1 if c == row else 0 for c in range(6)]
                assert d.b.row(row) == [qs[i] if c == row else 0 for c in range(6)]

    def test_reproduces_runs(self):
        rng = random.Random(4)
        run = FrozenRun("multi", MULTI, sample_demand(MULTI, rng), DropoutSchedule([1, 2, 4]), rng)
        d = run.server_view(rng, probes=100)
        w = [rng.randrange(11) for _ in range(run.n_w)]
        r = [rng.randrange(11) for _ in range(run.n_r)]
        assert d.view(w, r) == run.view_fn(run.u1, run.u1)(w, r)

    def test_demand_map(self):
        f = DemandMatrix.from_rows([[1, 2]], 5)
        assert demand_map(f, {2}, 2).to_rows() == [[0, 0, 2, 0], [0, 0, 0, 2]]


class TestSecurityRank:
    def test_toy_pass_and_fail(self):
        q = 5
        dmap = Matrix.from_rows([[1, 1]], q)
        # view = W1 + Z, W2 - Z: the sum is revealed, nothing else
        a = Matrix.from_rows([[1, 0], [0, 1]], q)
        b = Matrix.from_rows([[1], [4]], q)
        assert security_rank_check(LinearViewDecomposition(a, b, {}), dmap).passed
        assert not security_rank_check(LinearViewDecomposition(a, Matrix.zeros(2, 0, q), {}), dmap).passed

    @pytest.mark.parametrize("scheme,p", [("single", SINGLE), ("multi", MULTI), ("baseline", MULTI)])
    def test_schemes_pass(self, scheme, p):
        assert security_realizations(scheme, p, trials=10, seed=3).passed

    @pytest.mark.parametrize("scheme,p", [("single", SINGLE), ("multi", MULTI), ("baseline", MULTI)])
    def test_no_mask_fails(self, scheme, p):
        v = security_realizations(scheme, p, trials=10, control="no-mask", density=0.0)
        assert v.status == "FAIL" and v.detail["failed"] == 10

    def test_reused_mask_fails_without_dropout(self):
        v = security_realizations("multi", MULTI, trials=10, control="reuse-mask", density=0.0)
        assert v.detail["failed"] == 10

    def test_stronger_scope_passes(self):
        assert security_realizations("multi", MULTI, trials=5, scope="all").passed


class TestQueryUniformity:
    def test_single(self):
        rng = random.Random(0)
        ds = [sample_demand(SINGLE, rng, nonzero=True) for _ in range(5)]
        assert privacy_query_uniformity("single", SINGLE, ds).passed
        assert not privacy_query_uniformity("single", SINGLE, ds, control="leak-demand").passed

    def test_multi_small(self):
        p = ProblemParams(4, 3, 2, 7, 2)
        rng = random.Random(1)
        ds = [sample_demand(p, rng) for _ in range(2)]
        v = privacy_query_uniformity("multi", p, ds, component=1)
        assert v.passed and v.detail["enumerated"] == 7 ** 4

    def test_limit(self):
        p = ProblemParams(6, 4, 2, 13, 3)
        with pytest.raises(EnumerationTooLarge):
            privacy_query_uniformity("multi", p, [sample_demand(p, random.Random(0))], max_enumeration=1000)


class TestMi:
    def test_rejects_multi(self):
        with pytest.raises(EnumerationTooLarge):
            mi_exhaustive("multi", MULTI)

    def test_too_large(self):
        with pytest.raises(EnumerationTooLarge):
            mi_exhaustive("single", ProblemParams(3, 2, 1, 5, 2), max_states=10_000)

    def test_tiny_instance(self):
        p = ProblemParams(3, 2, 1, 3, 2)
        demands = [DemandMatrix.from_rows([[1, 2, 1]], 3)]
        r = mi_exhaustive("single", p, demands=demands + [DemandMatrix.from_rows([[2, 2, 1]], 3)],
                          schedule=DropoutSchedule([1, 3]))
        assert r.passed
        assert r.to_dict()["security"] == {"mi": 0.0, "exact_zero": True}

    def test_no_mask_leaks(self):
        p = ProblemParams(3, 2, 1, 3, 2)
        r = mi_exhaustive("single", p, control="no-mask")
        assert not r.security_exact_zero and r.security_mi > 0


class TestStatistical:
    def test_insufficient(self):
        rng = random.Random(0)
        p = ProblemParams(4, 3, 2, 11, 2)
        with pytest.raises(InsufficientSamples):
            view_distribution_compare(p, sample_demand(p, rng), sample_demand(p, rng), samples=100)

    def test_leak_detected_small(self):
        rng = random.Random(0)
        p = ProblemParams(4, 3, 2, 11, 2)
        f0, f1 = sample_demand(p, rng), sample_demand(p, rng)
        v = view_distribution_compare(p, f0, f1, samples=2000, control="leak-demand")
        assert v.status == "FAIL" and v.exact is False
