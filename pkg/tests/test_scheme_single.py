import itertools
import random
from fractions import Fraction

import pytest

from dpsecagg.algebra import inv_int
from dpsecagg.errors import (
    InsufficientAnswers,
    ProtocolFailure,
    QueryReuse,
    UserNotInSurvivors,
    ZeroCoefficient,
)
from dpsecagg.harness import run_protocol
from dpsecagg.model import DemandMatrix, DropoutSchedule, ProblemParams
from dpsecagg.scheme_single import (
    SingleRunner,
    encoding_matrix,
    gen_keys,
    queries_for,
    recover_key_sum,
    round2_message,
    split,
)

P = ProblemParams(3, 2, 1, 11, 2)


class TestQueries:
    def test_query_is_inverse_of_t_times_a(self):
        st = queries_for([3, 5, 7], 4, 11)
        for i, a in enumerate([3, 5, 7], start=1):
            assert st.q1[i] * 4 * a % 11 == 1

    def test_unit_coefficient_gives_inverse_of_t(self):
        assert sorted(queries_for([1, 1, 1], t, 11).q1[1] for t in range(1, 11)) == list(range(1, 11))

    def test_zero_rejected(self):
        with pytest.raises(ZeroCoefficient):
            queries_for([1, 0, 2], 3, 11)
        with pytest.raises(ZeroCoefficient):
            queries_for([1, 1, 2], 0, 11)

    def test_state_single_use(self):
        st = queries_for([1, 2, 3], 5, 11)
        SingleRunner(P, [1, 2, 3], random.Random(0), state=st)
        with pytest.raises(QueryReuse):
            SingleRunner(P, [1, 2, 3], random.Random(1), state=st)


class TestKeys:
    def test_split(self):
        assert split([1, 2, 3, 4], 2) == [[1, 2], [3, 4]]

    def test_aggregate_key_recovered_from_any_u(self):
        p = ProblemParams(5, 3, 1, 11, 6)
        m = encoding_matrix(p)
        mat = gen_keys(p, m, random.Random(3))
        for u1 in itertools.combinations(range(1, 6), 3):
            y = {j: round2_message(j, set(u1), mat[j], m) for j in u1}
            want = [sum(mat[i].own_key[s] for i in u1) % 11 for s in range(6)]
            assert recover_key_sum(y, m) == want

    def test_round2_outside_u1(self):
        m = encoding_matrix(P)
        mat = gen_keys(P, m, random.Random(0))
        with pytest.raises(UserNotInSurvivors):
            round2_message(3, {1, 2}, mat[3], m)

    def test_too_few_answers(self):
        m = encoding_matrix(P)
        with pytest.raises(InsufficientAnswers):
            recover_key_sum({1: [0]}, m)


class TestRuns:
    def test_worked_example(self):
        # three users, one may drop; users 1 and 2 survive
        a = [3, 5, 7]
        f = DemandMatrix.from_rows([a], 11)
        w = [[1, 2], [3, 4], [5, 6]]
        t, r = run_protocol("single", P, f, w, DropoutSchedule([1, 2]), random.Random(0))
        assert t.decoded == [[(3 * 1 + 5 * 3) % 11, (3 * 2 + 5 * 4) % 11]]
        assert (r.r1, r.r2) == (1, Fraction(1, 2))

    def test_x_is_masked_input(self):
        runner = SingleRunner(P, [2, 3, 4], random.Random(7))
        w = [[1, 1], [2, 2], [3, 3]]
        _, x = runner.round1(w)
        for i in P.users:
            z = runner.material[i].own_key
            qi = runner.state.q1[i]
            assert x[i] == [(w[i - 1][s] + qi * z[s]) % 11 for s in range(2)]

    def test_server_recombination(self):
        runner = SingleRunner(P, [2, 3, 4], random.Random(7))
        t = runner.state.t
        for i, a in zip(P.users, [2, 3, 4]):
            assert inv_int(runner.state.q1[i], 11) == t * a % 11

    def test_every_u2_decodes(self):
        p = ProblemParams(4, 2, 1, 11, 4)
        rng = random.Random(2)
        f = DemandMatrix.from_rows([[1, 9, 4, 6]], 11)
        w = [[rng.randrange(11) for _ in range(4)] for _ in range(4)]
        for u2 in itertools.combinations([1, 2, 3, 4], 2):
            t, _ = run_protocol("single", p, f, w, DropoutSchedule([1, 2, 3, 4], u2), rng)
            assert t.decoded == f.apply(w)

    def test_no_mask_control_still_decodes(self):
        f = DemandMatrix.from_rows([[1, 2, 3]], 11)
        t, _ = run_protocol("single", P, f, [[1, 2]] * 3, DropoutSchedule([1, 2, 3]), random.Random(0),
                            control="no-mask")
        assert t.decoded == f.apply([[1, 2]] * 3)

    def test_zero_demand_fails_validation(self):
        f = DemandMatrix.from_rows([[1, 0, 3]], 11)
        with pytest.raises(ProtocolFailure) as err:
            run_protocol("single", P, f, [[1, 2]] * 3, DropoutSchedule([1, 2]), random.Random(0))
        assert err.value.stage == "validate"
