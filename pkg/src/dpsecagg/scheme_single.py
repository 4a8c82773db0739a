"""Single-combination secure aggregation with a hidden demand row.

The server hides its coefficients a_i behind one random nonzero t by sending
Q_i = 1 / (t a_i). Users mask W_i with Q_i Z_i in round 1; in round 2 each
survivor returns its MDS-coded share of sum_{u1} Z_i, from which any U
answers give back the aggregate key.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .algebra import inv_int, vadd, vscale, vsub
from .codes import Matrix, mds_encode, rs_erasure_decode, vandermonde
from .errors import (
    DimensionMismatch,
    InsufficientAnswers,
    QueryReuse,
    UserNotInSurvivors,
    ZeroCoefficient,
)
from .model import DemandMatrix, ProblemParams


@dataclass
class SingleQueryState:
    """Server secret t and the per-user queries derived from it."""

    t: int
    q1: dict[int, int]
    q: int
    _owner: object = field(default=None, repr=False, compare=False)

    def claim(self, run_token) -> None:
        """Bind this state to one run; a second, different run is refused."""
        if self._owner is None:
            self._owner = run_token
        elif self._owner is not run_token:
            raise QueryReuse("t is single-use; draw fresh queries for every run")


def queries_for(row, t: int, q: int) -> SingleQueryState:
    """Queries for demand ``row`` under a given t."""
    if t % q == 0:
        raise ZeroCoefficient("t must be nonzero")
    q1 = {}
    for i, a in enumerate(row, start=1):
        if a % q == 0:
            raise ZeroCoefficient(f"coefficient of user {i} is zero")
        q1[i] = inv_int(t * a, q)
    return SingleQueryState(t % q, q1, q)


def gen_queries(f: DemandMatrix, rng) -> SingleQueryState:
    if f.kc != 1:
        raise ZeroCoefficient(f"single-combination queries need Kc = 1, got {f.kc}")
    t = rng.randrange(1, f.q)
    return queries_for(f.row(0), t, f.q)


def encoding_matrix(p: ProblemParams, points=None) -> Matrix:
    """U x K Vandermonde code; points default to 1..K."""
    if points is None:
        points = range(1, p.k + 1)
    return vandermonde(p.u, list(points), p.q)


def split(z, parts: int) -> list[list[int]]:
    if len(z) % parts:
        raise DimensionMismatch(f"length {len(z)} not divisible into {parts} sub-keys")
    w = len(z) // parts
    return [list(z[r * w:(r + 1) * w]) for r in range(parts)]


@dataclass(frozen=True)
class SingleKeyMaterial:
    """What user ``user`` stores: its own key and its coded share of every other key."""

    user: int
    own_key: tuple[int, ...]
    shares: dict  # j -> [Z~_j]_user for j != user

    def own_share(self, m: Matrix) -> list[int]:
        """[Z~_user]_user, recomputed from the own key and column ``user`` of m."""
        subkeys = split(self.own_key, m.rows)
        col = m.column(self.user - 1)
        q = m.q
        out = [0] * len(subkeys[0])
        for r, sk in enumerate(subkeys):
            c = col[r]
            for s, v in enumerate(sk):
                out[s] += c * v
        return [v % q for v in out]


def key_material_from_keys(keys, m: Matrix) -> dict[int, SingleKeyMaterial]:
    """Distribute explicit keys Z_1..Z_K into per-user storage."""
    k = m.cols
    if len(keys) != k:
        raise DimensionMismatch(f"{len(keys)} keys for {k} users")
    coded = [mds_encode(split(z, m.rows), m) for z in keys]  # coded[j][i] = [Z~_{j+1}]_{i+1}
    return {
        i: SingleKeyMaterial(
            i, tuple(keys[i - 1]),
            {j: tuple(coded[j - 1][i - 1]) for j in range(1, k + 1) if j != i})
        for i in range(1, k + 1)
    }


def gen_keys(p: ProblemParams, m: Matrix, rng, length: int | None = None) -> dict[int, SingleKeyMaterial]:
    length = p.padded_length("single") if length is None else length
    if length % p.u:
        raise DimensionMismatch(f"key length {length} not divisible by U={p.u}")
    keys = [p.field.random_vector(rng, length) for _ in range(p.k)]
    return key_material_from_keys(keys, m)


def round1_message(w_i, q1_i: int, z_i, q: int) -> list[int]:
    """X_i = W_i + Q_i Z_i."""
    if len(w_i) != len(z_i):
        raise DimensionMismatch(f"input length {len(w_i)} vs key length {len(z_i)}")
    return vadd(w_i, vscale(q1_i, z_i, q), q)


def round2_message(j: int, u1, material: SingleKeyMaterial, m: Matrix) -> list[int]:
    """Y_j = sum over i in u1 of [Z~_i]_j."""
    if j not in u1:
        raise UserNotInSurvivors(f"user {j} is not in u1={sorted(u1)}")
    if material.user != j:
        raise ValueError(f"material of user {material.user} offered for user {j}")
    q = m.q
    acc = material.own_share(m)
    for i in u1:
        if i != j:
            acc = vadd(acc, material.shares[i], q)
    return acc


def recover_key_sum(y: dict, m: Matrix) -> list[int]:
    """Decode sum_{u1} Z_i from at least U round-2 answers keyed by user."""
    if len(y) < m.rows:
        raise InsufficientAnswers(f"{len(y)} answers, need U={m.rows}")
    subkeys = rs_erasure_decode({j - 1: v for j, v in y.items()}, m)
    return [v for sk in subkeys for v in sk]


def server_decode(x: dict, y: dict, state: SingleQueryState, u1, m: Matrix) -> list[int]:
    """sum_{u1} a_i W_i from round-1 messages over u1 and answers over u2."""
    q = m.q
    missing = set(u1) - set(x)
    if missing:
        raise InsufficientAnswers(f"missing round-1 messages from {sorted(missing)}")
    key_sum = recover_key_sum(y, m)
    acc = [0] * len(key_sum)
    for i in sorted(u1):
        acc = vadd(acc, vscale(inv_int(state.q1[i], q), x[i], q), q)
    # sum (1/Q_i) X_i = t sum a_i W_i + sum Z_i
    return vscale(inv_int(state.t, q), vsub(acc, key_sum, q), q)


class SingleRunner:
    """Drives one run of the scheme for one demand row, stage by stage.

    ``control`` selects a deliberately broken variant for negative tests:
    ``"no-mask"`` zeroes every key, ``"leak-demand"`` fixes t = 1 so the
    queries are the bare inverses 1 / a_i.
    """

    name = "single"

    def __init__(self, p: ProblemParams, row, rng, control=None, state=None, points=None):
        self.p = p
        self.q = p.q
        self.row = list(row)
        self.m = encoding_matrix(p, points)
        self.length = p.padded_length("single")
        if state is None:
            t = 1 if control == "leak-demand" else rng.randrange(1, p.q)
            state = queries_for(self.row, t, p.q)
        state.claim(self)
        self.state = state
        if control == "no-mask":
            self.material = key_material_from_keys([[0] * self.length for _ in range(p.k)], self.m)
        else:
            self.material = gen_keys(p, self.m, rng, self.length)

    def set_keys(self, keys) -> None:
        self.material = key_material_from_keys(keys, self.m)

    def round1(self, inputs):
        queries = {i: [self.state.q1[i]] for i in self.p.users}
        x = {i: round1_message(inputs[i - 1], self.state.q1[i], self.material[i].own_key, self.q)
             for i in self.p.users}
        return queries, x

    def round2(self, u1):
        u1 = frozenset(u1)
        return {}, {j: round2_message(j, u1, self.material[j], self.m) for j in sorted(u1)}

    def decode(self, x, y, u1):
        return [server_decode(x, y, self.state, u1, self.m)]
