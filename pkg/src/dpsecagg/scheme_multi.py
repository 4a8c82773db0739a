"""Multi-combination secure aggregation (2 <= Kc < U) via symmetric private computation.

Every user holds every key Z_1..Z_K. Round 1 is plain masking X_i = W_i + Z_i.
In round 2 the server needs sum_{u1} a_{n,i} Z_i for each demanded row n; it
fetches that one block of L' = U-1 symbols at a time. For block b and row n
the server draws L' random linear functionals phi_j and sends user i the
evaluations rho_j(., alpha_i) of query polynomials that equal phi_j at
alpha_1 and equal the demand functional (on the j-th symbol) at beta_j. Users
answer with one symbol zeta(alpha_i) blinded by a shared mask polynomial psi
that vanishes on the betas; any U answers pin down zeta, and zeta(beta_l) is
the l-th symbol of the demanded key combination.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

from . import kernels
from .algebra import FieldConfig, lagrange_weights, vadd, vsub
from .codes import EvaluationPoints
from .errors import (
    DimensionMismatch,
    InsufficientAnswers,
    MaskReuse,
    MissingBlock,
    UserNotInSurvivors,
)
from .model import DemandMatrix, ProblemParams


def sub_key_length(p: ProblemParams) -> int:
    return p.u - 1


def default_points(p: ProblemParams) -> EvaluationPoints:
    return EvaluationPoints.default(p.k, sub_key_length(p), p.q)


class MaskPool:
    """Shared uniform mask symbols, one per retrieval (row n, block b).

    A slot is bound to the first retrieval that draws from it; a different
    retrieval asking for the same slot raises ``MaskReuse``. With
    ``share_across_rows`` all rows of a block use one slot, which is the
    insecure configuration kept only as a negative control.
    """

    def __init__(self, symbols, kc: int, blocks: int, share_across_rows: bool = False):
        self.symbols = tuple(symbols)
        self.kc = kc
        self.blocks = blocks
        self.share_across_rows = share_across_rows
        expected = blocks if share_across_rows else kc * blocks
        if len(self.symbols) != expected:
            raise DimensionMismatch(f"{len(self.symbols)} mask symbols, expected {expected}")
        self._bound: dict[int, tuple] = {}

    def slot(self, n: int, b: int) -> int:
        return b if self.share_across_rows else n * self.blocks + b

    def take(self, n: int, b: int, round_id) -> int:
        idx = self.slot(n, b)
        ident = (round_id, n, b)
        prev = self._bound.setdefault(idx, ident)
        if prev != ident and not self.share_across_rows:
            raise MaskReuse(f"mask slot {idx} already used by retrieval {prev}, requested by {ident}")
        return self.symbols[idx]


@dataclass
class MultiKeyMaterial:
    """Key storage, identical at every user: all K keys plus the mask pool."""

    keys: tuple[tuple[int, ...], ...]
    masks: MaskPool
    _blocks: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def block_column(self, b: int, j: int, lp: int) -> list[int]:
        """Symbol j of block b of every key, one entry per user."""
        pos = b * lp + j
        return [z[pos] for z in self.keys]

    def block_flat(self, b: int, lp: int) -> list[int]:
        """Block b laid out as L' consecutive block columns (cached; keys never change)."""
        key = (b, lp)
        if key not in self._blocks:
            self._blocks[key] = [v for j in range(lp) for v in self.block_column(b, j, lp)]
        return self._blocks[key]


def gen_keys(p: ProblemParams, rng, length: int | None = None,
             share_masks_across_rows: bool = False) -> MultiKeyMaterial:
    length = p.padded_length("multi") if length is None else length
    lp = sub_key_length(p)
    if length % lp:
        raise DimensionMismatch(f"key length {length} not divisible by U-1={lp}")
    blocks = length // lp
    keys = tuple(tuple(p.field.random_vector(rng, length)) for _ in range(p.k))
    n_masks = blocks if share_masks_across_rows else p.kc * blocks
    masks = MaskPool(p.field.random_vector(rng, n_masks), p.kc, blocks, share_masks_across_rows)
    return MultiKeyMaterial(keys, masks)


def round1_message(w_i, z_i, q: int) -> list[int]:
    """X_i = W_i + Z_i."""
    if len(w_i) != len(z_i):
        raise DimensionMismatch(f"input length {len(w_i)} vs key length {len(z_i)}")
    return vadd(w_i, z_i, q)


@dataclass(frozen=True)
class RetrievalQuery:
    """One retrieval as seen by one user: L' coefficient vectors over GF(q)^K."""

    user: int
    n: int
    b: int
    round_id: int
    components: tuple[tuple[int, ...], ...]


def draw_functionals(rng, lp: int, k: int, q: int) -> list[list[int]]:
    flat = FieldConfig(q).random_vector(rng, lp * k)
    return [flat[j * k:(j + 1) * k] for j in range(lp)]


@lru_cache(maxsize=4096)
def query_weights(points: EvaluationPoints, alpha: int) -> tuple[int, ...]:
    """Lagrange weights at ``alpha`` for nodes (alpha_1, beta_1, ..., beta_L').

    weights[0] is prod_l (alpha - beta_l) / (alpha_1 - beta_l), the blinding
    factor; weights[j] for j >= 1 multiplies the demand functional in rho_j.
    """
    return tuple(lagrange_weights((points.alphas[0],) + points.betas, alpha, points.q))


def build_retrieval_queries(theta, points: EvaluationPoints, phis, users, n: int = 0,
                            b: int = 0, round_id: int = 0) -> dict[int, RetrievalQuery]:
    """Evaluate the L' query polynomials at each user's point.

    ``theta`` is the demand row already restricted to u1 (length K), ``phis``
    the L' random functionals. rho_j(., alpha_1) = phi_j and
    rho_j(., beta_l) = theta if l == j else 0.
    """
    q = points.q
    lp = len(points.betas)
    if len(phis) != lp:
        raise DimensionMismatch(f"{len(phis)} random functionals for L'={lp}")
    k = len(theta)
    if any(len(ph) != k for ph in phis):
        raise DimensionMismatch("functional length differs from demand length")
    users = list(users)
    weights = [query_weights(points, points.alpha(i)) for i in users]
    # component j at user i is c_i phi_j + d_ij theta, with w = (c_i, d_i1, ..., d_iL')
    comps = kernels.eval_queries([w[0] for w in weights], [w[1:] for w in weights], phis, theta, q)
    return {i: RetrievalQuery(i, n, b, round_id, cs) for i, cs in zip(users, comps)}


def mask_polynomial_value(s: int, points: EvaluationPoints, alpha: int) -> int:
    """psi(alpha) = s * prod_l (alpha - beta_l) / (alpha_1 - beta_l)."""
    return s * query_weights(points, alpha)[0] % points.q


def answer(i: int, query: RetrievalQuery, material: MultiKeyMaterial, s: int,
           points: EvaluationPoints) -> int:
    """A_i = zeta(alpha_i): the query applied to block b plus psi(alpha_i)."""
    if query.user != i:
        raise ValueError(f"query for user {query.user} answered by user {i}")
    q = points.q
    flat_block = material.block_flat(query.b, len(query.components))
    acc = kernels.dot(query.components, flat_block, q)
    return (acc + mask_polynomial_value(s, points, points.alpha(i))) % q


@lru_cache(maxsize=1024)
def _readout_weights(xs: tuple, betas: tuple, q: int) -> tuple[int, ...]:
    """Row l holds the Lagrange weights taking values at ``xs`` to the value at beta_l."""
    return tuple(v for beta in betas for v in lagrange_weights(xs, beta, q))


def retrieve(answers: dict, points: EvaluationPoints) -> list[int]:
    """Interpolate zeta from U = L'+1 answers and read it off at the betas."""
    need = len(points.betas) + 1
    if len(answers) < need:
        raise InsufficientAnswers(f"{len(answers)} answers, need U={need}")
    chosen = sorted(answers)[:need]
    q = points.q
    xs = tuple(points.alpha(i) for i in chosen)
    weights = _readout_weights(xs, points.betas, q)
    return kernels.matmul(weights, [answers[i] for i in chosen], len(points.betas), need, 1, q)


@dataclass
class MultiServerState:
    """Server-side secrets of one round 2: the random functionals per retrieval."""

    u1: frozenset
    round_id: int
    points: EvaluationPoints
    blocks: int
    kc: int
    phis: dict = field(default_factory=dict)  # (n, b) -> L' functionals

    def retrievals(self):
        return [(n, b) for n in range(self.kc) for b in range(self.blocks)]


def gen_round2_queries(f: DemandMatrix, u1, points: EvaluationPoints, blocks: int, rng,
                       phis: dict | None = None) -> tuple[MultiServerState, dict[int, list[RetrievalQuery]]]:
    """Batch every retrieval of the run into one query list per surviving user.

    ``phis`` may be supplied to freeze the server randomness.
    """
    u1 = frozenset(u1)
    q, k, lp = f.q, f.k, len(points.betas)
    state = MultiServerState(u1, rng.randrange(1 << 62), points, blocks, f.kc)
    per_user = {i: [] for i in sorted(u1)}
    for n, b in state.retrievals():
        theta = f.restricted_row(n, u1)
        ph = phis[(n, b)] if phis is not None else draw_functionals(rng, lp, k, q)
        state.phis[(n, b)] = ph
        for i, rq in build_retrieval_queries(theta, points, ph, sorted(u1), n, b, state.round_id).items():
            per_user[i].append(rq)
    return state, per_user


def round2_message(i: int, u1, queries, material: MultiKeyMaterial, points: EvaluationPoints) -> list[int]:
    """One answer symbol per retrieval, in query order."""
    if i not in u1:
        raise UserNotInSurvivors(f"user {i} is not in u1={sorted(u1)}")
    return [answer(i, rq, material, material.masks.take(rq.n, rq.b, rq.round_id), points)
            for rq in queries]


def retrieve_all(y: dict, state: MultiServerState) -> list[list[int]]:
    """Concatenate retrieved blocks into sum_{u1} a_{n,i} Z_i for every row n."""
    order = state.retrievals()
    for i, ans in y.items():
        if len(ans) != len(order):
            raise MissingBlock(f"user {i} answered {len(ans)} of {len(order)} retrievals")
    combos = [[] for _ in range(state.kc)]
    for idx, (n, b) in enumerate(order):
        block = retrieve({i: ans[idx] for i, ans in y.items()}, state.points)
        combos[n].extend(block)
    return combos


def server_decode(x: dict, key_combos, f: DemandMatrix, u1) -> list[list[int]]:
    """(sum_{u1} a_{n,i} W_i)_n = sum a_{n,i} X_i - sum a_{n,i} Z_i."""
    q = f.q
    if len(key_combos) != f.kc:
        raise MissingBlock(f"{len(key_combos)} key combinations for Kc={f.kc}")
    missing = set(u1) - set(x)
    if missing:
        raise InsufficientAnswers(f"missing round-1 messages from {sorted(missing)}")
    out = []
    for n in range(f.kc):
        length = len(key_combos[n])
        acc = [0] * length
        for i in sorted(u1):
            a = f.coefficient(n, i)
            if a:
                xi = x[i]
                if len(xi) != length:
                    raise MissingBlock(f"key combination of length {length} vs message {len(xi)}")
                for s in range(length):
                    acc[s] += a * xi[s]
        out.append(vsub([v % q for v in acc], key_combos[n], q))
    return out


def _zero_material(p: ProblemParams, length: int) -> MultiKeyMaterial:
    lp = sub_key_length(p)
    blocks = length // lp
    keys = tuple(tuple([0] * length) for _ in range(p.k))
    return MultiKeyMaterial(keys, MaskPool([0] * (p.kc * blocks), p.kc, blocks))


class MultiRunner:
    """Drives one run, stage by stage.

    ``control``: ``"no-mask"`` zeroes keys and masks, ``"reuse-mask"`` shares
    one mask symbol across all rows of a block, ``"leak-demand"`` sets every
    random functional to zero so queries expose the demand row.
    """

    name = "multi"

    def __init__(self, p: ProblemParams, f: DemandMatrix, rng, control=None, points=None):
        self.p = p
        self.f = f
        self.rng = rng
        self.control = control
        self.points = default_points(p) if points is None else points
        self.length = p.padded_length("multi")
        self.blocks = self.length // sub_key_length(p)
        if control == "no-mask":
            self.material = _zero_material(p, self.length)
        else:
            self.material = gen_keys(p, rng, self.length, share_masks_across_rows=control == "reuse-mask")
        self.state = None

    def set_randomness(self, keys, masks) -> None:
        pool = MaskPool(masks, self.p.kc, self.blocks, self.material.masks.share_across_rows)
        self.material = MultiKeyMaterial(tuple(tuple(z) for z in keys), pool)

    def round1(self, inputs):
        x = {i: round1_message(inputs[i - 1], self.material.keys[i - 1], self.p.q)
             for i in self.p.users}
        return {}, x

    def round2(self, u1, phis=None):
        u1 = frozenset(u1)
        if phis is None and self.control == "leak-demand":
            lp = sub_key_length(self.p)
            phis = {(n, b): [[0] * self.p.k for _ in range(lp)]
                    for n in range(self.p.kc) for b in range(self.blocks)}
        self.state, queries = gen_round2_queries(self.f, u1, self.points, self.blocks, self.rng, phis)
        y = {i: round2_message(i, u1, queries[i], self.material, self.points) for i in sorted(u1)}
        wire = {i: [{"n": rq.n, "b": rq.b, "round_id": rq.round_id,
                     "components": rq.components} for rq in qs]
                for i, qs in queries.items()}
        return wire, y

    def decode(self, x, y, u1):
        combos = retrieve_all(y, self.state)
        return server_decode(x, combos, self.f, u1)
