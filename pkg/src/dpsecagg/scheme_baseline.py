"""Repetition baseline: one independent single-combination run per demand row.

Every repetition draws its own t and its own keys. The single-combination
scheme cannot handle zero coefficients, so demands containing zeros are
first mixed into an equivalent all-nonzero demand G F; the decoded rows are
mapped back with G^-1.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import kernels
from .algebra import FieldConfig
from .codes import Matrix, inverse, matmul, rank
from .errors import RewriteExhausted
from .model import DemandMatrix, ProblemParams
from .scheme_single import SingleRunner


@dataclass(frozen=True)
class DemandRewrite:
    """F' = mix @ F together with ``unmix`` = mix^-1."""

    demand: DemandMatrix
    mix: Matrix
    unmix: Matrix

    @property
    def is_identity(self) -> bool:
        return self.mix == Matrix.identity(self.mix.rows, self.mix.q)


def rewrite_demand_for_baseline(f: DemandMatrix, rng, max_tries: int = 10_000) -> DemandRewrite:
    q, kc, k = f.q, f.kc, f.k
    ident = Matrix.identity(kc, q)
    if all(v != 0 for v in f.f.entries):
        return DemandRewrite(f, ident, ident)
    if kc == 1:
        raise RewriteExhausted("a single demand row with a zero coefficient cannot be remixed")
    # rows of G F are independent, so G is built row by row: each new row must
    # give an all-nonzero mixed row and keep G full rank
    field = FieldConfig(q)
    rows: list[list[int]] = []
    tries = 0
    while len(rows) < kc:
        tries += 1
        if tries > max_tries:
            raise RewriteExhausted(f"no all-nonzero row mix found in {max_tries} tries over GF({q})")
        g = field.random_vector(rng, kc)
        mixed = kernels.matmul(g, f.f.entries, 1, kc, k, q)
        if 0 in mixed:
            continue
        if rank(Matrix.from_rows(rows + [g], q)) == len(rows) + 1:
            rows.append(g)
    mix = Matrix.from_rows(rows, q)
    return DemandRewrite(DemandMatrix(matmul(mix, f.f)), mix, inverse(mix))


class BaselineRunner:
    """Kc single-combination runners sharing one dropout schedule.

    Per-user messages are the concatenation of the repetitions' messages, so
    symbol counts add up across repetitions.
    """

    name = "baseline"

    def __init__(self, p: ProblemParams, f: DemandMatrix, rng, control=None, points=None):
        self.p = p
        self.rewrite = rewrite_demand_for_baseline(f, rng)
        self.reps = [SingleRunner(p, self.rewrite.demand.row(n), rng, control=control, points=points)
                     for n in range(f.kc)]
        self.length = p.padded_length("single")

    def round1(self, inputs):
        queries = {i: [] for i in self.p.users}
        x = {i: [] for i in self.p.users}
        for rep in self.reps:
            qs, xs = rep.round1(inputs)
            for i in self.p.users:
                queries[i].extend(qs[i])
                x[i].extend(xs[i])
        return queries, x

    def round2(self, u1):
        y = {j: [] for j in sorted(u1)}
        for rep in self.reps:
            _, ys = rep.round2(u1)
            for j, v in ys.items():
                y[j].extend(v)
        return {}, y

    def decode(self, x, y, u1):
        lx = self.length
        ly = lx // self.p.u
        mixed = []
        for n, rep in enumerate(self.reps):
            xn = {i: v[n * lx:(n + 1) * lx] for i, v in x.items()}
            yn = {j: v[n * ly:(n + 1) * ly] for j, v in y.items()}
            mixed.extend(rep.decode(xn, yn, u1))
        if self.rewrite.is_identity:
            return mixed
        # unmix the decoded rows symbol by symbol
        return matmul(self.rewrite.unmix, Matrix.from_rows(mixed, self.p.q)).to_rows()


def run_baseline(p: ProblemParams, f: DemandMatrix, w, schedule, rng, **kwargs):
    """Full baseline run; returns ``(Transcript, RateReport)``."""
    from .harness import run_protocol

    return run_protocol("baseline", p, f, w, schedule, rng, **kwargs)
