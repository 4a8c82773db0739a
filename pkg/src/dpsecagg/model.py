"""Problem instances, dropout schedules, transcripts and rate accounting.

Users are labelled 1..K throughout, matching how schedules are written
(``u1 = {1, 2}``); per-user arrays are indexed by ``user - 1``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal

from .algebra import FieldConfig, next_prime
from .codes import Matrix, rank
from .errors import (
    IncompleteTranscript,
    ParameterError,
    RankDeficient,
    ScheduleError,
    ZeroColumn,
    ZeroEntryForSingleScheme,
)

SCHEMA_VERSION = 1

Scheme = Literal["single", "multi", "baseline"]
SCHEMES = ("single", "multi", "baseline")


def default_modulus(k: int, u: int) -> int:
    """Smallest prime >= K + U + 1."""
    return next_prime(k + u + 1)


def min_modulus(scheme: str, k: int, u: int) -> int:
    """Smallest field size a scheme can run in.

    single/baseline need K distinct code points (1..K reduced mod q); multi
    needs K nonzero user points plus U-1 retrieval points, all distinct.
    """
    if scheme == "multi":
        return k + u
    return max(k, 2)


@dataclass(frozen=True)
class ProblemParams:
    k: int
    u: int
    kc: int
    q: int
    l: int

    def __post_init__(self):
        if self.k < 2:
            raise ParameterError(f"need K >= 2 users, got K={self.k}")
        if not 1 <= self.u <= self.k - 1:
            raise ParameterError(
                f"need 1 <= U <= K-1 (with U = K nobody may drop and one round suffices), "
                f"got U={self.u}, K={self.k}")
        if not 1 <= self.kc <= self.k:
            raise ParameterError(f"need 1 <= Kc <= K for a full-row-rank demand, got Kc={self.kc}")
        if self.l < 1:
            raise ParameterError(f"need L >= 1, got L={self.l}")
        FieldConfig(self.q)  # primality

    @classmethod
    def with_default_q(cls, k: int, u: int, kc: int, l: int) -> ProblemParams:
        return cls(k, u, kc, default_modulus(k, u), l)

    @property
    def field(self) -> FieldConfig:
        return FieldConfig(self.q)

    @property
    def users(self) -> range:
        return range(1, self.k + 1)

    def check_scheme(self, scheme: str) -> None:
        if scheme not in SCHEMES:
            raise ParameterError(f"unknown scheme {scheme!r}")
        if scheme == "single" and self.kc != 1:
            raise ParameterError(f"scheme 'single' needs Kc = 1, got Kc={self.kc}")
        if scheme == "multi" and not 2 <= self.kc < self.u:
            raise ParameterError(
                f"scheme 'multi' needs 2 <= Kc < U, got Kc={self.kc}, U={self.u}; "
                f"Kc >= U is not covered")
        need = min_modulus(scheme, self.k, self.u)
        if self.q < need:
            raise ParameterError(f"q={self.q} below the minimum {need} for scheme {scheme!r}")

    def block_size(self, scheme: str) -> int:
        """Symbols per sub-key: U for single/baseline, U-1 for multi."""
        return self.u - 1 if scheme == "multi" else self.u

    def padded_length(self, scheme: str) -> int:
        b = self.block_size(scheme)
        return -(-self.l // b) * b

    def to_dict(self) -> dict:
        return {"k": self.k, "u": self.u, "kc": self.kc, "q": self.q, "l": self.l}


@dataclass(frozen=True)
class DemandMatrix:
    f: Matrix

    @classmethod
    def from_rows(cls, rows, q: int) -> DemandMatrix:
        return cls(Matrix.from_rows(rows, q))

    @property
    def kc(self) -> int:
        return self.f.rows

    @property
    def k(self) -> int:
        return self.f.cols

    @property
    def q(self) -> int:
        return self.f.q

    def row(self, n: int) -> list[int]:
        return self.f.row(n)

    def coefficient(self, n: int, user: int) -> int:
        return self.f[n, user - 1]

    def restricted_row(self, n: int, survivors) -> list[int]:
        """Row n with coefficients of users outside ``survivors`` zeroed."""
        return [a if (i + 1) in survivors else 0 for i, a in enumerate(self.f.row(n))]

    def rows(self) -> list[list[int]]:
        return self.f.to_rows()

    def apply(self, inputs, survivors=None) -> list[list[int]]:
        """Plaintext demand output F|_{survivors} W|_{survivors}, one row per combination."""
        survivors = set(range(1, self.k + 1)) if survivors is None else set(survivors)
        q = self.q
        length = len(inputs[0])
        out = []
        for n in range(self.kc):
            acc = [0] * length
            for i in sorted(survivors):
                a = self.f[n, i - 1]
                if a:
                    for s, w in enumerate(inputs[i - 1]):
                        acc[s] += a * w
            out.append([v % q for v in acc])
        return out

    def digest(self, salt: bytes) -> str:
        payload = json.dumps(self.rows()).encode()
        return hashlib.sha256(salt + payload).hexdigest()


def validate_demand(f: DemandMatrix, p: ProblemParams) -> DemandMatrix:
    if (f.kc, f.k) != (p.kc, p.k):
        raise RankDeficient(f"demand is {f.kc}x{f.k}, expected {p.kc}x{p.k}")
    if f.q != p.q:
        raise RankDeficient(f"demand over GF({f.q}) but instance over GF({p.q})")
    if rank(f.f) < f.kc:
        raise RankDeficient(f"demand rank {rank(f.f)} < Kc={f.kc}")
    if f.kc == 1 and any(v == 0 for v in f.f.entries):
        raise ZeroEntryForSingleScheme("with Kc = 1 every coefficient must be nonzero")
    for j in range(f.k):
        if all(v == 0 for v in f.f.column(j)):
            raise ZeroColumn(f"user {j + 1} has only zero coefficients")
    return f


def sample_demand(p: ProblemParams, rng, nonzero: bool = False, max_tries: int = 10_000) -> DemandMatrix:
    """Uniform i.i.d. entries, redrawn until the demand is valid.

    ``nonzero`` additionally rejects any zero coefficient.
    """
    q = p.q
    for _ in range(max_tries):
        rows = [[rng.randrange(q) for _ in range(p.k)] for _ in range(p.kc)]
        if nonzero and any(v == 0 for r in rows for v in r):
            continue
        d = DemandMatrix.from_rows(rows, q)
        try:
            return validate_demand(d, p)
        except (RankDeficient, ZeroColumn, ZeroEntryForSingleScheme):
            continue
    raise ParameterError(f"could not sample a valid demand in {max_tries} tries (q={q} too small?)")


def sample_inputs(p: ProblemParams, rng, length: int | None = None) -> list[list[int]]:
    length = p.l if length is None else length
    return [p.field.random_vector(rng, length) for _ in range(p.k)]


def pad_inputs(inputs, length: int) -> list[list[int]]:
    out = []
    for w in inputs:
        if len(w) > length:
            raise ParameterError(f"input of length {len(w)} exceeds padded length {length}")
        out.append(list(w) + [0] * (length - len(w)))
    return out


@dataclass(frozen=True)
class DropoutSchedule:
    u1: frozenset
    u2: frozenset

    def __init__(self, u1, u2=None):
        u1 = frozenset(u1)
        object.__setattr__(self, "u1", u1)
        object.__setattr__(self, "u2", u1 if u2 is None else frozenset(u2))

    def validate(self, k: int, u: int) -> DropoutSchedule:
        if not self.u1 <= frozenset(range(1, k + 1)):
            raise ScheduleError(f"u1={sorted(self.u1)} not within users 1..{k}")
        if not self.u2 <= self.u1:
            raise ScheduleError(f"u2={sorted(self.u2)} not a subset of u1={sorted(self.u1)}")
        if len(self.u2) < u:
            raise ScheduleError(f"only {len(self.u2)} users survive round 2, need U={u}")
        return self

    @classmethod
    def none_dropped(cls, k: int) -> DropoutSchedule:
        return cls(range(1, k + 1))

    def to_dict(self) -> dict:
        return {"u1": sorted(self.u1), "u2": sorted(self.u2)}


@dataclass
class Transcript:
    """Everything the server sent and received in one run.

    ``round1_messages`` holds users in u1, ``round2_answers`` users in u2:
    messages of users who dropped never arrive.
    """

    scheme: str
    params: dict
    demand_digest: str
    seed: int | None
    round1_queries: dict = field(default_factory=dict)
    u1: list = field(default_factory=list)
    round1_messages: dict = field(default_factory=dict)
    round2_queries: dict = field(default_factory=dict)
    round2_answers: dict = field(default_factory=dict)
    u2: list = field(default_factory=list)
    decoded: list | None = None
    error: dict | None = None
    demand: list | None = None  # cleartext F, only with the debug flag
    schema_version: int = SCHEMA_VERSION

    def to_json_dict(self) -> dict:
        def keyed(d):
            return {str(k): v for k, v in sorted(d.items())}

        out = {
            "schema_version": self.schema_version,
            "scheme": self.scheme,
            "params": self.params,
            "demand_digest": self.demand_digest,
            "round1_queries": keyed(self.round1_queries),
            "u1": sorted(self.u1),
            "round1_messages": keyed(self.round1_messages),
            "round2_queries": keyed(self.round2_queries),
            "round2_answers": keyed(self.round2_answers),
            "u2": sorted(self.u2),
            "decoded": self.decoded,
            "seed": self.seed,
        }
        if self.error is not None:
            out["error"] = self.error
        if self.demand is not None:
            out["demand"] = self.demand
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=1)

    @classmethod
    def from_json(cls, text: str) -> Transcript:
        d = json.loads(text)

        def unkey(m):
            return {int(k): v for k, v in m.items()}

        return cls(
            scheme=d["scheme"], params=d["params"], demand_digest=d["demand_digest"],
            seed=d["seed"], round1_queries=unkey(d["round1_queries"]), u1=d["u1"],
            round1_messages=unkey(d["round1_messages"]),
            round2_queries=unkey(d["round2_queries"]),
            round2_answers=unkey(d["round2_answers"]), u2=d["u2"], decoded=d["decoded"],
            error=d.get("error"), demand=d.get("demand"),
            schema_version=d["schema_version"],
        )


@dataclass(frozen=True)
class RateReport:
    scheme: str
    r1: Fraction
    r2: Fraction
    r1_unpadded: Fraction
    r2_unpadded: Fraction
    l: int
    l_padded: int
    kc: int
    u: int

    @property
    def converse(self) -> tuple[Fraction, Fraction]:
        return Fraction(1), Fraction(self.kc, self.u)

    @property
    def gap(self) -> Fraction:
        return self.r2 / self.converse[1]

    @property
    def padding_distorts(self) -> bool:
        return self.l != self.l_padded

    CSV_HEADER = ("schema_version,scheme,kc,u,l,l_padded,r1,r2,r1_unpadded,r2_unpadded,"
                  "r1_converse,r2_converse,gap")

    def csv_row(self) -> str:
        c1, c2 = self.converse
        return ",".join(str(v) for v in (
            SCHEMA_VERSION, self.scheme, self.kc, self.u, self.l, self.l_padded, self.r1,
            self.r2, self.r1_unpadded, self.r2_unpadded, c1, c2, self.gap))

    def to_dict(self) -> dict:
        c1, c2 = self.converse
        return {"scheme": self.scheme, "r1": str(self.r1), "r2": str(self.r2),
                "r1_unpadded": str(self.r1_unpadded), "r2_unpadded": str(self.r2_unpadded),
                "l": self.l, "l_padded": self.l_padded, "converse": [str(c1), str(c2)],
                "gap": str(self.gap), "rates": [float(self.r1), float(self.r2)]}


def compute_rates(t: Transcript) -> RateReport:
    """Rates from recorded symbol counts only: max |X_i| / L and max |Y_i| / L."""
    if t.error is not None:
        raise IncompleteTranscript(f"run failed at {t.error.get('stage')}")
    if not t.round1_messages or not t.round2_answers or t.decoded is None:
        raise IncompleteTranscript("transcript lacks round-1 messages, round-2 answers or output")
    l, l_pad = t.params["l"], t.params["l_padded"]
    x_max = max(len(v) for v in t.round1_messages.values())
    y_max = max(len(v) for v in t.round2_answers.values())
    return RateReport(
        scheme=t.scheme,
        r1=Fraction(x_max, l_pad), r2=Fraction(y_max, l_pad),
        r1_unpadded=Fraction(x_max, l), r2_unpadded=Fraction(y_max, l),
        l=l, l_padded=l_pad, kc=t.params["kc"], u=t.params["u"],
    )
