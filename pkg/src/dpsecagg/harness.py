"""Protocol orchestration: full runs, dropout models, sweeps and rate tables."""

from __future__ import annotations

import itertools
import logging
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import ConverseViolation, ParameterError, ProtocolFailure, ScheduleError, SecAggError
from .model import (
    DemandMatrix,
    DropoutSchedule,
    ProblemParams,
    RateReport,
    Transcript,
    compute_rates,
    default_modulus,
    pad_inputs,
    sample_demand,
    sample_inputs,
    validate_demand,
)
from .scheme_baseline import BaselineRunner
from .scheme_multi import MultiRunner
from .scheme_single import SingleRunner

log = logging.getLogger(__name__)

CONTROLS = (None, "no-mask", "reuse-mask", "leak-demand")


def make_runner(scheme: str, p: ProblemParams, f: DemandMatrix, rng, control=None):
    if control not in CONTROLS:
        raise ParameterError(f"unknown control {control!r}")
    if scheme == "single":
        return SingleRunner(p, f.row(0), rng, control=control)
    if scheme == "multi":
        return MultiRunner(p, f, rng, control=control)
    if scheme == "baseline":
        return BaselineRunner(p, f, rng, control=control)
    raise ParameterError(f"unknown scheme {scheme!r}")


# --- dropout models --------------------------------------------------------

@dataclass(frozen=True)
class DropoutModel:
    """How schedules are produced: ``none``, ``fixed``, ``random``, ``exhaustive`` or ``worst``."""

    mode: str = "none"
    u1: frozenset | None = None
    u2: frozenset | None = None
    density: float = 0.0

    @classmethod
    def parse(cls, text: str) -> DropoutModel:
        """``none`` | ``fixed:1,2,3;1,2`` | ``random:0.3`` | ``exhaustive`` | ``worst``."""
        text = text.strip()
        if text in ("none", "exhaustive", "worst"):
            return cls(text)
        if text.startswith("fixed:"):
            parts = text[len("fixed:"):].split(";")
            u1 = frozenset(int(v) for v in parts[0].split(",") if v)
            u2 = frozenset(int(v) for v in parts[1].split(",") if v) if len(parts) > 1 else u1
            return cls("fixed", u1, u2)
        if text.startswith("random:"):
            return cls("random", density=float(text[len("random:"):]))
        raise ParameterError(f"bad dropout model {text!r}")

    def schedules(self, k: int, u: int, rng=None, scheme: str | None = None, p=None):
        if self.mode == "none":
            yield DropoutSchedule.none_dropped(k)
        elif self.mode == "fixed":
            yield DropoutSchedule(self.u1, self.u2).validate(k, u)
        elif self.mode == "random":
            yield random_schedule(k, u, self.density, rng)
        elif self.mode == "exhaustive":
            yield from all_schedules(k, u)
        elif self.mode == "worst":
            if p is None or scheme is None:
                raise ParameterError("worst-case schedules need the instance and scheme")
            yield adversarial_worst(p, scheme).schedule
        else:
            raise ParameterError(f"unknown dropout mode {self.mode!r}")


def random_schedule(k: int, u: int, density: float, rng) -> DropoutSchedule:
    """Each user drops independently with probability ``density`` per round,
    except that a drop which would leave fewer than U survivors is skipped."""
    def thin(survivors):
        alive = list(survivors)
        for i in sorted(survivors):
            if len(alive) > u and rng.random() < density:
                alive.remove(i)
        return alive

    u1 = thin(range(1, k + 1))
    return DropoutSchedule(u1, thin(u1)).validate(k, u)


def survivor_sets(k: int, u: int):
    """Every u1 with |u1| >= U, largest first."""
    for size in range(k, u - 1, -1):
        for c in itertools.combinations(range(1, k + 1), size):
            yield frozenset(c)


def all_schedules(k: int, u: int):
    for u1 in survivor_sets(k, u):
        members = sorted(u1)
        for size in range(len(members), u - 1, -1):
            for u2 in itertools.combinations(members, size):
                yield DropoutSchedule(u1, u2)


# --- a single run ----------------------------------------------------------

def _fail(t: Transcript, stage: str, exc: Exception):
    t.error = {"stage": stage, "type": type(exc).__name__, "message": str(exc)}
    raise ProtocolFailure(stage, str(exc), t) from exc


def run_protocol(scheme: str, p: ProblemParams, f: DemandMatrix, w, schedule: DropoutSchedule,
                 rng, *, seed=None, control=None, debug_demand: bool = False,
                 check: bool = True) -> tuple[Transcript, RateReport]:
    """One complete two-round run.

    The decoded output is compared with the plaintext demand and the rates
    with the converse before the transcript is returned; a failure raises
    ``ProtocolFailure`` carrying the partial transcript and failing stage.
    """
    l_pad = p.padded_length(scheme)
    t = Transcript(scheme=scheme, params={**p.to_dict(), "l_padded": l_pad, "scheme": scheme},
                   demand_digest="", seed=seed)
    try:
        p.check_scheme(scheme)
        validate_demand(f, p)
        schedule.validate(p.k, p.u)
        if len(w) != p.k:
            raise ParameterError(f"{len(w)} inputs for K={p.k} users")
        inputs = pad_inputs(w, l_pad)
    except SecAggError as exc:
        _fail(t, "validate", exc)
    t.demand_digest = f.digest(rng.randbytes(16))
    if debug_demand:
        t.demand = f.rows()
    u1, u2 = schedule.u1, schedule.u2

    try:
        runner = make_runner(scheme, p, f, rng, control)
    except SecAggError as exc:
        _fail(t, "setup", exc)
    try:
        q1, x_all = runner.round1(inputs)
    except SecAggError as exc:
        _fail(t, "round1", exc)
    t.round1_queries = q1
    t.u1 = sorted(u1)
    t.round1_messages = {i: x_all[i] for i in sorted(u1)}
    try:
        q2, y_all = runner.round2(u1)
    except SecAggError as exc:
        _fail(t, "round2", exc)
    t.round2_queries = q2
    t.u2 = sorted(u2)
    t.round2_answers = {i: y_all[i] for i in sorted(u2)}
    try:
        decoded = runner.decode(t.round1_messages, t.round2_answers, u1)
    except SecAggError as exc:
        _fail(t, "decode", exc)
    t.decoded = [row[:p.l] for row in decoded]

    if check:
        expected = f.apply(inputs, u1)
        if decoded != expected:
            _fail(t, "check", ValueError("decoded output differs from the plaintext demand"))
    try:
        report = compute_rates(t)
        if check:
            converse_check(report)
    except SecAggError as exc:
        _fail(t, "rates", exc)
    return t, report


def converse_check(report: RateReport) -> Fraction:
    """Assert r1 >= 1 and r2 >= Kc/U; return the gap r2 / (Kc/U)."""
    c1, c2 = report.converse
    if report.r1 < c1 or report.r2 < c2:
        raise ConverseViolation(
            f"{report.scheme}: rates ({report.r1}, {report.r2}) beat the converse ({c1}, {c2})")
    return report.gap


# --- exhaustive sweeps -----------------------------------------------------

@dataclass
class SweepReport:
    scheme: str
    params: dict
    runs: int = 0
    passed: int = 0
    converse_violations: int = 0
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.runs > 0 and self.passed == self.runs and self.converse_violations == 0

    def merge(self, other: SweepReport) -> None:
        self.runs += other.runs
        self.passed += other.passed
        self.converse_violations += other.converse_violations
        self.failures.extend(other.failures)

    def to_dict(self) -> dict:
        return {"scheme": self.scheme, "params": self.params, "runs": self.runs,
                "passed": self.passed, "converse_violations": self.converse_violations,
                "failures": self.failures[:20], "ok": self.ok}


def _sweep_trial(scheme: str, p: ProblemParams, seed, trial: int) -> SweepReport:
    rng = random.Random(f"sweep:{seed}:{trial}")
    f = sample_demand(p, rng, nonzero=scheme == "single")
    l_pad = p.padded_length(scheme)
    inputs = pad_inputs(sample_inputs(p, rng), l_pad)
    rep = SweepReport(scheme, p.to_dict())
    for u1 in survivor_sets(p.k, p.u):
        # fresh server randomness and keys for every u1; u2 only changes which answers arrive
        runner = make_runner(scheme, p, f, rng)
        _, x_all = runner.round1(inputs)
        x = {i: x_all[i] for i in u1}
        _, y_all = runner.round2(u1)
        expected = f.apply(inputs, u1)
        members = sorted(u1)
        for size in range(len(members), p.u - 1, -1):
            for u2 in itertools.combinations(members, size):
                rep.runs += 1
                y = {j: y_all[j] for j in u2}
                report = RateReport(scheme, Fraction(max(map(len, x.values())), l_pad),
                                    Fraction(max(map(len, y.values())), l_pad), Fraction(0), Fraction(0),
                                    p.l, l_pad, p.kc, p.u)
                try:
                    converse_check(report)
                except ConverseViolation:
                    rep.converse_violations += 1
                try:
                    out = runner.decode(x, y, u1)
                except SecAggError as exc:
                    out = repr(exc)
                if out == expected:
                    rep.passed += 1
                else:
                    rep.failures.append({"trial": trial, "u1": members, "u2": list(u2)})
    return rep


def sweep(scheme: str, p: ProblemParams, trials: int = 20, seed=0, workers: int = 1) -> SweepReport:
    """Every (u1, u2) schedule on ``trials`` random (F, W) instances."""
    p.check_scheme(scheme)
    total = SweepReport(scheme, p.to_dict())
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(_sweep_trial, [scheme] * trials, [p] * trials, [seed] * trials,
                             range(trials))
            for part in parts:
                total.merge(part)
    else:
        for trial in range(trials):
            total.merge(_sweep_trial(scheme, p, seed, trial))
    log.info("sweep %s %s: %d/%d", scheme, p.to_dict(), total.passed, total.runs)
    return total


# --- worst-case schedules --------------------------------------------------

@dataclass(frozen=True)
class WorstCase:
    schedule: DropoutSchedule
    load: int  # max round-2 symbols sent by one user
    loads: dict  # sorted u1 tuple -> max per-user round-2 symbols
    constant: bool  # True if the load does not depend on u1


def adversarial_worst(p: ProblemParams, scheme: str, seed=0) -> WorstCase:
    """Measure the per-user round-2 load of every u1 and return the heaviest.

    Loads are measured on real runs (zero inputs), not taken from formulas.
    """
    p.check_scheme(scheme)
    rng = random.Random(f"worst:{seed}")
    f = sample_demand(p, rng, nonzero=scheme == "single")
    inputs = [[0] * p.padded_length(scheme) for _ in range(p.k)]
    loads = {}
    for u1 in survivor_sets(p.k, p.u):
        runner = make_runner(scheme, p, f, rng)
        runner.round1(inputs)
        _, y = runner.round2(u1)
        loads[tuple(sorted(u1))] = max(len(v) for v in y.values())
    worst = max(loads, key=lambda key: (loads[key], len(key)))
    constant = len(set(loads.values())) == 1
    if not constant:
        log.warning("round-2 load depends on u1 for %s: %s", scheme, sorted(set(loads.values())))
    return WorstCase(DropoutSchedule(worst), loads[worst], loads, constant)


# --- rate tables -----------------------------------------------------------

@dataclass(frozen=True)
class RateRegionPoint:
    kc: int
    u: int
    scheme: str
    r1: Fraction
    r2: Fraction

    @property
    def converse(self) -> tuple[Fraction, Fraction]:
        return Fraction(1), Fraction(self.kc, self.u)

    @property
    def gap(self) -> Fraction:
        return self.r2 / self.converse[1]


def measure_rates(scheme: str, k: int, u: int, kc: int, q: int | None = None, seed=0) -> RateReport:
    """Rates of one no-dropout run at the scheme's natural block length."""
    q = default_modulus(k, u) if q is None else q
    l = u - 1 if scheme == "multi" else u
    p = ProblemParams(k, u, kc, q, l)
    rng = random.Random(f"rates:{seed}:{scheme}:{k}:{u}:{kc}")
    f = sample_demand(p, rng, nonzero=scheme == "single")
    _, report = run_protocol(scheme, p, f, sample_inputs(p, rng), DropoutSchedule.none_dropped(k), rng)
    return report


def rate_sweep(k: int, u: int, kc_range, q: int | None = None, seed=0) -> list[RateRegionPoint]:
    """Measured achievable points per Kc: the multi scheme (single when Kc = 1) and the baseline."""
    points = []
    for kc in kc_range:
        if kc == 1:
            primary = "single"
        elif 2 <= kc < u:
            primary = "multi"
        else:
            raise ParameterError(f"Kc={kc} outside the covered regimes for U={u}")
        for scheme in (primary, "baseline"):
            r = measure_rates(scheme, k, u, kc, q, seed)
            points.append(RateRegionPoint(kc, u, scheme, r.r1, r.r2))
    return points


RATES_CSV_HEADER = "kc,r1_multi,r2_multi,r1_baseline,r2_baseline,r1_converse,r2_converse,gap"


def rates_csv(points) -> str:
    by_kc = {}
    for pt in points:
        by_kc.setdefault(pt.kc, {})["baseline" if pt.scheme == "baseline" else "primary"] = pt
    lines = [f"# schema_version=1", RATES_CSV_HEADER]
    for kc in sorted(by_kc):
        a, b = by_kc[kc]["primary"], by_kc[kc]["baseline"]
        c1, c2 = a.converse
        cells = [kc, a.r1, a.r2, b.r1, b.r2, c1, c2, a.gap]
        lines.append(",".join(_num(v) for v in cells))
    return "\n".join(lines) + "\n"


def _num(v) -> str:
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else repr(float(v))
    return str(v)
