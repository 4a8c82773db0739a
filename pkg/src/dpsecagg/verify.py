"""Executable decodability, security and privacy checks.

Two families live here. The exact checks freeze one realization of the
server's query randomness, recover the server view as an explicit linear map
``view = A W + B R`` by probing, and decide security by a rank comparison;
at tiny sizes they also enumerate everything and compute mutual information
from integer counts. The sampled check (``view_distribution_compare``) is a
chi-square sanity test and is labelled non-exact in its verdict.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .codes import Matrix, kernel_basis, rank
from .errors import (
    EnumerationTooLarge,
    InsufficientSamples,
    NonlinearityDetected,
    ParameterError,
)
from .harness import make_runner, random_schedule, sweep
from .model import DemandMatrix, DropoutSchedule, ProblemParams, sample_demand, validate_demand
from .scheme_multi import MultiRunner, build_retrieval_queries, default_points, draw_functionals
from .scheme_single import SingleRunner, queries_for

PASS, FAIL, SKIPPED = "PASS", "FAIL", "SKIPPED"


@dataclass
class Verdict:
    check: str
    status: str
    detail: dict = field(default_factory=dict)
    exact: bool = True

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def to_dict(self) -> dict:
        return {"check": self.check, "status": self.status, "exact": self.exact, "detail": self.detail}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, default=str)


# --- linear views ----------------------------------------------------------

@dataclass(frozen=True)
class LinearViewDecomposition:
    """``view = A W + B R`` for one frozen query realization and schedule."""

    a: Matrix
    b: Matrix
    context: dict

    @property
    def q(self) -> int:
        return self.a.q

    def view(self, w, r) -> list[int]:
        q = self.q
        vw = self.a.apply(w)
        vr = self.b.apply(r) if self.b.cols else [0] * self.b.rows
        return [(x + y) % q for x, y in zip(vw, vr)]


def extract_linear_view(fn, n_w: int, n_r: int, q: int, rng=None, probes: int = 5,
                        context: dict | None = None) -> LinearViewDecomposition:
    """Recover A and B from ``fn(w, r)`` by feeding basis vectors.

    The zero probe must give the zero view, and ``probes`` random inputs are
    replayed against the recovered matrices before they are returned.
    """
    zero_w, zero_r = [0] * n_w, [0] * n_r
    base = fn(zero_w, zero_r)
    if any(base):
        raise NonlinearityDetected("view of the all-zero input is not zero")
    dim = len(base)

    def unit(n, k):
        v = [0] * n
        v[k] = 1
        return v

    cols_a = [fn(unit(n_w, k), zero_r) for k in range(n_w)]
    cols_b = [fn(zero_w, unit(n_r, k)) for k in range(n_r)]
    d = LinearViewDecomposition(Matrix.from_columns(cols_a, q, rows=dim),
                                Matrix.from_columns(cols_b, q, rows=dim), dict(context or {}))
    rng = rng or random.Random(0)
    for _ in range(probes):
        w = [rng.randrange(q) for _ in range(n_w)]
        r = [rng.randrange(q) for _ in range(n_r)]
        if fn(w, r) != d.view(w, r):
            raise NonlinearityDetected("a random probe disagrees with the recovered linear map")
    return d


def demand_map(f: DemandMatrix, u1, length: int) -> Matrix:
    """The map W -> F|_{u1} W on user-major stacked inputs."""
    rows = []
    for n in range(f.kc):
        for s in range(length):
            row = [0] * (f.k * length)
            for i in u1:
                row[(i - 1) * length + s] = f.coefficient(n, i)
            rows.append(row)
    return Matrix.from_rows(rows, f.q, cols=f.k * length)


def _unstack(flat, parts: int, width: int):
    return [list(flat[i * width:(i + 1) * width]) for i in range(parts)]


class FrozenRun:
    """One scheme instance with its query randomness drawn once and then held fixed.

    Calling ``messages(w, r)`` replays both rounds with inputs ``w`` and key
    material ``r`` (both flat) and returns the round-1 and round-2 messages
    of every user in u1.
    """

    def __init__(self, scheme: str, p: ProblemParams, f: DemandMatrix, schedule: DropoutSchedule,
                 rng, control=None, state=None):
        p.check_scheme(scheme)
        self.scheme, self.p, self.f, self.schedule, self.control = scheme, p, f, schedule, control
        self.length = p.padded_length(scheme)
        self.u1 = sorted(schedule.u1)
        kl = p.k * self.length
        if scheme == "single":
            self.runner = SingleRunner(p, f.row(0), rng, control=control, state=state)
            self.n_r = 0 if control == "no-mask" else kl
            self.context = {"t": self.runner.state.t, "queries": dict(self.runner.state.q1)}
        elif scheme == "baseline":
            self.runner = make_runner("baseline", p, f, rng, control)
            self.n_r = 0 if control == "no-mask" else f.kc * kl
            self.context = {"t": [rep.state.t for rep in self.runner.reps]}
        else:
            self.runner = make_runner("multi", p, f, rng, control)
            self.runner.round2(schedule.u1)
            self.phis = dict(self.runner.state.phis)
            self.n_masks = len(self.runner.material.masks.symbols)
            self.n_r = 0 if control == "no-mask" else kl + self.n_masks
            self.context = {"phis": {f"{n},{b}": v for (n, b), v in self.phis.items()}}
        self.n_w = kl

    def messages(self, w, r):
        p, length = self.p, self.length
        inputs = _unstack(w, p.k, length)
        kl = p.k * length
        u1 = self.schedule.u1
        if self.scheme == "single":
            if self.n_r:
                self.runner.set_keys(_unstack(r, p.k, length))
            _, x = self.runner.round1(inputs)
            _, y = self.runner.round2(u1)
        elif self.scheme == "baseline":
            if self.n_r:
                for n, rep in enumerate(self.runner.reps):
                    rep.set_keys(_unstack(r[n * kl:(n + 1) * kl], p.k, length))
            _, x = self.runner.round1(inputs)
            _, y = self.runner.round2(u1)
        else:
            if self.n_r:
                self.runner.set_randomness(_unstack(r[:kl], p.k, length), r[kl:])
            else:
                # fresh all-zero pool so each replay may bind its slots again
                self.runner.set_randomness([[0] * length for _ in p.users], [0] * self.n_masks)
            _, x = self.runner.round1(inputs)
            _, y = self.runner.round2(u1, phis=self.phis)
        return x, y

    def view_fn(self, round1_users, round2_users):
        def fn(w, r):
            x, y = self.messages(w, r)
            out = []
            for i in round1_users:
                out.extend(x[i])
            for j in round2_users:
                out.extend(y[j])
            return out
        return fn

    def server_view(self, rng=None, scope: str = "u1", probes: int = 5) -> LinearViewDecomposition:
        """Security view: X over u1 (or every user with ``scope="all"``) and Y over all of u1.

        Using every u1 answer rather than only u2 gives the server at least as
        much as any real schedule does.
        """
        r1 = self.u1 if scope == "u1" else list(self.p.users)
        ctx = {**self.context, "u1": self.u1, "scope": scope}
        return extract_linear_view(self.view_fn(r1, self.u1), self.n_w, self.n_r, self.p.q, rng,
                                   probes, ctx)

    def decode_view(self, rng=None, probes: int = 5) -> LinearViewDecomposition:
        """What a decoder actually holds: X over u1 and Y over u2."""
        ctx = {**self.context, "u1": self.u1, "u2": sorted(self.schedule.u2)}
        return extract_linear_view(self.view_fn(self.u1, sorted(self.schedule.u2)), self.n_w, self.n_r,
                                   self.p.q, rng, probes, ctx)

    def demand_map(self) -> Matrix:
        return demand_map(self.f, self.schedule.u1, self.length)


# --- security: rank form ---------------------------------------------------

def security_rank_check(d: LinearViewDecomposition, dmap: Matrix) -> Verdict:
    """PASS iff A k lies in the column space of B for every k in ker(dmap)."""
    ker = kernel_basis(dmap)
    rb = rank(d.b)
    if ker:
        ak = d.a @ Matrix.from_columns(ker, d.q, rows=d.a.cols)
        joint = rank(ak.hstack(d.b))
    else:
        joint = rb
    detail = {"rank_b": rb, "rank_joint": joint, "kernel_dim": len(ker), "view_dim": d.a.rows}
    return Verdict("security", PASS if joint == rb else FAIL, detail)


def security_realizations(scheme: str, p: ProblemParams, trials: int = 100, seed=0, control=None,
                          scope: str = "u1", density: float = 0.5) -> Verdict:
    """Rank check over ``trials`` independent (demand, schedule, query) draws."""
    failures = []
    for trial in range(trials):
        rng = random.Random(f"security:{seed}:{scheme}:{trial}")
        f = sample_demand(p, rng, nonzero=scheme == "single")
        schedule = random_schedule(p.k, p.u, density, rng)
        run = FrozenRun(scheme, p, f, schedule, rng, control=control)
        v = security_rank_check(run.server_view(rng, scope), run.demand_map())
        if not v.passed:
            failures.append({"trial": trial, "u1": run.u1, **v.detail})
    detail = {"scheme": scheme, "params": p.to_dict(), "realizations": trials, "failed": len(failures),
              "failures": failures[:10], "control": control, "scope": scope}
    return Verdict("security", FAIL if failures else PASS, detail)


# --- privacy: query uniformity ----------------------------------------------

def _is_uniform(counter: Counter, support: int) -> bool:
    return len(counter) == support and len(set(counter.values())) == 1


def privacy_query_uniformity(scheme: str, p: ProblemParams, demands, users=None, u1=None,
                             control=None, component: int = 0, seed=0,
                             max_enumeration: int = 1_000_000) -> Verdict:
    """Enumerate the server's query randomness and histogram what each user receives.

    single: all t in GF(q)*; the Q_{1,i} multiset must be every nonzero
    element once. multi: all values of one random functional phi_j over
    GF(q)^K; each query component must hit every vector of GF(q)^K equally.
    In both cases histograms must not depend on the demand.
    """
    q = p.q
    users = list(p.users) if users is None else list(users)
    hists: dict = {}
    if scheme == "single":
        for d_idx, f in enumerate(demands):
            row = f.row(0)
            for t in range(1, q):
                st = queries_for(row, 1 if control == "leak-demand" else t, q)
                for i in users:
                    hists.setdefault((d_idx, 0, i), Counter())[st.q1[i]] += 1
        support = q - 1
        size = q - 1
    elif scheme == "multi":
        size = q ** p.k
        if size > max_enumeration:
            raise EnumerationTooLarge(f"{size} functionals exceed the limit {max_enumeration}")
        points = default_points(p)
        lp = len(points.betas)
        if not 0 <= component < lp:
            raise ParameterError(f"component {component} outside 0..{lp - 1}")
        u1 = frozenset(p.users if u1 is None else u1)
        rng = random.Random(f"uniformity:{seed}")
        others = draw_functionals(rng, lp, p.k, q)
        grid = np.array(np.meshgrid(*[np.arange(q)] * p.k, indexing="ij")).reshape(p.k, -1).T
        for d_idx, f in enumerate(demands):
            for n in range(f.kc):
                theta = f.restricted_row(n, u1)
                for phi in grid.tolist():
                    phis = [list(v) for v in others]
                    phis[component] = [0] * p.k if control == "leak-demand" else phi
                    qs = build_retrieval_queries(theta, points, phis, users, n=n)
                    for i in users:
                        hists.setdefault((d_idx, n, i), Counter())[qs[i].components[component]] += 1
        support = size
    else:
        raise ParameterError(f"query uniformity is defined for 'single' and 'multi', not {scheme!r}")

    uniform = {f"{d}:{n}:{i}": _is_uniform(h, support) for (d, n, i), h in hists.items()}
    per_user = {}
    for (d, n, i), h in hists.items():
        per_user.setdefault((n, i), []).append(h)
    identical = all(all(h == hs[0] for h in hs) for hs in per_user.values())
    ok = all(uniform.values()) and identical
    detail = {"scheme": scheme, "params": p.to_dict(), "demands": len(demands), "enumerated": size,
              "all_uniform": all(uniform.values()), "identical_across_demands": identical,
              "non_uniform": [k for k, v in uniform.items() if not v][:10], "control": control}
    return Verdict("privacy", PASS if ok else FAIL, detail)


# --- exhaustive mutual information -------------------------------------------

@dataclass
class MiReport:
    """Entropies and mutual informations in base-q units.

    ``*_exact_zero`` flags come from integer count identities, so a True
    flag is an exact zero rather than a small float.
    """

    scheme: str
    params: dict
    states: int
    security_mi: float
    security_exact_zero: bool
    privacy_mi: dict
    privacy_exact_zero: dict
    decode_entropy: float
    decode_exact_zero: bool
    control: str | None = None

    @property
    def passed(self) -> bool:
        return self.security_exact_zero and self.decode_exact_zero and all(self.privacy_exact_zero.values())

    def to_dict(self) -> dict:
        return {"scheme": self.scheme, "params": self.params, "states": self.states,
                "security": {"mi": self.security_mi, "exact_zero": self.security_exact_zero},
                "privacy": {str(i): {"mi": self.privacy_mi[i], "exact_zero": self.privacy_exact_zero[i]}
                            for i in sorted(self.privacy_mi)},
                "decodability": {"entropy": self.decode_entropy, "exact_zero": self.decode_exact_zero},
                "control": self.control, "passed": self.passed}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _space(q: int, n: int) -> np.ndarray:
    """Every vector of GF(q)^n as rows, in little-endian counting order."""
    if n == 0:
        return np.zeros((1, 0), dtype=np.int64)
    idx = np.arange(q ** n, dtype=np.int64)
    return np.stack([(idx // q ** j) % q for j in range(n)], axis=1)


def _row_ids(arr: np.ndarray, q: int) -> np.ndarray:
    """Compress each row to a small integer id (equal rows share an id)."""
    n = arr.shape[1]
    if n == 0:
        return np.zeros(arr.shape[0], dtype=np.int64)
    if n * math.log2(q) < 62:
        keys = arr @ (q ** np.arange(n, dtype=np.int64))
    else:
        _, keys = np.unique(arr, axis=0, return_inverse=True)
    _, ids = np.unique(keys, return_inverse=True)
    return ids.reshape(-1).astype(np.int64)


def _combine(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _, ids = np.unique(a * (int(b.max()) + 1) + b, return_inverse=True)
    return ids.reshape(-1)


def _counts(ids: np.ndarray) -> np.ndarray:
    return np.bincount(ids)


def _mutual_information(x: np.ndarray, v: np.ndarray, q: int, cond: np.ndarray | None = None):
    """I(X; V | C) from equally weighted samples; returns (value, exact_zero).

    Zero iff c(x,v,c) c(c) == c(x,c) c(v,c) for every observed triple.
    """
    if cond is None:
        cond = np.zeros_like(x)
    xvc = _combine(_combine(x, v), cond)
    xc = _combine(x, cond)
    vc = _combine(v, cond)
    n_xvc, n_xc, n_vc, n_c = _counts(xvc), _counts(xc), _counts(vc), _counts(cond)
    _, first = np.unique(xvc, return_index=True)
    a = n_xvc[xvc[first]].astype(np.float64)
    num = n_xvc[xvc[first]].astype(object) * n_c[cond[first]].astype(object)
    den = n_xc[xc[first]].astype(object) * n_vc[vc[first]].astype(object)
    exact = bool(np.all(num == den))
    total = float(len(x))
    ratio = (n_xvc[xvc[first]] * n_c[cond[first]]) / (n_xc[xc[first]] * n_vc[vc[first]])
    value = 0.0 if exact else float(np.sum(a / total * np.log(ratio)) / math.log(q))
    return value, exact


def _conditional_entropy(d: np.ndarray, v: np.ndarray, q: int):
    """H(D | V); exact zero iff every view value pins one output."""
    dv = _combine(d, v)
    n_dv, n_v = _counts(dv), _counts(v)
    _, first = np.unique(dv, return_index=True)
    exact = len(first) == len(np.unique(v))
    c = n_dv[dv[first]].astype(np.float64)
    value = 0.0 if exact else float(np.sum(c / len(d) * np.log(n_v[v[first]] / c)) / math.log(q))
    return value, exact


def all_single_demands(p: ProblemParams) -> list[DemandMatrix]:
    rows = _space(p.q - 1, p.k) + 1
    return [DemandMatrix.from_rows([r], p.q) for r in rows.tolist()]


def _linear_eval(d: LinearViewDecomposition, w_space: np.ndarray, r_space: np.ndarray) -> np.ndarray:
    q = d.q
    a = np.array(d.a.to_rows(), dtype=np.int64).reshape(d.a.rows, d.a.cols)
    b = np.array(d.b.to_rows(), dtype=np.int64).reshape(d.b.rows, d.b.cols)
    vw = (w_space @ a.T) % q
    vr = (r_space @ b.T) % q
    return ((vw[:, None, :] + vr[None, :, :]) % q).reshape(-1, d.a.rows)


def _security_enumeration(p, f, schedule, control, probes):
    """Security and decodability samples for one demand, all t, W and R."""
    q = p.q
    length = p.padded_length("single")
    n_w = p.k * length
    w_space = _space(q, n_w)
    dmap = np.array(demand_map(f, schedule.u1, length).to_rows(), dtype=np.int64)
    d_ids_w = _row_ids((w_space @ dmap.T) % q, q)
    w_ids, d_ids, sec_ids, dec_ids, t_ids = [], [], [], [], []
    r_count = None
    for t in range(1, q):
        run = FrozenRun("single", p, f, schedule, random.Random(t), control=control,
                        state=queries_for(f.row(0), t, q))
        r_space = _space(q, run.n_r)
        r_count = len(r_space)
        sec = _linear_eval(run.server_view(random.Random(t), "u1", probes), w_space, r_space)
        dec = _linear_eval(run.decode_view(random.Random(t), probes), w_space, r_space)
        rep = np.repeat(np.arange(len(w_space)), len(r_space))
        w_ids.append(rep)
        d_ids.append(d_ids_w[rep])
        sec_ids.append(sec)
        dec_ids.append(dec)
        t_ids.append(np.full(len(rep), t, dtype=np.int64))
    t_all = np.concatenate(t_ids)
    sec = _combine(_row_ids(np.concatenate(sec_ids), q), t_all)
    dec = _combine(_row_ids(np.concatenate(dec_ids), q), t_all)
    return np.concatenate(w_ids), np.concatenate(d_ids), sec, dec


def _user_view_samples(p, demands, schedule, user, control, probes):
    """(demand index, user view id) over every demand, t, W_user and key set."""
    q = p.q
    length = p.padded_length("single")
    n_z = p.k * length
    f_ids, views = [], []
    w_space = _space(q, length)
    z_space = _space(q, n_z)
    for d_idx, f in enumerate(demands):
        row = f.row(0)
        for t in range(1, q):
            tt = 1 if control == "leak-demand" else t
            runner = SingleRunner(p, row, random.Random(t), state=queries_for(row, tt, q))

            def fn(w_i, z, runner=runner):
                runner.set_keys(_unstack(z, p.k, length))
                inputs = [[0] * length for _ in range(p.k)]
                inputs[user - 1] = list(w_i)
                _, x = runner.round1(inputs)
                mat = runner.material[user]
                out = list(w_i) + list(mat.own_key)
                for j in sorted(mat.shares):
                    out.extend(mat.shares[j])
                out.extend(x[user])
                if user in schedule.u1:
                    _, y = runner.round2(schedule.u1)
                    out.extend(y[user])
                return out

            d = extract_linear_view(fn, length, n_z, q, random.Random(t), probes)
            v = _linear_eval(d, w_space, z_space)
            qcol = np.full((len(v), 1), runner.state.q1[user], dtype=np.int64)
            views.append(np.hstack([v, qcol]))
            f_ids.append(np.full(len(v), d_idx, dtype=np.int64))
    return np.concatenate(f_ids), _row_ids(np.concatenate(views), q)


def mi_exhaustive(scheme: str, p: ProblemParams, demands=None, schedule: DropoutSchedule | None = None,
                  control=None, max_states: int = 5_000_000, probes: int = 3) -> MiReport:
    """Exact information quantities by enumerating every input, key and t.

    Security: I(W; server view | F W) for each demand, with t part of the
    view. Privacy: I(F; user view) per user with F uniform over ``demands``.
    Decodability: H(F W | decoder view).
    """
    if scheme != "single":
        raise EnumerationTooLarge(
            f"exhaustive enumeration is only tractable for 'single'; {scheme!r} draws "
            f"query randomness from GF(q)^(K(U-1)) per retrieval")
    p.check_scheme(scheme)
    q = p.q
    demands = all_single_demands(p) if demands is None else [validate_demand(f, p) for f in demands]
    schedule = DropoutSchedule.none_dropped(p.k) if schedule is None else schedule.validate(p.k, p.u)
    length = p.padded_length(scheme)
    n_r = 0 if control == "no-mask" else p.k * length
    per_demand = (q - 1) * q ** (p.k * length + n_r)
    per_user = len(demands) * (q - 1) * q ** (length + p.k * length)
    states = len(demands) * per_demand + p.k * per_user
    if per_demand > max_states or per_user > max_states:
        raise EnumerationTooLarge(f"{max(per_demand, per_user)} states in one enumeration exceed {max_states}")

    sec_exact, dec_exact = True, True
    sec_mi, dec_h = 0.0, 0.0
    for f in demands:
        w, d, sec, dec = _security_enumeration(p, f, schedule, control, probes)
        value, exact = _mutual_information(w, sec, q, d)
        sec_mi = max(sec_mi, value)
        sec_exact &= exact
        h, exact = _conditional_entropy(d, dec, q)
        dec_h = max(dec_h, h)
        dec_exact &= exact

    priv_mi, priv_exact = {}, {}
    for i in p.users:
        fi, v = _user_view_samples(p, demands, schedule, i, control, probes)
        priv_mi[i], priv_exact[i] = _mutual_information(fi, v, q)
    return MiReport(scheme, {**p.to_dict(), "u1": sorted(schedule.u1), "u2": sorted(schedule.u2)},
                    states, sec_mi, sec_exact, priv_mi, priv_exact, dec_h, dec_exact, control)


# --- statistical comparison ---------------------------------------------------

def _user_views(p, f, rng, control):
    runner = MultiRunner(p, f, rng, control=control)
    inputs = [p.field.random_vector(rng, runner.length) for _ in p.users]
    _, x = runner.round1(inputs)
    wire, y = runner.round2(p.users)
    mat = runner.material
    for i in p.users:
        yield i, (inputs[i - 1], mat.keys, mat.masks.symbols, wire[i], x[i], y[i])


def _view_bins(view, q: int, bins: int) -> tuple[int, int]:
    first = view[3][0]["components"][0]
    query_bin = first[0] + q * first[1]
    h = hashlib.blake2b(repr(view).encode(), digest_size=8).digest()
    return query_bin, int.from_bytes(h, "big") % bins


def _sample_chunk(p, f, seed, start, count, control, bins):
    """Histograms for samples ``start .. start+count``; depends only on the arguments."""
    q = p.q
    qb = np.zeros((p.k, q * q), dtype=np.int64)
    hb = np.zeros((p.k, bins), dtype=np.int64)
    rng = random.Random(f"views:{seed}:{start}")
    for _ in range(count):
        for i, view in _user_views(p, f, rng, control):
            a, b = _view_bins(view, q, bins)
            qb[i - 1, a] += 1
            hb[i - 1, b] += 1
    return qb, hb


def _histograms(p, f, seed, samples, control, bins, workers, chunk=5000):
    starts = list(range(0, samples, chunk))
    counts = [min(chunk, samples - s) for s in starts]
    args = ([p] * len(starts), [f] * len(starts), [seed] * len(starts), starts, counts,
            [control] * len(starts), [bins] * len(starts))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_sample_chunk, *args))
    else:
        parts = [_sample_chunk(*a) for a in zip(*args)]
    return sum(x[0] for x in parts), sum(x[1] for x in parts)


def _chi2_pvalue(a: np.ndarray, b: np.ndarray) -> float:
    from scipy.stats import chi2_contingency

    table = np.vstack([a, b])
    table = table[:, table.sum(axis=0) > 0]
    if table.shape[1] < 2:
        return 1.0
    return float(chi2_contingency(table)[1])


def view_distribution_compare(p: ProblemParams, f0: DemandMatrix, f1: DemandMatrix, samples: int = 100_000,
                              seed=0, alpha: float = 0.01, control=None, bins: int = 64,
                              workers: int = 1) -> Verdict:
    """Two-sample chi-square on every user's view under demands f0 and f1.

    Two features per user: the first two coordinates of the first query
    component, and a hash bucket of the whole view (inputs, keys, masks,
    queries, messages). The threshold is Bonferroni-corrected over all
    users and features. This is a sampled sanity test, not a proof.
    """
    p.check_scheme("multi")
    for f in (f0, f1):
        validate_demand(f, p)
    q = p.q
    if samples < 5 * max(q * q, bins):
        raise InsufficientSamples(f"{samples} samples for up to {max(q * q, bins)} buckets; need 5 per bucket")
    # distinct seeds per demand so the two samples are independent
    qa, ha = _histograms(p, f0, f"{seed}:a", samples, control, bins, workers)
    qb, hb = _histograms(p, f1, f"{seed}:b", samples, control, bins, workers)
    tests = {}
    for i in p.users:
        tests[f"user{i}:query"] = _chi2_pvalue(qa[i - 1], qb[i - 1])
        tests[f"user{i}:view"] = _chi2_pvalue(ha[i - 1], hb[i - 1])
    threshold = alpha / len(tests)
    ok = min(tests.values()) >= threshold
    detail = {"params": p.to_dict(), "samples": samples, "alpha": alpha, "threshold": threshold,
              "p_values": tests, "control": control}
    return Verdict("privacy-statistical", PASS if ok else FAIL, detail, exact=False)


# --- decodability via the harness ---------------------------------------------

def decode_check(scheme: str, p: ProblemParams, trials: int = 20, seed=0, workers: int = 1) -> Verdict:
    rep = sweep(scheme, p, trials, seed, workers)
    return Verdict("decode", PASS if rep.ok else FAIL, rep.to_dict())
