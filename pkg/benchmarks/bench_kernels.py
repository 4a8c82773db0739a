"""Compare the compiled kernels with the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat N]

Times each kernel on random data and then a few protocol-level workloads
with every kernel call pinned to one backend.
"""

import argparse
import random
import time

from dpsecagg import kernels
from dpsecagg.harness import measure_rates, run_protocol
from dpsecagg.model import DropoutSchedule, ProblemParams, sample_demand, sample_inputs
from dpsecagg.verify import security_realizations

Q = 2_147_483_647  # 2**31 - 1, below the extension's modulus limit


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_cases(rng):
    n = 96
    a = [rng.randrange(Q) for _ in range(n * n)]
    b = [rng.randrange(Q) for _ in range(n * n)]
    coeffs = [rng.randrange(Q) for _ in range(512)]
    xs = [rng.randrange(Q) for _ in range(512)]
    rows = [tuple(rng.randrange(Q) for _ in range(64)) for _ in range(64)]
    flat = [rng.randrange(Q) for _ in range(64 * 64)]
    c = [rng.randrange(Q) for _ in range(64)]
    d = [tuple(rng.randrange(Q) for _ in range(63)) for _ in range(64)]
    theta = rows[0]
    return {
        f"matmul {n}x{n}": lambda m: m.matmul(a, b, n, n, n, Q),
        f"rref {n}x{n}": lambda m: m.rref(a, n, n, Q),
        "horner 512 coeffs x 512 pts": lambda m: m.horner(coeffs, xs, Q),
        "dot 64 x 64": lambda m: m.dot(rows, flat, Q),
        "eval_queries 64 users x 63 x 64": lambda m: m.eval_queries(c, d, rows[:63], theta, Q),
    }


def protocol_cases():
    def multi_run():
        p = ProblemParams(8, 6, 3, 10_007, 600)
        rng = random.Random(1)
        f = sample_demand(p, rng)
        run_protocol("multi", p, f, sample_inputs(p, rng), DropoutSchedule([1, 2, 3, 4, 5, 6, 7]), rng)

    def single_run():
        p = ProblemParams(10, 8, 1, 10_007, 2_000)
        rng = random.Random(2)
        f = sample_demand(p, rng, nonzero=True)
        run_protocol("single", p, f, sample_inputs(p, rng), DropoutSchedule(range(1, 9)), rng)

    def security():
        security_realizations("multi", ProblemParams(5, 4, 2, 11, 6), trials=5)

    def gap_scan():
        for u in range(3, 65):
            measure_rates("multi", u + 1, u, 2)

    return {"multi run (8,6,3) L=600": multi_run, "single run (10,8,1) L=2000": single_run,
            "security rank check x5 (5,4,2)": security, "multi gap scan U=3..64": gap_scan}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    found = kernels.backends()
    names = sorted(found)
    print(f"backends: {', '.join(names)}")
    rows = []
    for label, fn in kernel_cases(random.Random(0)).items():
        rows.append((label, {name: best_of(lambda: fn(found[name]), args.repeat) for name in names}))
    for label, fn in protocol_cases().items():
        res = {}
        for name in names:
            with kernels.use_backend(name):
                res[name] = best_of(fn, args.repeat)
        rows.append((label, res))
    header = f"{'workload':34s}" + "".join(f"{n:>12s}" for n in names) + ("     speedup" if "cython" in found else "")
    print(header)
    for label, res in rows:
        line = f"{label:34s}" + "".join(f"{res[n] * 1e3:10.2f}ms" for n in names)
        if "cython" in res:
            line += f"{res['python'] / res['cython']:11.1f}x"
        print(line)


if __name__ == "__main__":
    main()
