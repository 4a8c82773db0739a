"""Pure-Python implementations of the modular hot kernels.

Matrices are flat row-major sequences of canonical residues. Every function
here has a twin with the same signature in ``_kernels.pyx``.
"""


def matmul(a, b, n, k, m, q):
    """Return the n x m product of an n x k and a k x m matrix mod q."""
    out = [0] * (n * m)
    for i in range(n):
        row = [0] * m
        base = i * k
        for t in range(k):
            ait = a[base + t]
            if ait == 0:
                continue
            boff = t * m
            for j in range(m):
                row[j] += ait * b[boff + j]
        oi = i * m
        for j in range(m):
            out[oi + j] = row[j] % q
    return out


def rref(a, rows, cols, q):
    """Reduced row echelon form mod q.

    Returns ``(entries, pivots)`` where ``pivots`` lists the pivot column of
    each nonzero row, in order.
    """
    m = [list(a[r * cols:(r + 1) * cols]) for r in range(rows)]
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        p = r
        while p < rows and m[p][c] == 0:
            p += 1
        if p == rows:
            continue
        m[r], m[p] = m[p], m[r]
        inv = pow(m[r][c], q - 2, q)
        prow = [(v * inv) % q for v in m[r]]
        m[r] = prow
        for s in range(rows):
            if s != r:
                f = m[s][c]
                if f:
                    srow = m[s]
                    m[s] = [(x - f * y) % q for x, y in zip(srow, prow)]
        pivots.append(c)
        r += 1
    return [v for row in m for v in row], pivots


def horner(coeffs, xs, q):
    """Evaluate the polynomial with low-to-high ``coeffs`` at every x in xs."""
    out = []
    for x in xs:
        acc = 0
        for c in reversed(coeffs):
            acc = (acc * x + c) % q
        out.append(acc)
    return out


def dot(rows, flat, q):
    """Inner product of the concatenated ``rows`` with ``flat``, mod q."""
    acc = 0
    pos = 0
    for row in rows:
        for v in row:
            acc += v * flat[pos]
            pos += 1
    return acc % q


def eval_queries(c, d, phis, theta, q):
    """Per user i, the tuples (c[i] * phis[j] + d[i][j] * theta) mod q over j."""
    out = []
    for ci, di in zip(c, d):
        out.append(tuple(tuple((ci * p + dij * t) % q for p, t in zip(phi, theta))
                         for phi, dij in zip(phis, di)))
    return out
