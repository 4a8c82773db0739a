"""Prime-field arithmetic and univariate polynomials over GF(q).

Two levels live here. ``FieldElement`` and ``Polynomial`` are the typed,
modulus-checked API. The ``*_int`` helpers and vector functions work on
canonical residues (plain ints) and are what the protocol code calls in its
inner loops.
"""

from __future__ import annotations

import sys
from array import array
from dataclasses import dataclass
from functools import cached_property, lru_cache

from . import kernels
from .errors import DuplicateAbscissa, ModulusMismatch, NotPrime, ZeroInverse

MAX_MODULUS = (1 << 64) - 1


def is_prime(n: int) -> bool:
    """Trial division; moduli here are small enough that this is instant."""
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def next_prime(n: int) -> int:
    """Smallest prime >= n."""
    n = max(n, 2)
    while not is_prime(n):
        n += 1
    return n


@dataclass(frozen=True)
class FieldConfig:
    q: int

    def __post_init__(self):
        if not isinstance(self.q, int) or self.q > MAX_MODULUS:
            raise NotPrime(f"modulus must be an int below 2**64, got {self.q!r}")
        if not is_prime(self.q):
            raise NotPrime(f"{self.q} is not prime")

    def __call__(self, value: int) -> FieldElement:
        return FieldElement(value % self.q, self)

    @property
    def zero(self) -> FieldElement:
        return FieldElement(0, self)

    @property
    def one(self) -> FieldElement:
        return FieldElement(1, self)

    def elements(self):
        return (FieldElement(v, self) for v in range(self.q))

    def random(self, rng) -> int:
        return rng.randrange(self.q)

    def random_nonzero(self, rng) -> int:
        return rng.randrange(1, self.q)

    def random_vector(self, rng, n: int) -> list[int]:
        """n uniform residues via masked random words with rejection, so exactly uniform."""
        q = self.q
        nb = (q - 1).bit_length() or 1
        mask = (1 << nb) - 1
        code, width = next((c, w) for c, w in _WORD_CODES if 8 * w >= nb)
        out: list[int] = []
        while len(out) < n:
            # acceptance is q / 2^nb > 1/2, so this usually finishes in one pass
            want = (n - len(out)) * (mask + 1) // q + 8
            words = array(code, rng.randbytes(width * want))
            if _BIG_ENDIAN:
                words.byteswap()
            out.extend(filter(q.__gt__, map(mask.__and__, words)))
        del out[n:]
        return out


_WORD_CODES = tuple((c, array(c).itemsize) for c in "BHIQ")
_BIG_ENDIAN = sys.byteorder == "big"


@dataclass(frozen=True)
class FieldElement:
    value: int
    config: FieldConfig

    def __post_init__(self):
        if not 0 <= self.value < self.config.q:
            raise ValueError(f"{self.value} is not a canonical residue mod {self.config.q}")

    @property
    def q(self) -> int:
        return self.config.q

    def _other(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.config.q != self.config.q:
                raise ModulusMismatch(f"GF({self.q}) vs GF({other.q})")
            return other.value
        if isinstance(other, int):
            return other % self.q
        return NotImplemented

    def __add__(self, other):
        v = self._other(other)
        if v is NotImplemented:
            return v
        return FieldElement((self.value + v) % self.q, self.config)

    __radd__ = __add__

    def __sub__(self, other):
        v = self._other(other)
        if v is NotImplemented:
            return v
        return FieldElement((self.value - v) % self.q, self.config)

    def __rsub__(self, other):
        v = self._other(other)
        if v is NotImplemented:
            return v
        return FieldElement((v - self.value) % self.q, self.config)

    def __mul__(self, other):
        v = self._other(other)
        if v is NotImplemented:
            return v
        return FieldElement((self.value * v) % self.q, self.config)

    __rmul__ = __mul__

    def __neg__(self):
        return FieldElement((-self.value) % self.q, self.config)

    def inverse(self) -> FieldElement:
        return FieldElement(inv_int(self.value, self.q), self.config)

    def __truediv__(self, other):
        v = self._other(other)
        if v is NotImplemented:
            return v
        return FieldElement((self.value * inv_int(v, self.q)) % self.q, self.config)

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        return FieldElement(pow(self.value, e, self.q), self.config)

    def __eq__(self, other):
        if isinstance(other, FieldElement):
            return self.config.q == other.config.q and self.value == other.value
        if isinstance(other, int):
            return self.value == other % self.q
        return NotImplemented

    def __hash__(self):
        return hash((self.value, self.config.q))

    def __int__(self):
        return self.value

    def __bool__(self):
        return self.value != 0

    def __repr__(self):
        return f"{self.value} (mod {self.q})"


def _same_field(a: FieldElement, b: FieldElement) -> FieldConfig:
    if a.config.q != b.config.q:
        raise ModulusMismatch(f"GF({a.q}) vs GF({b.q})")
    return a.config


def add(a: FieldElement, b: FieldElement) -> FieldElement:
    cfg = _same_field(a, b)
    return FieldElement((a.value + b.value) % cfg.q, cfg)


def mul(a: FieldElement, b: FieldElement) -> FieldElement:
    cfg = _same_field(a, b)
    return FieldElement((a.value * b.value) % cfg.q, cfg)


def inv(a: FieldElement) -> FieldElement:
    return a.inverse()


def inv_int(a: int, q: int) -> int:
    a %= q
    if a == 0:
        raise ZeroInverse(f"0 has no inverse mod {q}")
    return pow(a, q - 2, q)


@dataclass(frozen=True)
class Polynomial:
    """Polynomial over GF(q) with coefficients stored lowest degree first.

    Trailing zero coefficients are stripped, so the zero polynomial has an
    empty coefficient tuple.
    """

    config: FieldConfig
    coeffs: tuple[int, ...] = ()

    def __post_init__(self):
        q = self.config.q
        c = [v % q for v in self.coeffs]
        while c and c[-1] == 0:
            c.pop()
        object.__setattr__(self, "coeffs", tuple(c))

    @classmethod
    def from_elements(cls, elements) -> Polynomial:
        elements = list(elements)
        if not elements:
            raise ValueError("need a field to build a polynomial from no elements")
        cfg = elements[0].config
        for e in elements:
            _same_field(elements[0], e)
        return cls(cfg, tuple(e.value for e in elements))

    @cached_property
    def coefficients(self) -> list[FieldElement]:
        return [FieldElement(c, self.config) for c in self.coeffs]

    @property
    def degree(self) -> int:
        """Degree, with -1 for the zero polynomial."""
        return len(self.coeffs) - 1

    def __call__(self, x) -> FieldElement:
        return evaluate(self, x)

    def _check(self, other: Polynomial):
        if other.config.q != self.config.q:
            raise ModulusMismatch(f"GF({self.config.q}) vs GF({other.config.q})")

    def __add__(self, other: Polynomial) -> Polynomial:
        self._check(other)
        n = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (0,) * (n - len(self.coeffs))
        b = other.coeffs + (0,) * (n - len(other.coeffs))
        return Polynomial(self.config, tuple(x + y for x, y in zip(a, b)))

    def scale(self, c) -> Polynomial:
        c = c.value if isinstance(c, FieldElement) else c
        return Polynomial(self.config, tuple(v * c for v in self.coeffs))


def evaluate(p: Polynomial, x) -> FieldElement:
    """Horner evaluation of ``p`` at ``x``."""
    if isinstance(x, FieldElement):
        if x.config.q != p.config.q:
            raise ModulusMismatch(f"GF({p.config.q}) vs GF({x.q})")
        x = x.value
    q = p.config.q
    return FieldElement(kernels.horner(p.coeffs, [x % q], q)[0] if p.coeffs else 0, p.config)


def lagrange_interpolate(points) -> Polynomial:
    """Unique polynomial of degree < len(points) through ``(x, y)`` FieldElement pairs."""
    points = list(points)
    if not points:
        raise ValueError("need at least one point")
    cfg = points[0][0].config
    for x, y in points:
        _same_field(points[0][0], x)
        _same_field(points[0][0], y)
    coeffs = interpolate_int([x.value for x, _ in points], [y.value for _, y in points], cfg.q)
    return Polynomial(cfg, tuple(coeffs))


# --- integer-level helpers -------------------------------------------------

def _check_distinct(xs, q):
    if len({x % q for x in xs}) != len(xs):
        raise DuplicateAbscissa(f"abscissas not distinct mod {q}: {list(xs)}")


def interpolate_int(xs, ys, q) -> list[int]:
    """Coefficients (low to high) of the interpolant through (xs, ys) mod q.

    Builds the master polynomial prod(x - x_k) once, then divides out each
    root synthetically and accumulates the scaled basis polynomial: O(n^2).
    """
    n = len(xs)
    if n != len(ys):
        raise ValueError("xs and ys differ in length")
    xs = [x % q for x in xs]
    _check_distinct(xs, q)
    master = [1]
    for xk in xs:
        nxt = [0] * (len(master) + 1)
        for d, c in enumerate(master):
            nxt[d + 1] = (nxt[d + 1] + c) % q
            nxt[d] = (nxt[d] - xk * c) % q
        master = nxt
    out = [0] * n
    for k, xk in enumerate(xs):
        # master / (x - xk): synthetic division from the top
        quot = [0] * n
        carry = 0
        for d in range(n, 0, -1):
            carry = (master[d] + carry * xk) % q if d < n else master[d]
            quot[d - 1] = carry
        denom = 1
        for m, xm in enumerate(xs):
            if m != k:
                denom = denom * (xk - xm) % q
        scale = ys[k] % q * inv_int(denom, q) % q
        if scale:
            for d in range(n):
                out[d] = (out[d] + scale * quot[d]) % q
    return out


@lru_cache(maxsize=1024)
def _inverse_denominators(nodes: tuple, q: int) -> tuple[int, ...]:
    out = []
    for k, xk in enumerate(nodes):
        den = 1
        for m, xm in enumerate(nodes):
            if m != k:
                den = den * (xk - xm) % q
        out.append(inv_int(den, q))
    return tuple(out)


def lagrange_weights(nodes, x, q) -> list[int]:
    """Weights w with interpolant(x) = sum_k w[k] * y[k] for values y at ``nodes``."""
    nodes = tuple(v % q for v in nodes)
    _check_distinct(nodes, q)
    x %= q
    inv_den = _inverse_denominators(nodes, q)
    n = len(nodes)
    # prod_{m != k} (x - x_m) from prefix and suffix products
    prefix = [1] * (n + 1)
    for m in range(n):
        prefix[m + 1] = prefix[m] * (x - nodes[m]) % q
    suffix = 1
    weights = [0] * n
    for k in range(n - 1, -1, -1):
        weights[k] = prefix[k] * suffix % q * inv_den[k] % q
        suffix = suffix * (x - nodes[k]) % q
    return weights


def vadd(a, b, q) -> list[int]:
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    return [(x + y) % q for x, y in zip(a, b)]


def vsub(a, b, q) -> list[int]:
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    return [(x - y) % q for x, y in zip(a, b)]


def vscale(c, a, q) -> list[int]:
    return [(c * x) % q for x in a]


def dot(a, b, q) -> int:
    return sum(x * y for x, y in zip(a, b)) % q
