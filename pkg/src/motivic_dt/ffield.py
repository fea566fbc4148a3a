"""Prime fields F_p and extensions F_{p^k}.

Two layers live here.  `FieldTower` / `ExtFieldElement` are the reference
implementation: dense coefficient vectors, schoolbook multiplication and
explicit Frobenius.  `VecField` is the counting backend: elements are integer
indices ``sum(c_i * p**i)`` held in numpy arrays, multiplication goes through
discrete-log tables.  Both are tested against each other.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .budget import check_budget

# Largest field for which VecField builds log tables.
TABLE_CAP = 1 << 22


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def prime_factors(n: int) -> list[int]:
    out = []
    f = 2
    while f * f <= n:
        if n % f == 0:
            out.append(f)
            while n % f == 0:
                n //= f
        f += 1
    if n > 1:
        out.append(n)
    return out


def prime_power(q: int) -> tuple[int, int]:
    """Split q = p**k; raise ValueError if q is not a prime power."""
    if q < 2:
        raise ValueError(f"{q} is not a prime power")
    p = prime_factors(q)
    if len(p) != 1:
        raise ValueError(f"{q} is not a prime power")
    p = p[0]
    k = 0
    while q > 1:
        q //= p
        k += 1
    return p, k


# --- polynomials over F_p as coefficient tuples, low degree first -----------

def _trim(a: list[int]) -> list[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def poly_mulmod(a: Sequence[int], b: Sequence[int], m: Sequence[int], p: int) -> list[int]:
    prod = [0] * (len(a) + len(b) - 1) if a and b else []
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                prod[i + j] = (prod[i + j] + x * y) % p
    return poly_mod(prod, m, p)


def poly_mod(a: Sequence[int], m: Sequence[int], p: int) -> list[int]:
    a = _trim([x % p for x in a])
    dm = len(m) - 1
    inv = pow(m[-1], p - 2, p)
    while len(a) - 1 >= dm:
        c = a[-1] * inv % p
        shift = len(a) - 1 - dm
        for i, y in enumerate(m):
            a[shift + i] = (a[shift + i] - c * y) % p
        _trim(a)
    return a


def poly_gcd(a: Sequence[int], b: Sequence[int], p: int) -> list[int]:
    a, b = _trim(list(a)), _trim(list(b))
    while b:
        a, b = b, poly_mod(a, b, p)
    if a:
        inv = pow(a[-1], p - 2, p)
        a = [x * inv % p for x in a]
    return a


def poly_powmod(base: Sequence[int], e: int, m: Sequence[int], p: int) -> list[int]:
    result = [1]
    base = poly_mod(base, m, p)
    while e:
        if e & 1:
            result = poly_mulmod(result, base, m, p)
        base = poly_mulmod(base, base, m, p)
        e >>= 1
    return result


def is_irreducible(f: Sequence[int], p: int) -> bool:
    """Rabin's test for a monic polynomial over F_p."""
    k = len(f) - 1
    if k <= 0:
        return False
    if k == 1:
        return True
    x = [0, 1]
    # x^{p^k} = x mod f
    if _trim(poly_powmod(x, p**k, f, p)) != [0, 1]:
        return False
    for r in prime_factors(k):
        h = poly_powmod(x, p ** (k // r), f, p)
        h = h + [0] * (2 - len(h)) if len(h) < 2 else h
        h[1] = (h[1] - 1) % p
        if len(poly_gcd(f, h, p)) != 1:
            return False
    return True


@functools.lru_cache(maxsize=None)
def find_irreducible(p: int, k: int) -> tuple[int, ...]:
    """Smallest monic irreducible of degree k over F_p.

    Candidates are ordered by the integer ``sum(c_i p^i)`` of their non-leading
    coefficients, i.e. the coefficient of t^{k-1} is the most significant.
    Degree 1 returns ``t``.
    """
    if not is_prime(p):
        raise ValueError(f"p={p} is not prime")
    if k < 1:
        raise ValueError("k must be >= 1")
    if k == 1:
        return (0, 1)
    for idx in range(p**k):
        coeffs = [(idx // p**i) % p for i in range(k)] + [1]
        if coeffs[0] and is_irreducible(coeffs, p):
            return tuple(coeffs)
    raise AssertionError("unreachable: irreducibles exist in every degree")


@dataclass(frozen=True)
class FieldTower:
    p: int
    k: int
    modulus: tuple[int, ...]

    @property
    def order(self) -> int:
        return self.p**self.k

    def __str__(self) -> str:
        terms = []
        for i, c in reversed(list(enumerate(self.modulus))):
            if c == 0:
                continue
            mon = "1" if i == 0 else ("t" if i == 1 else f"t^{i}")
            terms.append(mon if c == 1 and i else f"{c}*{mon}" if i else str(c))
        return f"F_{self.p}^{self.k} = F_{self.p}[t]/({' + '.join(terms)})"

    def element(self, coeffs: Sequence[int] | int) -> ExtFieldElement:
        if isinstance(coeffs, (int, np.integer)):
            return self.from_index(int(coeffs) % self.p)
        c = [int(x) % self.p for x in coeffs] + [0] * (self.k - len(coeffs))
        if len(c) != self.k:
            raise ValueError("too many coefficients")
        return ExtFieldElement(self, tuple(c))

    def from_index(self, idx: int) -> ExtFieldElement:
        return ExtFieldElement(self, tuple((idx // self.p**i) % self.p for i in range(self.k)))

    def zero(self) -> ExtFieldElement:
        return ExtFieldElement(self, (0,) * self.k)

    def one(self) -> ExtFieldElement:
        return self.element([1])

    def gen(self) -> ExtFieldElement:
        """The class of t; for k = 1 the modulus is t itself, so this is 0."""
        return self.element([0, 1]) if self.k > 1 else self.zero()


@functools.lru_cache(maxsize=None)
def tower(p: int, k: int) -> FieldTower:
    return FieldTower(p, k, find_irreducible(p, k))


@dataclass(frozen=True)
class ExtFieldElement:
    field: FieldTower
    coeffs: tuple[int, ...]

    def _wrap(self, c) -> ExtFieldElement:
        return ExtFieldElement(self.field, tuple(c))

    def _coerce(self, other) -> ExtFieldElement:
        if isinstance(other, ExtFieldElement):
            if other.field != self.field:
                raise ValueError("elements of different towers")
            return other
        if isinstance(other, (int, np.integer)):
            return self.field.element([int(other)])
        return NotImplemented

    @property
    def index(self) -> int:
        return sum(c * self.field.p**i for i, c in enumerate(self.coeffs))

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        p = self.field.p
        return self._wrap((a + b) % p for a, b in zip(self.coeffs, other.coeffs))

    __radd__ = __add__

    def __neg__(self):
        p = self.field.p
        return self._wrap((-a) % p for a in self.coeffs)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        f = self.field
        r = poly_mulmod(self.coeffs, other.coeffs, f.modulus, f.p)
        return f.element(r) if r else f.zero()

    __rmul__ = __mul__

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        result = self.field.one()
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def inverse(self) -> ExtFieldElement:
        if not any(self.coeffs):
            raise ZeroDivisionError("zero has no inverse")
        return self ** (self.field.order - 2)

    def __truediv__(self, other):
        other = self._coerce(other)
        return self * other.inverse()

    def __bool__(self) -> bool:
        return any(self.coeffs)

    def frobenius(self) -> ExtFieldElement:
        return self ** self.field.p

    def trace(self) -> int:
        """x + x^p + ... + x^{p^{k-1}}, returned as a residue mod p."""
        acc = self
        y = self
        for _ in range(self.field.k - 1):
            y = y.frobenius()
            acc = acc + y
        if any(acc.coeffs[1:]):
            raise AssertionError("trace left the prime field")
        return acc.coeffs[0]

    def mult_matrix(self) -> list[list[int]]:
        """Matrix of y -> self*y in the basis 1, t, ..., t^{k-1} (columns = images)."""
        f = self.field
        cols = [(self * f.element([0] * i + [1])).coeffs for i in range(f.k)]
        return [[cols[j][i] for j in range(f.k)] for i in range(f.k)]

    def matrix_trace(self) -> int:
        m = self.mult_matrix()
        return sum(m[i][i] for i in range(self.field.k)) % self.field.p

    def norm(self) -> int:
        acc = self
        y = self
        for _ in range(self.field.k - 1):
            y = y.frobenius()
            acc = acc * y
        return acc.coeffs[0]

    def __repr__(self) -> str:
        return f"ExtFieldElement({self.coeffs}, p={self.field.p})"


def enumerate_field(t: FieldTower, budget: int | None = None) -> Iterator[ExtFieldElement]:
    """All p^k elements, in increasing index order."""
    check_budget(t.order, budget, what=f"enumerate F_{t.p}^{t.k}")
    for c in itertools.product(range(t.p), repeat=t.k):
        yield ExtFieldElement(t, tuple(reversed(c)))


def enumerate_range(t: FieldTower, start: int, stop: int) -> Iterator[ExtFieldElement]:
    """Elements with index in [start, stop); disjoint ranges partition the field."""
    for idx in range(max(start, 0), min(stop, t.order)):
        yield t.from_index(idx)


def multiplicative_order(x: ExtFieldElement) -> int:
    n = x.field.order - 1
    order = n
    for r in prime_factors(n):
        while order % r == 0 and (x ** (order // r)).coeffs == x.field.one().coeffs:
            order //= r
    return order


@functools.lru_cache(maxsize=None)
def primitive_element(p: int, k: int) -> int:
    """Index of the smallest-index generator of F_{p^k}^*."""
    t = tower(p, k)
    n = t.order - 1
    rs = prime_factors(n)
    one = t.one()
    for idx in range(1, t.order):
        x = t.from_index(idx)
        if all((x ** (n // r)) != one for r in rs):
            return idx
    raise AssertionError("no primitive element")


# --- vectorized backend -----------------------------------------------------

class VecField:
    """Vectorized arithmetic on index arrays for F_{p^k}."""

    def __init__(self, p: int, k: int):
        self.p, self.k = p, k
        self.Q = p**k
        self.tower = tower(p, k)
        self.pw = np.array([p**i for i in range(k)], dtype=np.int64)
        tr_basis = np.array([self.tower.element([0] * i + [1]).trace() for i in range(k)],
                            dtype=np.int64)
        self._tr_basis = tr_basis

    # conversions
    def digits(self, a: np.ndarray) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        return (a[..., None] // self.pw) % self.p

    def undigits(self, d: np.ndarray) -> np.ndarray:
        return (np.asarray(d, dtype=np.int64) % self.p) @ self.pw

    def from_int(self, n) -> np.ndarray:
        """Image of integers in the prime subfield (index of c is c mod p)."""
        return np.asarray(n, dtype=np.int64) % self.p

    def add(self, a, b):
        return self.undigits(self.digits(a) + self.digits(b))

    def sub(self, a, b):
        return self.undigits(self.digits(a) - self.digits(b))

    def neg(self, a):
        return self.undigits(-self.digits(a))

    def scale(self, n: int, a):
        """n * a for an integer n."""
        return self.undigits((n % self.p) * self.digits(a))

    def trace(self, a) -> np.ndarray:
        return (self.digits(a) @ self._tr_basis) % self.p

    # multiplicative structure via log tables
    @functools.cached_property
    def _tables(self):
        Q, p, k = self.Q, self.p, self.k
        if Q > TABLE_CAP:
            raise ValueError(f"F_{p}^{k} too large for log tables")
        g = self.tower.from_index(primitive_element(p, k))
        exp = np.empty(Q - 1, dtype=np.int64)
        exp[0] = 1
        m = 1
        gm = g
        while m < Q - 1:
            mat = np.array(gm.mult_matrix(), dtype=np.int64)
            take = min(m, Q - 1 - m)
            block = self.digits(exp[:take])
            exp[m:m + take] = self.undigits(block @ mat.T)
            gm = gm * gm
            m *= 2
        log = np.full(Q, -1, dtype=np.int64)
        log[exp] = np.arange(Q - 1, dtype=np.int64)
        return exp, log

    @property
    def exp(self) -> np.ndarray:
        return self._tables[0]

    @property
    def log(self) -> np.ndarray:
        return self._tables[1]

    def mul(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        exp, log = self._tables
        la, lb = log[a], log[b]
        out = exp[(la + lb) % (self.Q - 1)]
        return np.where((la < 0) | (lb < 0), 0, out)

    def power(self, a, e: int):
        a = np.asarray(a, dtype=np.int64)
        exp, log = self._tables
        la = log[a]
        if e == 0:
            return np.ones_like(a)
        out = exp[(la * (e % (self.Q - 1))) % (self.Q - 1)]
        return np.where(la < 0, 0, out)

    def inv(self, a):
        a = np.asarray(a, dtype=np.int64)
        exp, log = self._tables
        la = log[a]
        if np.any(la < 0):
            raise ZeroDivisionError("zero in inverse")
        return exp[(-la) % (self.Q - 1)]

    # small batched matrices, shape (..., n, m)
    def matmul(self, A, B):
        n, m = A.shape[-2], A.shape[-1]
        l = B.shape[-1]
        out = None
        for j in range(m):
            term = self.mul(A[..., :, j, None], B[..., None, j, :])
            out = term if out is None else self.add(out, term)
        if out is None:
            out = np.zeros(A.shape[:-1] + (l,), dtype=np.int64)
        return out

    def mat_trace(self, A):
        n = A.shape[-1]
        out = A[..., 0, 0]
        for i in range(1, n):
            out = self.add(out, A[..., i, i])
        return out

    def trace_of_product(self, A, B):
        """Tr(AB) without forming AB."""
        n, m = A.shape[-2], A.shape[-1]
        out = None
        for i in range(n):
            for j in range(m):
                t = self.mul(A[..., i, j], B[..., j, i])
                out = t if out is None else self.add(out, t)
        return out


class PrimeVecField(VecField):
    """k = 1: plain modular arithmetic, no tables needed."""

    def __init__(self, p: int):
        super().__init__(p, 1)

    def digits(self, a):
        return np.asarray(a, dtype=np.int64)[..., None] % self.p

    def undigits(self, d):
        return np.asarray(d, dtype=np.int64)[..., 0] % self.p

    def add(self, a, b):
        return (np.asarray(a, dtype=np.int64) + b) % self.p

    def sub(self, a, b):
        return (np.asarray(a, dtype=np.int64) - b) % self.p

    def neg(self, a):
        return (-np.asarray(a, dtype=np.int64)) % self.p

    def scale(self, n, a):
        return (n * np.asarray(a, dtype=np.int64)) % self.p

    def trace(self, a):
        return np.asarray(a, dtype=np.int64) % self.p

    def mul(self, a, b):
        return (np.asarray(a, dtype=np.int64) * b) % self.p

    def power(self, a, e):
        a = np.asarray(a, dtype=np.int64)
        out = np.ones_like(a)
        base = a % self.p
        while e:
            if e & 1:
                out = (out * base) % self.p
            base = (base * base) % self.p
            e >>= 1
        return out

    def inv(self, a):
        a = np.asarray(a, dtype=np.int64)
        if np.any(a % self.p == 0):
            raise ZeroDivisionError("zero in inverse")
        return self.power(a, self.p - 2)

    def matmul(self, A, B):
        return np.einsum("...ij,...jk->...ik", A, B) % self.p

    def mat_trace(self, A):
        return np.trace(A, axis1=-2, axis2=-1) % self.p

    def trace_of_product(self, A, B):
        return np.einsum("...ij,...ji->...", A, B) % self.p


@functools.lru_cache(maxsize=16)
def vec_field(p: int, k: int) -> VecField:
    if not is_prime(p):
        raise ValueError(f"p={p} is not prime")
    return PrimeVecField(p) if k == 1 else VecField(p, k)
