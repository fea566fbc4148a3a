"""Exact arithmetic in Q(zeta_p) and the character sums that land there.

Coordinates are taken in the basis zeta^0, ..., zeta^{p-2}; the relation
zeta^{p-1} = -(1 + zeta + ... + zeta^{p-2}) puts every value in canonical form,
so equality is equality of coefficient tuples.
"""

from __future__ import annotations

import cmath
import math
from fractions import Fraction
from functools import lru_cache
from typing import Any, Callable, Iterable

import numpy as np

from .budget import check_budget
from .ffield import TABLE_CAP, ExtFieldElement, is_prime, vec_field

Rational = int | Fraction


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


class CyclotomicValue:
    """Immutable element of Q(zeta_p)."""

    __slots__ = ("p", "coeffs", "_hash")

    def __init__(self, p: int, coeffs: Iterable[Rational]):
        c = tuple(_frac(x) for x in coeffs)
        if len(c) != max(p - 1, 1):
            raise ValueError(f"need {max(p - 1, 1)} coordinates for p={p}, got {len(c)}")
        self.p = p
        self.coeffs = c
        self._hash = None

    # constructors
    @classmethod
    def constant(cls, p: int, c: Rational) -> CyclotomicValue:
        n = max(p - 1, 1)
        return cls(p, [c] + [0] * (n - 1))

    @classmethod
    def zero(cls, p: int) -> CyclotomicValue:
        return cls.constant(p, 0)

    @classmethod
    def one(cls, p: int) -> CyclotomicValue:
        return cls.constant(p, 1)

    @classmethod
    def zeta(cls, p: int, a: int = 1) -> CyclotomicValue:
        counts = [0] * p
        counts[a % p] = 1
        return cls.from_counts(p, counts)

    @classmethod
    def from_counts(cls, p: int, counts: Iterable[Rational]) -> CyclotomicValue:
        """sum_a counts[a] * zeta^a for a = 0..p-1 (any length, reduced mod p)."""
        red = [Fraction(0)] * p
        for a, c in enumerate(counts):
            red[a % p] += c
        if p == 2:
            # zeta = -1, Q(zeta_2) = Q
            return cls(2, [red[0] - red[1]])
        top = red[p - 1]
        return cls(p, [red[i] - top for i in range(p - 1)])

    def _redundant(self) -> list[Fraction]:
        if self.p == 2:
            return [self.coeffs[0], Fraction(0)]
        return list(self.coeffs) + [Fraction(0)]

    def _coerce(self, other) -> CyclotomicValue:
        if isinstance(other, CyclotomicValue):
            if other.p != self.p:
                raise ValueError(f"conductor mismatch: {self.p} vs {other.p}")
            return other
        if isinstance(other, (int, Fraction, np.integer)):
            return CyclotomicValue.constant(self.p, int(other) if isinstance(other, np.integer) else other)
        return NotImplemented

    # ring structure
    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return CyclotomicValue(self.p, [a + b for a, b in zip(self.coeffs, other.coeffs)])

    __radd__ = __add__

    def __neg__(self):
        return CyclotomicValue(self.p, [-a for a in self.coeffs])

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return CyclotomicValue(self.p, [a - b for a, b in zip(self.coeffs, other.coeffs)])

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return CyclotomicValue(self.p, [a * other for a in self.coeffs])
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        p = self.p
        a, b = self._redundant(), other._redundant()
        acc = [Fraction(0)] * p
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    if y:
                        acc[(i + j) % p] += x * y
        return CyclotomicValue.from_counts(p, acc)

    __rmul__ = __mul__

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        result = CyclotomicValue.one(self.p)
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def galois(self, a: int) -> CyclotomicValue:
        """The automorphism zeta -> zeta^a, gcd(a, p) = 1."""
        if self.p == 2:
            return self
        if a % self.p == 0:
            raise ValueError("a must be prime to p")
        red = self._redundant()
        out = [Fraction(0)] * self.p
        for i, x in enumerate(red):
            out[(i * a) % self.p] += x
        return CyclotomicValue.from_counts(self.p, out)

    def conj(self) -> CyclotomicValue:
        return self.galois(-1)

    def norm(self) -> Fraction:
        if self.p == 2:
            return self.coeffs[0]
        acc = CyclotomicValue.one(self.p)
        for a in range(1, self.p):
            acc = acc * self.galois(a)
        if any(acc.coeffs[1:]):
            raise AssertionError("norm not rational")
        return acc.coeffs[0]

    def inverse(self) -> CyclotomicValue:
        if self.is_zero():
            raise ZeroDivisionError("zero in Q(zeta_p)")
        if self.is_rational():
            return CyclotomicValue.constant(self.p, 1 / self.coeffs[0])
        others = CyclotomicValue.one(self.p)
        for a in range(2, self.p):
            others = others * self.galois(a)
        n = (self * others).coeffs[0]
        return others * (1 / n)

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return CyclotomicValue(self.p, [a / other for a in self.coeffs])
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.inverse()

    # predicates and views
    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def is_rational(self) -> bool:
        return not any(self.coeffs[1:])

    def is_integral(self) -> bool:
        return all(c.denominator == 1 for c in self.coeffs)

    def rational(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f"{self} is not rational")
        return self.coeffs[0]

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            return self.is_rational() and self.coeffs[0] == other
        if not isinstance(other, CyclotomicValue):
            return NotImplemented
        return self.p == other.p and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.p, self.coeffs))
        return self._hash

    def approx(self) -> complex:
        """Float image under zeta -> exp(2 pi i / p); for display only."""
        w = cmath.exp(2j * math.pi / self.p)
        return complex(sum(float(c) * w**i for i, c in enumerate(self.coeffs)))

    def __repr__(self) -> str:
        return f"CyclotomicValue({self.p}, {self})"

    def __str__(self) -> str:
        terms = []
        for i, c in enumerate(self.coeffs):
            if not c:
                continue
            mon = "" if i == 0 else ("z" if i == 1 else f"z^{i}")
            if not mon:
                terms.append(str(c))
            elif c == 1:
                terms.append(mon)
            elif c == -1:
                terms.append("-" + mon)
            else:
                terms.append(f"{c}*{mon}")
        return " + ".join(terms).replace("+ -", "- ") if terms else "0"

    def to_json(self) -> dict[str, Any]:
        z = self.approx()
        return {
            "p": self.p,
            "coeffs": [f"{c.numerator}/{c.denominator}" for c in self.coeffs],
            "approx": [round(z.real, 12) + 0.0, round(z.imag, 12) + 0.0],
        }

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> CyclotomicValue:
        return cls(obj["p"], [Fraction(s) for s in obj["coeffs"]])


# --- character sums ----------------------------------------------------------

class TwistedAccumulator:
    """Histogram of trace values; merging chunks is plain addition of counts."""

    def __init__(self, p: int, weight: int = 1):
        self.p = p
        self.counts = [0] * p

    def add_traces(self, traces: np.ndarray, mask: np.ndarray | None = None) -> None:
        tr = np.asarray(traces, dtype=np.int64).ravel()
        if mask is not None:
            tr = tr[np.asarray(mask).ravel()]
        h = np.bincount(tr, minlength=self.p)
        for a in range(self.p):
            self.counts[a] += int(h[a])

    def merge(self, other: TwistedAccumulator) -> TwistedAccumulator:
        out = TwistedAccumulator(self.p)
        out.counts = [a + b for a, b in zip(self.counts, other.counts)]
        return out

    def value(self) -> CyclotomicValue:
        return CyclotomicValue.from_counts(self.p, self.counts)


def twisted_sum(domain: Iterable, f: Callable[[Any], Any], p: int) -> CyclotomicValue:
    """sum over the domain of zeta^{Tr f(x)}.

    ``f`` may return an `ExtFieldElement` (traced to F_p) or an integer residue.
    """
    counts = [0] * p
    for x in domain:
        v = f(x)
        a = v.trace() if isinstance(v, ExtFieldElement) else int(v) % p
        counts[a] += 1
    return CyclotomicValue.from_counts(p, counts)


def _check_odd_prime(p: int) -> None:
    if p % 2 == 0 or not is_prime(p):
        raise ValueError(f"p={p} must be an odd prime")


def _enumerated_power_sum(d: int, p: int, k: int, scale: int = 1) -> CyclotomicValue:
    F = vec_field(p, k)
    check_budget(F.Q, what=f"character sum over F_{p}^{k}")
    t = np.arange(F.Q, dtype=np.int64)
    vals = F.power(t, d)
    if scale % p != 1:
        vals = F.scale(scale, vals)
    acc = TwistedAccumulator(p)
    acc.add_traces(F.trace(vals))
    return acc.value()


@lru_cache(maxsize=None)
def gauss_sum(p: int, k: int = 1, method: str = "auto") -> CyclotomicValue:
    """Quadratic Gauss sum sum_{t in F_{p^k}} psi(Tr t^2)."""
    _check_odd_prime(p)
    if k < 1:
        raise ValueError("level must be >= 1")
    if method == "enumerate" or (method == "auto" and p**k <= TABLE_CAP):
        return _enumerated_power_sum(2, p, k)
    if method not in ("auto", "hasse-davenport"):
        raise ValueError(f"unknown method {method!r}")
    # Hasse-Davenport for the quadratic character: g_k = (-1)^{k-1} g_1^k
    g1 = gauss_sum(p, 1, "enumerate")
    return g1**k * (-1) ** (k - 1)


@lru_cache(maxsize=None)
def power_character_sum(d: int, p: int, k: int = 1, method: str = "auto") -> CyclotomicValue:
    """sum_{t in F_{p^k}} psi(Tr t^d)."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if not is_prime(p):
        raise ValueError(f"p={p} is not prime")
    if k < 1:
        raise ValueError("level must be >= 1")
    if math.gcd(d, p**k - 1) == 1:
        return CyclotomicValue.zero(p)
    if method == "enumerate" or (method == "auto" and p**k <= TABLE_CAP):
        return _enumerated_power_sum(d, p, k)
    if method not in ("auto", "gauss"):
        raise ValueError(f"unknown method {method!r}")
    return power_sum_via_gauss(d, p, k)


# --- Gauss sums of multiplicative characters, lifted by Hasse-Davenport ------

@lru_cache(maxsize=None)
def cyclotomic_poly(n: int) -> tuple[int, ...]:
    """Integer coefficients of Phi_n, low degree first."""
    num = [-1] + [0] * (n - 1) + [1]
    for d in range(1, n):
        if n % d == 0:
            num = _int_divexact(num, list(cyclotomic_poly(d)))
    return tuple(num)


def _int_divexact(a: list[int], b: list[int]) -> list[int]:
    a = list(a)
    q = [0] * (len(a) - len(b) + 1)
    for i in range(len(q) - 1, -1, -1):
        c = a[i + len(b) - 1] // b[-1]
        q[i] = c
        for j, y in enumerate(b):
            a[i + j] -= c * y
    if any(a):
        raise ArithmeticError("inexact polynomial division")
    return q


class _Bicyclotomic:
    """Integer element of Z[zeta_p] (x) Z[zeta_r], gcd(p, r) = 1.

    Stored as an exponent-pair -> coefficient table reduced mod
    Phi_p(zeta_p) and Phi_r(zeta_r).
    """

    def __init__(self, p: int, r: int, table: np.ndarray):
        self.p, self.r = p, r
        self.t = table

    @classmethod
    def from_pairs(cls, p: int, r: int, counts: np.ndarray) -> _Bicyclotomic:
        # counts has shape (p, r): multiplicity of zeta_p^a zeta_r^b
        return cls(p, r, _reduce2(np.asarray(counts, dtype=object), p, r))

    def __mul__(self, other: _Bicyclotomic) -> _Bicyclotomic:
        a, b = self.t, other.t
        out = np.zeros((a.shape[0] + b.shape[0] - 1, a.shape[1] + b.shape[1] - 1), dtype=object)
        for i in range(a.shape[0]):
            for j in range(a.shape[1]):
                if a[i, j]:
                    out[i:i + b.shape[0], j:j + b.shape[1]] += a[i, j] * b
        return _Bicyclotomic(self.p, self.r, _reduce2(out, self.p, self.r))

    def __add__(self, other: _Bicyclotomic) -> _Bicyclotomic:
        return _Bicyclotomic(self.p, self.r, self.t + other.t)

    def scale(self, c: int) -> _Bicyclotomic:
        return _Bicyclotomic(self.p, self.r, self.t * c)

    def __pow__(self, e: int) -> _Bicyclotomic:
        out = None
        base = self
        while e:
            if e & 1:
                out = base if out is None else out * base
            base = base * base
            e >>= 1
        return out

    def to_cyclotomic(self) -> CyclotomicValue:
        if any(self.t[:, 1:].ravel()):
            raise ArithmeticError("value does not lie in Q(zeta_p)")
        return CyclotomicValue(self.p, [int(x) for x in self.t[:, 0]])


def _reduce_axis(t: np.ndarray, phi: tuple[int, ...], axis: int) -> np.ndarray:
    deg = len(phi) - 1
    t = np.moveaxis(t, axis, 0).copy()
    for i in range(t.shape[0] - 1, deg - 1, -1):
        c = t[i].copy()
        if any(np.ravel(c)):
            for j, y in enumerate(phi):
                t[i - deg + j] = t[i - deg + j] - c * y
    t = t[:deg] if deg > 0 else t[:1]
    return np.moveaxis(t, 0, axis)


def _reduce2(t: np.ndarray, p: int, r: int) -> np.ndarray:
    t = _reduce_axis(t, cyclotomic_poly(p), 0)
    if r == 1:
        return t[:, :1]
    return _reduce_axis(t, cyclotomic_poly(r), 1)


def _multiplicative_order_mod(a: int, m: int) -> int:
    if m == 1:
        return 1
    f, x = 1, a % m
    while x != 1:
        x = x * a % m
        f += 1
    return f


@lru_cache(maxsize=None)
def _base_gauss_sums(p: int, f: int, e: int) -> tuple[_Bicyclotomic, ...]:
    """Gauss sums G(chi_s), s = 1..e-1, for the characters chi_s(gamma^j) = zeta_e^{s j}
    of F_{p^f}^*, gamma the tabulated primitive root."""
    F = vec_field(p, f)
    check_budget(F.Q, what=f"Gauss sums over F_{p}^{f}")
    tr = F.trace(F.exp)  # Tr(gamma^j), j = 0..Q-2
    j = np.arange(F.Q - 1)
    out = []
    for s in range(1, e):
        counts = np.zeros((p, e), dtype=np.int64)
        np.add.at(counts, (tr, (s * j) % e), 1)
        out.append(_Bicyclotomic.from_pairs(p, e, counts.astype(object)))
    return tuple(out)


def power_sum_via_gauss(d: int, p: int, k: int) -> CyclotomicValue:
    """sum_t psi(Tr t^d) as the sum of Gauss sums G(chi) over chi^d = 1, chi != 1.

    Every such character of F_{p^k}^* factors through the norm to F_{p^f},
    f the order of p modulo e = gcd(d, p^k - 1), so Hasse-Davenport gives
    G_k(chi o N) = (-1)^{k/f - 1} G_f(chi)^{k/f}.
    """
    e = math.gcd(d, p**k - 1)
    if e == 1:
        return CyclotomicValue.zero(p)
    f = _multiplicative_order_mod(p, e)
    assert k % f == 0
    m = k // f
    sign = -1 if (m - 1) % 2 else 1
    total = None
    for g in _base_gauss_sums(p, f, e):
        term = (g**m).scale(sign)
        total = term if total is None else total + term
    return total.to_cyclotomic()
