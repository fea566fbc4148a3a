"""Tate-with-monodromy classes, their exponential-sum realization, and
plethystic EXP/LOG on truncated series.

Two coefficient kinds share one set of series routines:

* `MotiveClass`: rational functions in x (x standing for L^{1/2}) plus
  formal symbols <d> = [A^1 -> t^d].
* `AdamsSequence`: levelwise exponential sums (S_1, ..., S_K); Adams
  operations dilate the level index.

Plain rationals also work as coefficients and behave like constants of
unbounded depth.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Iterable, Union

from sympy import ZZ
from sympy.polys.fields import field

from .cyclo import CyclotomicValue, gauss_sum, power_character_sum

TATE_FIELD, X = field("x", ZZ)
_RING = TATE_FIELD.ring
_XR = _RING.gens[0]


class LevelOverflow(IndexError):
    """A level beyond the available depth was requested."""


class UnsupportedProduct(ArithmeticError):
    """Operation falls outside the supported symbolic subring."""


class ParityError(ValueError):
    """x cannot be realized consistently with x^2 = L at this prime."""


# --- realization --------------------------------------------------------------

class AdamsSequence:
    """Levelwise realization (S_1, ..., S_K) of a class at a fixed prime."""

    __slots__ = ("p", "values")

    def __init__(self, p: int, values: Iterable[CyclotomicValue]):
        vals = tuple(values)
        for v in vals:
            if v.p != p:
                raise ValueError(f"level value has conductor {v.p}, expected {p}")
        self.p = p
        self.values = vals

    @classmethod
    def constant(cls, p: int, c, depth: int) -> AdamsSequence:
        return cls(p, [CyclotomicValue.constant(p, c)] * depth)

    @classmethod
    def from_function(cls, p: int, depth: int, fn: Callable[[int], object]) -> AdamsSequence:
        """Level k value fn(k); rational results are embedded as constants."""
        vals = []
        for k in range(1, depth + 1):
            v = fn(k)
            if not isinstance(v, CyclotomicValue):
                v = CyclotomicValue.constant(p, v)
            vals.append(v)
        return cls(p, vals)

    @property
    def depth(self) -> int:
        return len(self.values)

    def level(self, k: int) -> CyclotomicValue:
        if not 1 <= k <= len(self.values):
            raise LevelOverflow(f"level {k} requested, depth is {len(self.values)}")
        return self.values[k - 1]

    __getitem__ = level

    def truncate(self, depth: int) -> AdamsSequence:
        if depth > self.depth:
            raise LevelOverflow(f"cannot extend depth {self.depth} to {depth}")
        return AdamsSequence(self.p, self.values[:depth])

    def dilate(self, m: int) -> AdamsSequence:
        """Adams operation without the overflow check (may return depth 0)."""
        if m < 1:
            raise ValueError("Adams index must be positive")
        return AdamsSequence(self.p, self.values[m - 1::m])

    def _binary(self, other, op) -> AdamsSequence:
        if isinstance(other, AdamsSequence):
            if other.p != self.p:
                raise ValueError("conductor mismatch")
            return AdamsSequence(self.p, [op(a, b) for a, b in zip(self.values, other.values)])
        if isinstance(other, (int, Fraction)):
            return AdamsSequence(self.p, [op(a, other) for a in self.values])
        if isinstance(other, MotiveClass):
            raise TypeError("realize the class before mixing it with an AdamsSequence")
        return NotImplemented

    def __add__(self, other):
        return self._binary(other, lambda a, b: a + b)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return self._binary(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._binary(other, lambda a, b: a * b)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._binary(other, lambda a, b: a / b)

    def __rtruediv__(self, other):
        return self._binary(other, lambda a, b: b / a)

    def __neg__(self):
        return AdamsSequence(self.p, [-a for a in self.values])

    def __pow__(self, e: int):
        return AdamsSequence(self.p, [a**e for a in self.values])

    def is_zero(self) -> bool:
        return all(v.is_zero() for v in self.values)

    def __eq__(self, other) -> bool:
        if isinstance(other, AdamsSequence):
            return self.p == other.p and self.values == other.values
        if isinstance(other, (int, Fraction)):
            return all(v == other for v in self.values)
        return NotImplemented

    def __hash__(self):
        return hash((self.p, self.values))

    def __repr__(self) -> str:
        return f"AdamsSequence(p={self.p}, [{', '.join(str(v) for v in self.values)}])"


def adams(s, m: int):
    """The m-th Adams operation; on realizations it keeps levels m, 2m, ..."""
    if isinstance(s, AdamsSequence):
        if m > s.depth:
            raise LevelOverflow(f"adams({m}) needs depth >= {m}, have {s.depth}")
        return s.dilate(m)
    return _adams(s, m)


def _adams(s, m: int):
    if m == 1:
        return s
    if isinstance(s, AdamsSequence):
        return s.dilate(m)
    if isinstance(s, MotiveClass):
        return s.adams(m)
    if isinstance(s, (int, Fraction)):
        return s
    raise TypeError(f"no Adams operation on {type(s).__name__}")


def sigma_n(c, n: int):
    """sigma^n via Newton: coefficient of t^n in exp(sum_k psi_k(c) t^k / k)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if isinstance(c, AdamsSequence) and n > c.depth:
        raise LevelOverflow(f"sigma^{n} needs depth >= {n}, have {c.depth}")
    h = [Fraction(1)]
    psi = [None] + [_adams(c, j) for j in range(1, n + 1)]
    for m in range(1, n + 1):
        acc = Fraction(0)
        for j in range(1, m + 1):
            acc = acc + psi[j] * h[m - j]
        h.append(acc * Fraction(1, m))
    out = h[n]
    if isinstance(c, AdamsSequence) and not isinstance(out, AdamsSequence):
        out = AdamsSequence.constant(c.p, out, c.depth // max(n, 1))
    return out


# --- symbolic classes ---------------------------------------------------------

TateLike = Union[int, Fraction, "MotiveClass"]


def _tate(v):
    if isinstance(v, Fraction):
        return TATE_FIELD(v.numerator) / v.denominator
    return TATE_FIELD(v)


class MotiveClass:
    """tate + sum_d mono[d] * <d>, all coefficients rational functions of x."""

    __slots__ = ("tate", "mono")

    def __init__(self, tate=0, mono: dict | None = None):
        self.tate = _tate(tate)
        m = {}
        for d, c in (mono or {}).items():
            d = int(d)
            c = _tate(c)
            if d < 1:
                raise ValueError("symbol index must be >= 1")
            if d == 1:
                continue  # <1> = 0
            if d == 2:
                self.tate = self.tate + c * X
                continue
            if c != 0:
                m[d] = m.get(d, TATE_FIELD(0)) + c
        self.mono = {d: c for d, c in sorted(m.items()) if c != 0}

    @classmethod
    def x(cls) -> MotiveClass:
        return cls(X)

    @classmethod
    def L(cls) -> MotiveClass:
        return cls(X**2)

    @classmethod
    def angle(cls, d: int) -> MotiveClass:
        """<d> = [A^1 -> t^d]."""
        return cls(0, {d: 1})

    @classmethod
    def coerce(cls, v) -> MotiveClass:
        if isinstance(v, MotiveClass):
            return v
        if isinstance(v, (int, Fraction)) or getattr(v, "field", None) == TATE_FIELD:
            return cls(v)
        raise TypeError(f"cannot interpret {type(v).__name__} as a motive class")

    def is_tate(self) -> bool:
        return not self.mono

    def __add__(self, other):
        if isinstance(other, AdamsSequence):
            return NotImplemented
        o = MotiveClass.coerce(other)
        mono = dict(self.mono)
        for d, c in o.mono.items():
            mono[d] = mono.get(d, TATE_FIELD(0)) + c
        return MotiveClass(self.tate + o.tate, mono)

    __radd__ = __add__

    def __neg__(self):
        return MotiveClass(-self.tate, {d: -c for d, c in self.mono.items()})

    def __sub__(self, other):
        return self + (-MotiveClass.coerce(other))

    def __rsub__(self, other):
        return MotiveClass.coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, AdamsSequence):
            return NotImplemented
        return motive_mul(self, MotiveClass.coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = MotiveClass.coerce(other)
        if o.mono:
            raise UnsupportedProduct("division by a class with monodromic part")
        if o.tate == 0:
            raise ZeroDivisionError("division by zero class")
        inv = 1 / o.tate
        return MotiveClass(self.tate * inv, {d: c * inv for d, c in self.mono.items()})

    def __rtruediv__(self, other):
        return MotiveClass.coerce(other) / self

    def __pow__(self, e: int):
        if e < 0:
            return MotiveClass(1) / (self ** (-e))
        out = MotiveClass(1)
        for _ in range(e):
            out = out * self
        return out

    def adams(self, m: int) -> MotiveClass:
        """psi_m acts on x by x -> (-1)^(m+1) x^m, so that psi_m(L) = L^m."""
        if m == 1:
            return self
        if self.mono:
            raise UnsupportedProduct("Adams operations on <d> symbols have no closed form here")
        return MotiveClass(_substitute(self.tate, m))

    def is_zero(self) -> bool:
        return self.tate == 0 and not self.mono

    def __eq__(self, other) -> bool:
        try:
            o = MotiveClass.coerce(other)
        except TypeError:
            return NotImplemented
        return self.tate == o.tate and self.mono == o.mono

    def __hash__(self):
        return hash((self.tate, tuple(self.mono.items())))

    def __repr__(self) -> str:
        return f"MotiveClass({self})"

    def __str__(self) -> str:
        parts = [] if self.tate == 0 and self.mono else [str(self.tate)]
        parts += [f"({c})*<{d}>" for d, c in self.mono.items()]
        return " + ".join(parts)

    def to_json(self) -> dict:
        return {"tate": str(self.tate), "mono": {str(d): str(c) for d, c in self.mono.items()}}


def _substitute(f, m: int):
    s = 1 if m % 2 else -1
    img = s * _XR**m
    num = f.numer.compose(_XR, img)
    den = f.denom.compose(_XR, img)
    return TATE_FIELD(num) / TATE_FIELD(den)


def motive_mul(a: MotiveClass, b: MotiveClass) -> MotiveClass:
    if a.mono and b.mono:
        raise UnsupportedProduct("products <a><b> with a, b >= 3 are not supported")
    mono = {d: c * b.tate for d, c in a.mono.items()}
    for d, c in b.mono.items():
        mono[d] = c * a.tate
    return MotiveClass(a.tate * b.tate, mono)


def translate_muhat(d: int) -> MotiveClass:
    """Monodromic image of [mu_d]: 1 - <d>."""
    if d < 1:
        raise ValueError("d must be >= 1")
    return MotiveClass(1) - MotiveClass.angle(d)


def _has_odd_powers(f) -> bool:
    return any(e[0] % 2 for e, _ in f.numer.terms()) or any(e[0] % 2 for e, _ in f.denom.terms())


def _eval_poly(poly, p: int, k: int, even_only: bool) -> CyclotomicValue:
    if even_only:
        q = p**k
        total = sum((Fraction(int(c)) * q ** (e[0] // 2) for e, c in poly.terms()), Fraction(0))
        return CyclotomicValue.constant(p, total)
    g = gauss_sum(p, k)
    acc = CyclotomicValue.zero(p)
    for e, c in poly.terms():
        acc = acc + g ** e[0] * int(c)
    return acc


def _eval_tate(f, p: int, k: int) -> CyclotomicValue:
    even = not _has_odd_powers(f)
    if not even and p % 4 != 1:
        raise ParityError(f"odd powers of x need p = 1 mod 4, got p={p}")
    den = _eval_poly(f.denom, p, k, even)
    if den.is_zero():
        raise ZeroDivisionError(f"denominator vanishes at level {k}")
    return _eval_poly(f.numer, p, k, even) / den


def realize(a, p: int, K: int) -> AdamsSequence:
    """Levels 1..K of the exponential-sum image of a class."""
    a = MotiveClass.coerce(a)
    if K < 1:
        raise ValueError("K must be >= 1")
    vals = []
    for k in range(1, K + 1):
        v = _eval_tate(a.tate, p, k)
        for d, c in a.mono.items():
            v = v + _eval_tate(c, p, k) * power_character_sum(d, p, k)
        vals.append(v)
    return AdamsSequence(p, vals)


# --- truncated series -----------------------------------------------------------

def _is_zero(c) -> bool:
    if isinstance(c, (int, Fraction)):
        return c == 0
    return c.is_zero()


def _is_one(c) -> bool:
    if isinstance(c, (int, Fraction)):
        return c == 1
    if isinstance(c, AdamsSequence):
        return all(v == 1 for v in c.values)
    return c == 1


class TruncatedSeries:
    """c_0 + c_1 T + ... + c_N T^N."""

    __slots__ = ("order", "coeffs")

    def __init__(self, coeffs: Iterable, order: int | None = None):
        cs = list(coeffs)
        if order is None:
            order = len(cs) - 1
        if len(cs) > order + 1:
            cs = cs[: order + 1]
        cs += [Fraction(0)] * (order + 1 - len(cs))
        self.order = order
        self.coeffs = tuple(Fraction(c) if isinstance(c, int) else c for c in cs)

    def __getitem__(self, n: int):
        if not 0 <= n <= self.order:
            raise IndexError(f"coefficient {n} beyond order {self.order}")
        return self.coeffs[n]

    def __len__(self):
        return self.order + 1

    def _order_with(self, other: TruncatedSeries) -> int:
        return min(self.order, other.order)

    def __add__(self, other: TruncatedSeries) -> TruncatedSeries:
        n = self._order_with(other)
        return TruncatedSeries([self.coeffs[i] + other.coeffs[i] for i in range(n + 1)], n)

    def __sub__(self, other: TruncatedSeries) -> TruncatedSeries:
        n = self._order_with(other)
        return TruncatedSeries([self.coeffs[i] - other.coeffs[i] for i in range(n + 1)], n)

    def __mul__(self, other):
        if not isinstance(other, TruncatedSeries):
            return TruncatedSeries([c * other for c in self.coeffs], self.order)
        n = self._order_with(other)
        out = []
        for m in range(n + 1):
            acc = Fraction(0)
            for i in range(m + 1):
                acc = acc + self.coeffs[i] * other.coeffs[m - i]
            out.append(acc)
        return TruncatedSeries(out, n)

    def map(self, fn) -> TruncatedSeries:
        return TruncatedSeries([fn(c) for c in self.coeffs], self.order)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return self.order == other.order and all(
            _coeff_eq(a, b) for a, b in zip(self.coeffs, other.coeffs))

    def __repr__(self) -> str:
        return f"TruncatedSeries(order={self.order}, {list(self.coeffs)})"


def _coeff_eq(a, b) -> bool:
    if isinstance(a, AdamsSequence) or isinstance(b, AdamsSequence):
        return bool(a == b) if isinstance(a, AdamsSequence) else bool(b == a)
    return bool(a == b)


def series_exp(U: TruncatedSeries) -> TruncatedSeries:
    """Ordinary exp of a series with zero constant term: n E_n = sum i U_i E_{n-i}."""
    N = U.order
    E = [Fraction(1)]
    for n in range(1, N + 1):
        acc = Fraction(0)
        for i in range(1, n + 1):
            acc = acc + U.coeffs[i] * E[n - i] * i
        E.append(acc * Fraction(1, n))
    return TruncatedSeries(E, N)


def series_log(Z: TruncatedSeries) -> TruncatedSeries:
    """Ordinary log of a series with constant term 1."""
    N = Z.order
    L = [Fraction(0)]
    for n in range(1, N + 1):
        acc = Z.coeffs[n] * n
        for i in range(1, n):
            acc = acc - L[i] * Z.coeffs[n - i] * i
        L.append(acc * Fraction(1, n))
    return TruncatedSeries(L, N)


def pleth_exp(S: TruncatedSeries) -> TruncatedSeries:
    """EXP(sum s_j T^j) = exp(sum_m sum_j psi_m(s_j) T^{jm} / m)."""
    if not _is_zero(S.coeffs[0]):
        raise ValueError("plethystic exponential needs constant term 0")
    N = S.order
    U = [Fraction(0)]
    for n in range(1, N + 1):
        acc = Fraction(0)
        for m in _divisors(n):
            acc = acc + _adams(S.coeffs[n // m], m) * Fraction(1, m)
        U.append(acc)
    return series_exp(TruncatedSeries(U, N))


def pleth_log(Z: TruncatedSeries) -> TruncatedSeries:
    """Inverse of `pleth_exp`."""
    if not _is_one(Z.coeffs[0]):
        raise ValueError("plethystic logarithm needs constant term 1")
    N = Z.order
    U = series_log(Z)
    s = [Fraction(0)]
    for n in range(1, N + 1):
        acc = U.coeffs[n]
        for m in _divisors(n):
            if m > 1:
                acc = acc - _adams(s[n // m], m) * Fraction(1, m)
        s.append(acc)
    return TruncatedSeries(s, N)


def _divisors(n: int) -> list[int]:
    return [m for m in range(1, n + 1) if n % m == 0]


def available_depth(c) -> float:
    """Number of readable levels; rationals and symbolic classes are unbounded."""
    if isinstance(c, AdamsSequence):
        return c.depth
    return float("inf")
