"""Quivers with potential and the finite-field counting backends.

Field elements are handled as integer indices (see `ffield.VecField`);
matrices are index arrays of shape (..., rows, cols).  Every count ends in a
`TwistedAccumulator`, i.e. a histogram of F_p-traces, so chunked and threaded
reductions are exact and order independent.
"""

from __future__ import annotations

import itertools
import math
import re
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

import numpy as np

from .budget import check_budget
from .cyclo import CyclotomicValue, TwistedAccumulator
from .ffield import VecField, prime_power, vec_field

CHUNK = 1 << 20


# --- data model ---------------------------------------------------------------

@dataclass(frozen=True)
class QuiverSpec:
    vertices: tuple[str, ...]
    arrows: tuple[tuple[str, str, str], ...]  # (name, source, target)

    def __post_init__(self):
        names = [a[0] for a in self.arrows]
        if len(set(names)) != len(names):
            raise ValueError("arrow names must be unique")
        vs = set(self.vertices)
        for name, s, t in self.arrows:
            if s not in vs or t not in vs:
                raise ValueError(f"arrow {name} has an end outside the vertex set")

    def arrow(self, name: str) -> tuple[str, str, str]:
        for a in self.arrows:
            if a[0] == name:
                return a
        raise KeyError(name)

    def euler_form(self, d: dict, e: dict) -> int:
        """chi_Q(d, e) = sum d_i e_i - sum_a d_{s(a)} e_{t(a)}."""
        return (sum(d.get(i, 0) * e.get(i, 0) for i in self.vertices)
                - sum(d.get(s, 0) * e.get(t, 0) for _, s, t in self.arrows))

    def rep_dimension(self, gamma: dict) -> int:
        return sum(gamma.get(s, 0) * gamma.get(t, 0) for _, s, t in self.arrows)

    def matrix_shape(self, name: str, gamma: dict) -> tuple[int, int]:
        _, s, t = self.arrow(name)
        return gamma.get(t, 0), gamma.get(s, 0)


@dataclass(frozen=True)
class Potential:
    terms: tuple[tuple[int, tuple[str, ...]], ...]

    @classmethod
    def parse(cls, text: str) -> Potential:
        """Comma separated signed words, e.g. "+1 a b c, -1 b a c, +1 c c c"."""
        terms = []
        for chunk in text.split(","):
            toks = chunk.split()
            if not toks or toks == ["0"]:
                continue
            coef = 1
            if re.fullmatch(r"[+-]?\d+", toks[0]):
                coef = int(toks[0])
                toks = toks[1:]
            elif toks[0] in "+-":
                coef = -1 if toks[0] == "-" else 1
                toks = toks[1:]
            if not toks:
                raise ValueError(f"empty word in potential term {chunk!r}")
            terms.append((coef, tuple(toks)))
        return cls(tuple(terms))

    @classmethod
    def zero(cls) -> Potential:
        return cls(())

    def letters(self) -> set[str]:
        return {a for _, w in self.terms for a in w}

    def __add__(self, other: Potential) -> Potential:
        return Potential(self.terms + other.terms)

    def validate(self, Q: QuiverSpec) -> None:
        for _, w in self.terms:
            arrows = [Q.arrow(a) for a in w]
            # matrix product M_{w1} ... M_{wk}: s(w_i) = t(w_{i+1}), closing up
            for i in range(len(arrows)):
                nxt = arrows[(i + 1) % len(arrows)]
                if arrows[i][1] != nxt[2]:
                    raise ValueError(f"word {' '.join(w)} is not a closed path")

    def __str__(self) -> str:
        return ", ".join(f"{c:+d} {' '.join(w)}" for c, w in self.terms) or "0"


def parse_quiver_text(text: str) -> tuple[QuiverSpec, Potential]:
    fields = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, val = line.partition(":")
        fields[key.strip().lower()] = val.strip()
    if "vertices" not in fields or "arrows" not in fields:
        raise ValueError("quiver text needs 'vertices:' and 'arrows:' lines")
    vertices = tuple(v for v in re.split(r"[\s,]+", fields["vertices"]) if v)
    arrows = []
    for chunk in fields["arrows"].split(","):
        toks = chunk.split()
        if not toks:
            continue
        if len(toks) != 3:
            raise ValueError(f"arrow spec {chunk!r} should read 'name source target'")
        arrows.append(tuple(toks))
    Q = QuiverSpec(vertices, tuple(arrows))
    W = Potential.parse(fields.get("potential", ""))
    W.validate(Q)
    return Q, W


def three_loop(d: int | None = 2) -> tuple[QuiverSpec, Potential]:
    """One vertex, loops a, b, c, potential W_d = abc - bac + c^d (d=None: abc - bac)."""
    Q = QuiverSpec(("1",), (("a", "1", "1"), ("b", "1", "1"), ("c", "1", "1")))
    terms = [(1, ("a", "b", "c")), (-1, ("b", "a", "c"))]
    if d:
        terms.append((1, ("c",) * d))
    return Q, Potential(tuple(terms))


def framed(Q: QuiverSpec, vertex: str, arrow: str = "j", frame: str = "inf") -> QuiverSpec:
    return QuiverSpec(Q.vertices + (frame,), Q.arrows + ((arrow, frame, vertex),))


def gl_order(n: int, q: int) -> int:
    if n < 0:
        raise ValueError("n must be >= 0")
    out = 1
    for i in range(n):
        out *= q**n - q**i
    return out


# --- batched enumeration of product spaces ------------------------------------

class _TraceEvaluator:
    """Evaluates Tr(W) on batches, caching products of inner-only prefixes."""

    def __init__(self, W: Potential, F: VecField, inner: Iterable[str] = ()):
        self.F = F
        self.inner = set(inner)
        self.terms = [(c, self._rotate(w)) for c, w in W.terms]
        self.cache: dict[tuple[str, ...], np.ndarray] = {}

    def _rotate(self, w: tuple[str, ...]) -> tuple[str, ...]:
        rots = [w[i:] + w[:i] for i in range(len(w))]

        def run(r):
            n = 0
            for a in r[:-1]:
                if a not in self.inner:
                    break
                n += 1
            return n

        best = max(run(r) for r in rots)
        return min(r for r in rots if run(r) == best)

    def _prefix(self, w: tuple[str, ...], mats) -> np.ndarray:
        if len(w) == 1:
            return mats[w[0]]
        cacheable = all(a in self.inner for a in w)
        if cacheable and w in self.cache:
            return self.cache[w]
        out = self.F.matmul(self._prefix(w[:-1], mats), mats[w[-1]])
        if cacheable:
            self.cache[w] = out
        return out

    def __call__(self, mats) -> np.ndarray:
        F = self.F
        acc = None
        for coef, w in self.terms:
            if coef % F.p == 0:
                continue
            if len(w) == 1:
                tr = F.mat_trace(mats[w[0]])
            else:
                tr = F.trace_of_product(self._prefix(w[:-1], mats), mats[w[-1]])
            if coef % F.p != 1:
                tr = F.scale(coef, tr)
            acc = tr if acc is None else F.add(acc, tr)
        if acc is None:
            acc = np.zeros(1, dtype=np.int64)
        return acc


def _decode(F: VecField, idx: np.ndarray, nvars: int) -> np.ndarray:
    """Base-Q digits of flat indices: shape (len(idx), nvars)."""
    out = np.empty(idx.shape + (nvars,), dtype=np.int64)
    rest = idx.copy()
    for i in range(nvars):
        out[..., i] = rest % F.Q
        rest //= F.Q
    return out


def _split_mats(vals: np.ndarray, shapes: Sequence[tuple[str, tuple[int, int]]]) -> dict:
    mats = {}
    off = 0
    for name, (r, c) in shapes:
        m = r * c
        mats[name] = vals[..., off:off + m].reshape(vals.shape[:-1] + (r, c))
        off += m
    return mats


def enumerate_sum(F: VecField, inner: Sequence[tuple[str, tuple[int, int]]],
                  outer: Sequence[tuple[str, tuple[int, int]]], fn,
                  workers: int = 1, chunk: int = CHUNK, what: str = "") -> TwistedAccumulator:
    """Sum of psi(Tr value) over the product of all listed matrix spaces.

    ``fn(mats)`` returns ``(values, mask)`` with mask possibly None.  Inner
    spaces are materialized once with shape (1, N_in, r, c); outer ones come in
    batches of shape (B, 1, r, c).
    """
    m_in = sum(r * c for _, (r, c) in inner)
    m_out = sum(r * c for _, (r, c) in outer)
    check_budget(F.Q ** (m_in + m_out), what=what)
    n_in = F.Q**m_in
    n_out = F.Q**m_out
    inner_mats = _split_mats(_decode(F, np.arange(n_in, dtype=np.int64), m_in)[None], inner)
    batch = max(1, chunk // n_in)

    def run(start: int) -> TwistedAccumulator:
        stop = min(n_out, start + batch)
        mats = dict(inner_mats)
        if m_out:
            ov = _decode(F, np.arange(start, stop, dtype=np.int64), m_out)[:, None]
            mats.update(_split_mats(ov, outer))
        vals, mask = fn(mats)
        shape = (stop - start, n_in)
        acc = TwistedAccumulator(F.p)
        tr = np.broadcast_to(F.trace(vals), shape)
        acc.add_traces(tr, None if mask is None else np.broadcast_to(mask, shape))
        return acc

    starts = range(0, n_out, batch)
    total = TwistedAccumulator(F.p)
    if workers > 1 and len(starts) > 1:
        run(starts[0])  # warm caches before fanning out
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(run, starts))
    else:
        parts = map(run, starts)
    for part in parts:
        total = total.merge(part)
    return total


def _plan(F: VecField, shapes: Sequence[tuple[str, tuple[int, int]]], chunk: int = CHUNK):
    """Greedy split: leading arrows become inner while they fit in a chunk."""
    inner, outer = [], []
    size = 1
    for s in shapes:
        m = F.Q ** (s[1][0] * s[1][1])
        if not outer and size * m <= chunk:
            inner.append(s)
            size *= m
        else:
            outer.append(s)
    return inner, outer


def rep_space_twisted_sum(Q: QuiverSpec, W: Potential, gamma: dict, p: int, k: int = 1,
                          workers: int = 1, order: Sequence[str] | None = None) -> CyclotomicValue:
    """sum over X_gamma(Q)(F_{p^k}) of psi(Tr W).

    Arrows absent from W contribute the factor q^{k * (their dimension)}.
    """
    W.validate(Q)
    F = vec_field(p, k)
    used = W.letters()
    names = list(order) if order else [a[0] for a in Q.arrows]
    names = [a for a in names if a in used] + [a[0] for a in Q.arrows if a[0] in used and a[0] not in names]
    free_dim = sum(r * c for r, c in (Q.matrix_shape(a[0], gamma) for a in Q.arrows if a[0] not in used))
    shapes = [(a, Q.matrix_shape(a, gamma)) for a in names]
    shapes = [s for s in shapes if s[1][0] * s[1][1] > 0]
    zero_sized = [a for a in names if a not in dict(shapes)]
    if any(any(a in zero_sized for a in w) for _, w in W.terms):
        # words through a zero-dimensional space vanish
        W = Potential(tuple(t for t in W.terms if not any(a in zero_sized for a in t[1])))
    inner, outer = _plan(F, shapes)
    ev = _TraceEvaluator(W, F, [s[0] for s in inner])
    acc = enumerate_sum(F, inner, outer, lambda mats: (ev(mats), None), workers,
                        what="representation space")
    return acc.value() * F.Q**free_dim


def orthogonality_sum(M: np.ndarray, p: int, k: int = 1) -> CyclotomicValue:
    """sum_{A in Mat_n(F_q)} psi(Tr(A M))."""
    F = vec_field(p, k)
    M = np.asarray(M, dtype=np.int64)
    n = M.shape[0]
    inner, outer = _plan(F, [("a", (n, n))])
    return enumerate_sum(F, inner, outer,
                         lambda mats: (F.trace_of_product(mats["a"], M), None),
                         what="orthogonality sum").value()


# --- polynomials over F_Q -----------------------------------------------------

def _poly_mul_vec(F: VecField, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Products of coefficient arrays (..., la) x (..., lb), low degree first."""
    la, lb = a.shape[-1], b.shape[-1]
    shape = np.broadcast_shapes(a.shape[:-1], b.shape[:-1])
    out = np.zeros(shape + (la + lb - 1,), dtype=np.int64)
    for i in range(la):
        for j in range(lb):
            out[..., i + j] = F.add(out[..., i + j], F.mul(a[..., i], b[..., j]))
    return out


def _monic_table(F: VecField, deg: int) -> np.ndarray:
    """All monic polynomials of degree deg: (Q^deg, deg + 1), ordered by index."""
    idx = np.arange(F.Q**deg, dtype=np.int64)
    co = _decode(F, idx, deg)
    return np.concatenate([co, np.ones(idx.shape + (1,), dtype=np.int64)], axis=-1)


@lru_cache(maxsize=32)
def irreducible_polys(p: int, k: int, deg: int) -> np.ndarray:
    """Monic irreducibles of degree deg over F_{p^k}; rows are a_0..a_{deg-1}."""
    F = vec_field(p, k)
    if deg == 1:
        return np.arange(F.Q, dtype=np.int64)[:, None]
    check_budget(F.Q**deg, what=f"irreducible sieve, degree {deg}")
    reducible = np.zeros(F.Q**deg, dtype=bool)
    weights = F.Q ** np.arange(deg, dtype=np.int64)
    for i in range(1, deg // 2 + 1):
        A = _monic_table(F, i)
        B = _monic_table(F, deg - i)
        for s in range(0, A.shape[0], max(1, CHUNK // B.shape[0])):
            prod = _poly_mul_vec(F, A[s:s + max(1, CHUNK // B.shape[0]), None, :], B[None, :, :])
            reducible[(prod[..., :deg] @ weights).ravel()] = True
    keep = np.nonzero(~reducible)[0]
    out = _decode(F, keep, deg)
    out.flags.writeable = False
    return out


def count_irreducible(deg: int, q: int) -> int:
    """Number of monic irreducibles of degree deg over F_q (Moebius formula)."""
    total = 0
    for e in range(1, deg + 1):
        if deg % e == 0:
            total += _mobius(e) * q ** (deg // e)
    return total // deg


def _mobius(n: int) -> int:
    res, m, f = 1, n, 2
    while f * f <= m:
        if m % f == 0:
            m //= f
            if m % f == 0:
                return 0
            res = -res
        f += 1
    if m > 1:
        res = -res
    return res


def root_power_sums(F: VecField, coeffs: np.ndarray, max_e: int) -> list[np.ndarray]:
    """[p_1, ..., p_max_e]: power sums of roots of monic polys with given low coefficients."""
    deg = coeffs.shape[-1]
    # e_i = (-1)^i a_{deg-i}
    e = [None] + [coeffs[..., deg - i] if i % 2 == 0 else F.neg(coeffs[..., deg - i])
                  for i in range(1, deg + 1)]
    ps = [None]
    for m in range(1, max_e + 1):
        acc = np.zeros(coeffs.shape[:-1], dtype=np.int64)
        for i in range(1, min(m - 1, deg) + 1):
            t = F.mul(e[i], ps[m - i])
            acc = F.add(acc, t) if i % 2 == 1 else F.sub(acc, t)
        if m <= deg:
            t = F.scale(m, e[m])
            acc = F.add(acc, t) if m % 2 == 1 else F.sub(acc, t)
        ps.append(acc)
    return ps[1:]


# --- partitions and centralizers ------------------------------------------------

@lru_cache(maxsize=None)
def partitions(n: int, largest: int | None = None) -> tuple[tuple[int, ...], ...]:
    if largest is None:
        largest = n
    if n == 0:
        return ((),)
    out = []
    for first in range(min(n, largest), 0, -1):
        for rest in partitions(n - first, first):
            out.append((first,) + rest)
    return tuple(out)


def conjugate(lam: Sequence[int]) -> tuple[int, ...]:
    return tuple(sum(1 for x in lam if x > i) for i in range(lam[0])) if lam else ()


def nilpotent_centralizer_order(lam: Sequence[int], Q: int) -> int:
    """|centralizer in GL| of a nilpotent of Jordan type lam over F_Q."""
    n_sq = sum(c * c for c in conjugate(lam))
    mult = Counter(lam)
    num = Fraction(Q) ** n_sq
    for m in mult.values():
        for j in range(1, m + 1):
            num *= 1 - Fraction(1, Q**j)
    assert num.denominator == 1
    return int(num)


def class_types(n: int) -> list[tuple[tuple[int, tuple[int, ...]], ...]]:
    """Multisets of (degree, partition) slots with sum degree*|partition| = n."""
    slots = sorted({(d, lam) for d in range(1, n + 1) for m in range(1, n // d + 1)
                    for lam in partitions(m)}, key=lambda s: (s[0], -len(s[1]), s[1]))
    out = []

    def rec(start, remaining, acc):
        if remaining == 0:
            out.append(tuple(acc))
            return
        for i in range(start, len(slots)):
            d, lam = slots[i]
            size = d * sum(lam)
            if size <= remaining:
                rec(i, remaining - size, acc + [slots[i]])

    rec(0, n, [])
    return out


def type_centralizer_order(tp, q: int) -> int:
    out = 1
    for d, lam in tp:
        out *= nilpotent_centralizer_order(lam, q**d)
    return out


def type_centralizer_dim(tp) -> int:
    return sum(d * sum(c * c for c in conjugate(lam)) for d, lam in tp)


def type_symmetry(tp) -> int:
    out = 1
    for m in Counter(tp).values():
        out *= math.factorial(m)
    return out


def type_class_count(tp, q: int) -> int:
    """Number of classes of the given type (distinct irreducibles per slot)."""
    by_deg = Counter(d for d, _ in tp)
    total = 1
    for d, m in by_deg.items():
        N = count_irreducible(d, q)
        for i in range(m):
            total *= N - i
    return total // type_symmetry(tp)


@dataclass(frozen=True)
class ConjClass:
    """A conjugacy class of Mat_n(F_q) by its primary decomposition."""

    q: int
    n: int
    parts: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]  # (monic f low->high, partition)
    centralizer_order: int
    class_size: int
    centralizer_dim: int

    def representative(self) -> np.ndarray:
        p, k = prime_power(self.q)
        F = vec_field(p, k)
        blocks = []
        for f, lam in self.parts:
            for part in lam:
                h = np.array([1], dtype=np.int64)
                for _ in range(part):
                    h = _poly_mul_vec(F, h, np.array(f, dtype=np.int64))
                blocks.append(_companion(F, h))
        out = np.zeros((self.n, self.n), dtype=np.int64)
        off = 0
        for b in blocks:
            m = b.shape[0]
            out[off:off + m, off:off + m] = b
            off += m
        return out

    def char_poly_parts(self) -> list[tuple[tuple[int, ...], int]]:
        return [(f, sum(lam)) for f, lam in self.parts]


def _companion(F: VecField, h: np.ndarray) -> np.ndarray:
    m = len(h) - 1
    C = np.zeros((m, m), dtype=np.int64)
    for i in range(m - 1):
        C[i + 1, i] = 1
    C[:, m - 1] = F.neg(h[:m])
    return C


def conj_classes(n: int, q: int) -> Iterator[ConjClass]:
    """Every conjugacy class of Mat_n(F_q) once, in a deterministic order."""
    p, k = prime_power(q)
    g = gl_order(n, q)
    check_budget(sum(type_class_count(tp, q) for tp in class_types(n)), what="class enumeration")
    for tp in class_types(n):
        cent = type_centralizer_order(tp, q)
        dim = type_centralizer_dim(tp)
        pools = [irreducible_polys(p, k, d) for d, _ in tp]
        for choice in _distinct_choices(tp, [len(x) for x in pools]):
            parts = tuple((tuple(int(c) for c in pools[i][j]) + (1,), tp[i][1])
                          for i, j in enumerate(choice))
            yield ConjClass(q, n, parts, cent, g // cent, dim)


def _distinct_choices(tp, sizes) -> Iterator[tuple[int, ...]]:
    """Index choices: same-degree slots distinct, identical slots increasing."""
    for choice in itertools.product(*[range(s) for s in sizes]):
        ok = True
        for i in range(len(tp)):
            for j in range(i + 1, len(tp)):
                if tp[i][0] == tp[j][0] and choice[i] == choice[j]:
                    ok = False
                elif tp[i] == tp[j] and choice[i] > choice[j]:
                    ok = False
        if ok:
            yield choice


def class_type_sum(n: int, p: int, k: int, slot_value, weight) -> list[int]:
    """Histogram over all classes of Mat_n(F_Q), Q = p^k, of the trace of
    sum_slots |lam| * slot_value(deg)[f], each class weighted by weight(type).

    ``slot_value(deg)`` returns per-irreducible field values (or None for 0).
    """
    F = vec_field(p, k)
    counts = [0] * p
    check_budget(sum(type_class_count(tp, F.Q) * type_symmetry(tp) for tp in class_types(n)),
                 what="class-type enumeration")
    for tp in class_types(n):
        w = weight(tp)
        sizes = [len(irreducible_polys(p, k, d)) for d, _ in tp]
        total = None
        mask = None
        ndim = len(tp)
        for i, (d, lam) in enumerate(tp):
            shape = [1] * ndim
            shape[i] = sizes[i]
            v = slot_value(d)
            if v is not None:
                term = F.scale(sum(lam), v).reshape(shape)
                total = term if total is None else F.add(total, term)
            for j in range(i):
                if tp[j][0] == d:
                    ai = np.arange(sizes[i]).reshape(shape)
                    sj = [1] * ndim
                    sj[j] = sizes[j]
                    aj = np.arange(sizes[j]).reshape(sj)
                    m = ai != aj
                    mask = m if mask is None else (mask & m)
        full = tuple(sizes)
        if total is None:
            tr = np.zeros(full, dtype=np.int64)
        else:
            tr = np.broadcast_to(F.trace(total), full)
        mk = None if mask is None else np.broadcast_to(mask, full)
        h = np.bincount((tr if mk is None else tr[mk]).ravel(), minlength=p)
        sym = type_symmetry(tp)
        for a in range(p):
            c = int(h[a])
            assert c % sym == 0
            counts[a] += w * (c // sym)
    return counts


# --- commuting variety --------------------------------------------------------

def _c_only_powers(twist: Potential) -> list[tuple[int, int]] | None:
    """[(coef, e)] if every word is a power of c, else None."""
    out = []
    for c, w in twist.terms:
        if any(a != "c" for a in w):
            return None
        out.append((c, len(w)))
    return out


def _check_twist(twist: Potential) -> None:
    bad = twist.letters() - {"b", "c"}
    if bad:
        raise ValueError(f"twist may only use letters b, c; got {sorted(bad)}")


def commuting_twisted_count(n: int, p: int, k: int = 1, twist: Potential | None = None,
                            backend: str = "classes", workers: int = 1) -> CyclotomicValue:
    """sum over commuting (B, C) in Mat_n(F_{p^k})^2 of psi(Tr twist(B, C))."""
    twist = twist or Potential.zero()
    _check_twist(twist)
    if n == 0:
        return CyclotomicValue.one(p)
    if backend == "brute":
        return _commuting_brute(n, p, k, twist, workers)
    if backend != "classes":
        raise ValueError(f"unknown backend {backend!r}")
    powers = _c_only_powers(twist)
    if powers is not None:
        return _commuting_classes_c(n, p, k, powers)
    return _commuting_classes_b(n, p, k, twist, workers)


def _commuting_brute(n, p, k, twist, workers):
    F = vec_field(p, k)
    ev = _TraceEvaluator(twist, F, ["b"])
    shapes = [("b", (n, n)), ("c", (n, n))]
    inner, outer = _plan(F, shapes)
    ev.inner = {s[0] for s in inner}

    def fn(mats):
        B, C = mats["b"], mats["c"]
        comm = F.sub(F.matmul(B, C), F.matmul(C, B))
        mask = np.all(comm == 0, axis=(-2, -1))
        return ev(mats), mask

    return enumerate_sum(F, inner, outer, fn, workers, what="commuting pairs").value()


def _commuting_classes_c(n, p, k, powers):
    F = vec_field(p, k)
    Q = F.Q
    g = gl_order(n, Q)
    max_e = max((e for _, e in powers), default=0)

    @lru_cache(maxsize=None)
    def slot_value(d):
        if not powers:
            return None
        ps = root_power_sums(F, irreducible_polys(p, k, d), max_e)
        acc = np.zeros(len(ps[0]), dtype=np.int64)
        for c, e in powers:
            acc = F.add(acc, F.scale(c, ps[e - 1]))
        return acc

    def weight(tp):
        return g // type_centralizer_order(tp, Q) * Q ** type_centralizer_dim(tp)

    return CyclotomicValue.from_counts(p, class_type_sum(n, p, k, slot_value, weight))


def _commuting_classes_b(n, p, k, twist, workers):
    F = vec_field(p, k)
    total = TwistedAccumulator(p)
    ev = _TraceEvaluator(twist, F)
    budget_pts = sum(type_class_count(tp, F.Q) * F.Q ** type_centralizer_dim(tp)
                     for tp in class_types(n))
    check_budget(budget_pts, what="centralizer enumeration")
    for cls in conj_classes(n, F.Q):
        C = cls.representative()
        basis = centralizer_basis(F, C)
        assert len(basis) == cls.centralizer_dim
        part = centralizer_sum(F, C, basis, ev)
        for a in range(p):
            total.counts[a] += cls.class_size * part.counts[a]
    return total.value()


def centralizer_sum(F: VecField, C: np.ndarray, basis: list[np.ndarray], ev) -> TwistedAccumulator:
    """sum over B in span(basis) of psi(ev({b: B, c: C}))."""
    dim = len(basis)
    n = C.shape[0]
    acc = TwistedAccumulator(F.p)
    N = F.Q**dim
    step = max(1, CHUNK)
    for s in range(0, N, step):
        T = _decode(F, np.arange(s, min(N, s + step), dtype=np.int64), dim)
        B = np.zeros(T.shape[:1] + (n, n), dtype=np.int64)
        for i, M in enumerate(basis):
            B = F.add(B, F.mul(T[:, i, None, None], M[None]))
        vals = ev({"b": B, "c": C[None]})
        acc.add_traces(np.broadcast_to(F.trace(vals), T.shape[:1]))
    return acc


# exact linear algebra over F_Q on python scalars

def _rref(F: VecField, M: np.ndarray) -> tuple[np.ndarray, list[int]]:
    A = np.array(M, dtype=np.int64)
    rows, cols = A.shape
    pivots = []
    r = 0
    for c in range(cols):
        piv = next((i for i in range(r, rows) if A[i, c] != 0), None)
        if piv is None:
            continue
        A[[r, piv]] = A[[piv, r]]
        A[r] = F.mul(F.inv(A[r, c]), A[r])
        for i in range(rows):
            if i != r and A[i, c] != 0:
                A[i] = F.sub(A[i], F.mul(A[i, c], A[r]))
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return A, pivots


def rank(F: VecField, M: np.ndarray) -> int:
    return len(_rref(F, M)[1])


def nullspace(F: VecField, M: np.ndarray) -> list[np.ndarray]:
    A, pivots = _rref(F, M)
    cols = A.shape[1]
    free = [c for c in range(cols) if c not in pivots]
    basis = []
    for f in free:
        v = np.zeros(cols, dtype=np.int64)
        v[f] = 1
        for i, pc in enumerate(pivots):
            v[pc] = F.neg(A[i, f])
        basis.append(v)
    return basis


def ad_matrix(F: VecField, C: np.ndarray) -> np.ndarray:
    """Matrix of X -> XC - CX on row-major flattened X."""
    n = C.shape[0]
    cols = []
    for idx in range(n * n):
        E = np.zeros((n, n), dtype=np.int64)
        E[divmod(idx, n)] = 1
        cols.append(F.sub(F.matmul(E, C), F.matmul(C, E)).ravel())
    return np.stack(cols, axis=1)


def centralizer_basis(F: VecField, C: np.ndarray) -> list[np.ndarray]:
    n = C.shape[0]
    return [v.reshape(n, n) for v in nullspace(F, ad_matrix(F, C))]


# --- noncommutative Hilbert scheme -------------------------------------------------

def nc_hilb_twisted_count(n: int, p: int, k: int = 1, W: Potential | None = None,
                          method: str = "normalized", workers: int = 1) -> CyclotomicValue:
    """Stable framed tuples (A, B, C, v) weighted by psi(Tr W), over |GL_n|."""
    W = W or Potential.zero()
    bad = W.letters() - {"a", "b", "c"}
    if bad:
        raise ValueError(f"potential letters {sorted(bad)} are not loops a, b, c")
    if n == 0:
        return CyclotomicValue.one(p)
    F = vec_field(p, k)
    shapes = [("b", (n, n)), ("c", (n, n)), ("a", (n, n))]
    inner, outer = _plan(F, shapes)
    ev = _TraceEvaluator(W, F, [s[0] for s in inner])
    g = gl_order(n, F.Q)
    if method == "normalized":
        # GL_n permutes nonzero framing vectors transitively: fix v = e_1
        if n > 2:
            return _nc_hilb_python(n, F, W, normalized=True)

        def fn(mats):
            if n == 1:
                return ev(mats), None
            mask = None
            for a in ("a", "b", "c"):
                m = mats[a][..., 1, 0] != 0
                mask = m if mask is None else (mask | m)
            return ev(mats), mask

        acc = enumerate_sum(F, inner, outer, fn, workers, what="framed triples")
        return acc.value() * Fraction(F.Q**n - 1, g)
    if method != "direct":
        raise ValueError(f"unknown method {method!r}")
    if n > 2:
        return _nc_hilb_python(n, F, W, normalized=False)
    outer = outer + [("v", (n, 1))]

    def fn_direct(mats):
        v = mats["v"]
        nonzero = np.any(v != 0, axis=(-2, -1))
        if n == 1:
            return ev(mats), nonzero
        cyc = None
        for a in ("a", "b", "c"):
            Xv = F.matmul(mats[a], v)
            det = F.sub(F.mul(v[..., 0, 0], Xv[..., 1, 0]), F.mul(v[..., 1, 0], Xv[..., 0, 0]))
            m = det != 0
            cyc = m if cyc is None else (cyc | m)
        return ev(mats), nonzero & cyc

    acc = enumerate_sum(F, inner, outer, fn_direct, workers, what="framed tuples")
    return acc.value() * Fraction(1, g)


def is_cyclic(F: VecField, mats: Sequence[np.ndarray], v: np.ndarray) -> bool:
    """Breadth-first closure of span{v} under the given matrices."""
    n = v.shape[0]
    basis = []
    frontier = [v]
    for _ in range(n):
        new = []
        for w in frontier:
            cand = np.stack(basis + [w]) if basis else w[None]
            if rank(F, cand) > len(basis):
                basis.append(w)
                new.append(w)
        if len(basis) == n:
            return True
        frontier = [F.matmul(M, w[:, None])[:, 0] for w in new for M in mats]
        if not frontier:
            break
    return len(basis) == n


def _nc_hilb_python(n, F, W, normalized):
    dim = 3 * n * n + (0 if normalized else n)
    check_budget(F.Q**dim, what="framed tuples (python path)")
    counts = [0] * F.p
    ev = _TraceEvaluator(W, F)
    e1 = np.zeros(n, dtype=np.int64)
    e1[0] = 1
    for idx in range(F.Q**dim):
        vals = _decode(F, np.array([idx]), dim)[0]
        A, B, C = (vals[i * n * n:(i + 1) * n * n].reshape(n, n) for i in range(3))
        v = e1 if normalized else vals[3 * n * n:]
        if not np.any(v) or not is_cyclic(F, [A, B, C], v):
            continue
        t = int(F.trace(ev({"a": A[None], "b": B[None], "c": C[None]}))[0])
        counts[t] += 1
    g = gl_order(n, F.Q)
    scale = Fraction(F.Q**n - 1, g) if normalized else Fraction(1, g)
    return CyclotomicValue.from_counts(F.p, counts) * scale


# --- symmetric powers of the line ---------------------------------------------------

def sym_line_twisted_count(d: int, n: int, p: int, k: int = 1, full: bool = False) -> CyclotomicValue:
    """sum over monic degree-n f in F_{p^k}[t] of psi(Tr p_d(roots of f)).

    p_d only involves e_1..e_min(d,n); the remaining coefficients are summed
    out as a power of q unless ``full`` asks for the plain enumeration.
    """
    if n == 0:
        return CyclotomicValue.one(p)
    F = vec_field(p, k)
    r = n if full else min(n, d)
    check_budget(F.Q**r, what="monic polynomials")
    acc = TwistedAccumulator(p)
    N = F.Q**r
    for s in range(0, N, CHUNK):
        # columns hold e_1..e_r; with sign changes they are the top coefficients
        e = _decode(F, np.arange(s, min(N, s + CHUNK), dtype=np.int64), r)
        coeffs = np.zeros(e.shape[:1] + (n,), dtype=np.int64)
        for i in range(1, r + 1):
            coeffs[:, n - i] = e[:, i - 1] if i % 2 == 0 else F.neg(e[:, i - 1])
        pd = root_power_sums(F, coeffs, d)[d - 1]
        acc.add_traces(F.trace(pd))
    return acc.value() * F.Q ** (n - r)


def diagonal_sum(twist: Potential, n: int, p: int, k: int = 1) -> CyclotomicValue:
    """sum over (y, z) in F_{p^k}^2 of psi(n * twist(y, z)), twist read on scalars."""
    _check_twist(twist)
    F = vec_field(p, k)
    Q = F.Q
    check_budget(Q * Q, what="diagonal pairs")
    y = np.arange(Q, dtype=np.int64)[:, None]
    z = np.arange(Q, dtype=np.int64)[None, :]
    acc = np.zeros((1, 1), dtype=np.int64)
    for c, w in twist.terms:
        t = np.ones((1, 1), dtype=np.int64)
        for a in w:
            t = F.mul(t, y if a == "b" else z)
        acc = F.add(acc, F.scale(c * n, t))
    tr = np.broadcast_to(F.trace(acc), (Q, Q))
    out = TwistedAccumulator(p)
    out.add_traces(tr)
    return out.value()
