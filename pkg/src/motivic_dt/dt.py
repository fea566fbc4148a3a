"""Partition functions, DT invariant extraction and the identity checks."""

from __future__ import annotations

import contextlib
import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

import numpy as np
import sympy

from .budget import BudgetExceeded, check_budget
from .cyclo import CyclotomicValue, TwistedAccumulator, gauss_sum, power_character_sum
from .ffield import prime_power, vec_field
from .lambda_ring import (AdamsSequence, MotiveClass, TruncatedSeries, pleth_exp, pleth_log,
                          realize)
from .quiver import (Potential, QuiverSpec, _plan, commuting_twisted_count, diagonal_sum,
                     enumerate_sum, framed, gl_order, nc_hilb_twisted_count,
                     rep_space_twisted_sum, three_loop)


# --- reports ----------------------------------------------------------------

def _value_json(v) -> Any:
    if isinstance(v, CyclotomicValue):
        return v.to_json()
    if v is None:
        return None
    return str(v)


@dataclass
class Row:
    n: int | None
    k: int | None
    lhs: CyclotomicValue
    rhs: CyclotomicValue
    ms: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def equal(self) -> bool:
        return self.lhs == self.rhs

    def to_json(self, timing: bool = False) -> dict:
        out = {"n": self.n, "k": self.k, "lhs": _value_json(self.lhs),
               "rhs": _value_json(self.rhs), "equal": self.equal,
               "ms": round(self.ms, 3) if (timing and self.ms is not None) else None}
        out.update(self.extra)
        return out


@dataclass
class CheckReport:
    check: str
    params: dict
    rows: list[Row] = field(default_factory=list)
    flags: dict = field(default_factory=dict)
    partial: bool = False

    @property
    def passed(self) -> bool:
        return not self.partial and bool(self.rows) and all(r.equal for r in self.rows)

    def add(self, n, k, lhs, rhs, t0: float | None = None, **extra) -> Row:
        ms = None if t0 is None else (time.perf_counter() - t0) * 1000
        row = Row(n, k, lhs, rhs, ms, extra)
        self.rows.append(row)
        return row

    @contextlib.contextmanager
    def collecting(self):
        """Marks the report partial and attaches it to a budget overflow."""
        try:
            yield self
        except BudgetExceeded as e:
            self.partial = True
            e.partial_report = self
            raise

    def to_json(self, timing: bool = False) -> dict:
        out = {"check": self.check, "params": self.params,
               "rows": [r.to_json(timing) for r in self.rows], "pass": self.passed}
        if self.flags:
            out["flags"] = self.flags
        if self.partial:
            out["partial"] = True
        return out

    def dumps(self, timing: bool = False) -> str:
        return json.dumps(self.to_json(timing), indent=2, sort_keys=False) + "\n"

    def to_csv(self, timing: bool = False) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        extras = sorted({key for r in self.rows for key in r.extra})
        w.writerow(["n", "k", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "exact", "equal", "ms"] + extras)
        for r in self.rows:
            a, b = r.lhs.approx(), r.rhs.approx()
            ms = f"{r.ms:.3f}" if (timing and r.ms is not None) else ""
            w.writerow([_blank(r.n), _blank(r.k), f"{a.real:.6g}", f"{a.imag:.6g}",
                        f"{b.real:.6g}", f"{b.imag:.6g}", "true", str(r.equal).lower(), ms]
                       + [r.extra.get(key, "") for key in extras])
        return buf.getvalue()

    def table(self) -> str:
        lines = [f"{self.check}  {json.dumps(self.params, sort_keys=False)}"]
        for key, v in self.flags.items():
            lines.append(f"  {key}: {v}")
        lines.append(f"{'n':>3} {'k':>3}  {'equal':<5}  lhs  |  rhs")
        for r in self.rows:
            tag = "  ".join(f"{k}={v}" for k, v in r.extra.items())
            lines.append(f"{_blank(r.n):>3} {_blank(r.k):>3}  {str(r.equal):<5}  {r.lhs}  |  {r.rhs}"
                         + (f"  [{tag}]" if tag else ""))
        verdict = "PARTIAL" if self.partial else ("PASS" if self.passed else "FAIL")
        lines.append(verdict)
        return "\n".join(lines) + "\n"


def _blank(x):
    return "" if x is None else x


# --- weighted functions -----------------------------------------------------

Poly = dict  # exponent tuple -> int


@dataclass
class WeightedFunction:
    """g(x, t) on base x_1..x_r and fiber t_1..t_m, integer coefficients."""

    base: tuple[str, ...]
    fiber: tuple[str, ...]
    poly: dict
    weights: dict | None = None
    target: int | None = None

    def __post_init__(self):
        nv = len(self.base) + len(self.fiber)
        clean = {}
        for e, c in self.poly.items():
            if len(e) != nv:
                raise ValueError("exponent length does not match variable count")
            if c:
                clean[tuple(int(x) for x in e)] = clean.get(tuple(e), 0) + int(c)
        self.poly = {e: c for e, c in sorted(clean.items()) if c}
        if not self.poly:
            raise ValueError("polynomial must be nonzero")
        if self.weights is not None:
            D = is_quasihomogeneous(self, self.weights)
            if D is None or D <= 0 or (self.target is not None and D != self.target):
                raise ValueError("weights do not make g quasihomogeneous of positive weight")
            self.target = D

    @property
    def variables(self) -> tuple[str, ...]:
        return self.base + self.fiber

    @classmethod
    def parse(cls, text: str, fiber: Sequence[str] = ("t",), **kw) -> WeightedFunction:
        expr = sympy.sympify(text.replace("^", "**"))
        names = sorted(str(s) for s in expr.free_symbols)
        fib = tuple(f for f in fiber if f in names)
        base = tuple(n for n in names if n not in fib)
        syms = [sympy.Symbol(n) for n in base + fib]
        P = sympy.Poly(sympy.expand(expr), *syms) if syms else None
        if P is None:
            raise ValueError("polynomial has no variables")
        poly = {}
        for mon, c in P.terms():
            if not c.is_integer:
                raise ValueError("coefficients must be integers")
            poly[tuple(mon)] = int(c)
        return cls(base, fib, poly, **kw)

    @classmethod
    def from_potential(cls, Q: QuiverSpec, W: Potential, n: int,
                       fiber_arrows: Sequence[str]) -> WeightedFunction:
        """Tr W on Mat_n^{arrows}, entries as variables; fiber arrows give t."""
        if len(Q.vertices) != 1:
            raise ValueError("only one-vertex quivers are supported here")
        arrows = [a[0] for a in Q.arrows if a[0] in W.letters()]
        base_ar = [a for a in arrows if a not in fiber_arrows]
        fib_ar = [a for a in arrows if a in fiber_arrows]
        names = [f"{a}{i}{j}" for a in base_ar + fib_ar for i in range(n) for j in range(n)]
        nv = len(names)
        pos = {nm: i for i, nm in enumerate(names)}

        def entry(a, i, j):
            e = [0] * nv
            e[pos[f"{a}{i}{j}"]] = 1
            return {tuple(e): 1}

        mats = {a: [[entry(a, i, j) for j in range(n)] for i in range(n)] for a in arrows}
        total: dict = {}
        for coef, w in W.terms:
            M = mats[w[0]]
            for a in w[1:]:
                M = _pmatmul(M, mats[a], nv)
            for i in range(n):
                total = _padd(total, M[i][i], coef)
        nb = len(base_ar) * n * n
        return cls(tuple(names[:nb]), tuple(names[nb:]), total)

    def split(self):
        """(g_0, [g_1..g_m]) with g = g_0 + sum g_j t_j, base polynomials."""
        r = len(self.base)
        g0: dict = {}
        gs = [dict() for _ in self.fiber]
        for e, c in self.poly.items():
            fe = e[r:]
            deg = sum(fe)
            if deg == 0:
                g0[e[:r]] = c
            elif deg == 1:
                gs[fe.index(1)][e[:r]] = c
            else:
                raise ValueError("g must be at most linear in the fiber variables")
        return g0, gs

    def __str__(self) -> str:
        syms = [sympy.Symbol(v) for v in self.variables]
        expr = sum(c * sympy.prod([s**k for s, k in zip(syms, e)]) for e, c in self.poly.items())
        return str(expr)


def _padd(a: dict, b: dict, scale: int = 1) -> dict:
    out = dict(a)
    for e, c in b.items():
        out[e] = out.get(e, 0) + scale * c
        if out[e] == 0:
            del out[e]
    return out


def _pmul(a: dict, b: dict) -> dict:
    out: dict = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            out[e] = out.get(e, 0) + ca * cb
    return {e: c for e, c in out.items() if c}


def _pmatmul(A, B, nv):
    n, m, l = len(A), len(B), len(B[0])
    out = []
    for i in range(n):
        row = []
        for j in range(l):
            acc: dict = {}
            for t in range(m):
                acc = _padd(acc, _pmul(A[i][t], B[t][j]))
            row.append(acc)
        out.append(row)
    return out


def is_quasihomogeneous(f: WeightedFunction, weights: dict) -> int | None:
    """Common weight of all monomials, or None."""
    w = [weights.get(v, 0) for v in f.variables]
    if any(x < 0 for x in w):
        return None
    degs = {sum(a * b for a, b in zip(e, w)) for e in f.poly}
    return degs.pop() if len(degs) == 1 else None


def _simplex_feasible(A: list[list[Fraction]], b: list[Fraction]) -> list[Fraction] | None:
    """A point of {x >= 0 : A x = b} (b >= 0) by phase-one simplex with Bland's rule."""
    m, n = len(A), len(A[0]) if A else 0
    # tableau columns: x_0..x_{n-1}, artificial a_0..a_{m-1}, rhs
    T = [list(map(Fraction, A[i])) + [Fraction(int(i == j)) for j in range(m)] + [Fraction(b[i])]
         for i in range(m)]
    basis = [n + i for i in range(m)]
    cost = [Fraction(0)] * n + [Fraction(1)] * m + [Fraction(0)]
    # reduced costs for the phase-one objective sum(a)
    obj = [cost[j] - sum(T[i][j] for i in range(m)) for j in range(n + m + 1)]
    while True:
        enter = next((j for j in range(n + m) if obj[j] < 0), None)
        if enter is None:
            break
        ratios = [(T[i][-1] / T[i][enter], basis[i], i) for i in range(m) if T[i][enter] > 0]
        if not ratios:
            return None  # cannot happen in phase one, kept for safety
        _, _, r = min(ratios)
        piv = T[r][enter]
        T[r] = [x / piv for x in T[r]]
        for i in range(m):
            if i != r and T[i][enter] != 0:
                f = T[i][enter]
                T[i] = [x - f * y for x, y in zip(T[i], T[r])]
        f = obj[enter]
        obj = [x - f * y for x, y in zip(obj, T[r])]
        basis[r] = enter
    if -obj[-1] != 0:
        return None
    x = [Fraction(0)] * n
    for i, j in enumerate(basis):
        if j < n:
            x[j] = T[i][-1]
    return x


def find_weights(exponents: Sequence[Sequence[int]]) -> tuple[list[int], int] | None:
    """Nonnegative integer w with every exponent vector of weight D > 0."""
    exps = [list(e) for e in exponents]
    if not exps:
        return None
    A = [[Fraction(x) for x in e] for e in exps]
    sol = _simplex_feasible(A, [Fraction(1)] * len(exps))
    if sol is None:
        return None
    den = math.lcm(*[x.denominator for x in sol], 1)
    w = [int(x * den) for x in sol]
    g = math.gcd(*w, den)
    return [x // g for x in w], den // g


def check_weights(f: WeightedFunction) -> dict | None:
    """{variable: weight, ...} plus the total weight under key None, or None."""
    res = find_weights(list(f.poly))
    if res is None:
        return None
    w, D = res
    out = dict(zip(f.variables, w))
    assert is_quasihomogeneous(f, out) == D
    out[None] = D
    return out


def potential_weights(W: Potential, letters: Sequence[str]) -> dict | None:
    """Arrow weights making every cyclic word of W the same positive weight."""
    exps = [[w.count(a) for a in letters] for c, w in W.terms if c]
    res = find_weights(exps)
    if res is None:
        return None
    w, D = res
    out = dict(zip(letters, w))
    out[None] = D
    return out


# --- dimensional reduction shadow --------------------------------------------------

def _poly_eval(F, poly: dict, names: Sequence[str], mats) -> np.ndarray:
    acc = None
    cache = {}
    for e, c in poly.items():
        if c % F.p == 0:
            continue
        t = None
        for v, k in zip(names, e):
            if k:
                key = (v, k)
                if key not in cache:
                    cache[key] = F.power(mats[v][..., 0, 0], k)
                t = cache[key] if t is None else F.mul(t, cache[key])
        if t is None:
            t = np.ones(1, dtype=np.int64)
        if c % F.p != 1:
            t = F.scale(c, t)
        acc = t if acc is None else F.add(acc, t)
    return np.zeros(1, dtype=np.int64) if acc is None else acc


def dimred_sides(f: WeightedFunction, p: int, k: int, workers: int = 1):
    """(sum_{x,t} psi(g), q^{km} sum_{x: g_j = 0} psi(g_0))."""
    F = vec_field(p, k)
    g0, gs = f.split()
    allv = [(v, (1, 1)) for v in f.variables]
    inner, outer = _plan(F, allv)
    lhs = enumerate_sum(F, inner, outer,
                        lambda mats: (_poly_eval(F, f.poly, f.variables, mats), None),
                        workers, what="dimred total space").value()
    basev = [(v, (1, 1)) for v in f.base]
    inner, outer = _plan(F, basev)

    def fn(mats):
        mask = None
        for gj in gs:
            m = _poly_eval(F, gj, f.base, mats) == 0
            mask = m if mask is None else (mask & m)
        return _poly_eval(F, g0, f.base, mats), mask

    if f.base:
        rhs = enumerate_sum(F, inner, outer, fn, workers, what="dimred base").value()
    else:
        vals, mask = fn({})
        acc = TwistedAccumulator(p)
        acc.add_traces(F.trace(vals), mask)
        rhs = acc.value()
    return lhs, rhs * F.Q ** len(f.fiber)


def check_dimred(f: WeightedFunction, p: int, ks: Sequence[int] = (1,), workers: int = 1,
                 timing: bool = True) -> CheckReport:
    rep = CheckReport("dimred", {"poly": str(f), "base": list(f.base), "fiber": list(f.fiber),
                                 "p": p, "k": list(ks)})
    w = check_weights(f)
    rep.flags["weight_feasible"] = w is not None
    if w is not None:
        rep.flags["weights"] = {str(k): v for k, v in w.items() if k is not None}
        rep.flags["weight"] = w[None]
    with rep.collecting():
        for k in ks:
            t0 = time.perf_counter()
            lhs, rhs = dimred_sides(f, p, k, workers)
            rep.add(None, k, lhs, rhs, t0)
    return rep


# --- partition functions and DT invariants ----------------------------------------

def c_power(d: int | None) -> Potential:
    return Potential(((1, ("c",) * d),)) if d else Potential.zero()


def partition_function(d: int | None, p: int, n_max: int, backend: str = "classes",
                       k_max: int = 1, twist: Potential | None = None,
                       workers: int = 1) -> TruncatedSeries:
    """Z_n at level l is commuting_twisted_count(n, p, l, twist) / |GL_n(F_{p^l})|,
    computed for l <= floor(n_max / n) * k_max."""
    twist = twist if twist is not None else c_power(d)
    coeffs: list = [Fraction(1)]
    for n in range(1, n_max + 1):
        depth = (n_max // n) * k_max
        coeffs.append(AdamsSequence.from_function(
            p, depth,
            lambda l, n=n: commuting_twisted_count(n, p, l, twist, backend, workers)
            * Fraction(1, gl_order(n, p**l))))
    return TruncatedSeries(coeffs, n_max)


def half_tate_factor(p: int, depth: int) -> AdamsSequence:
    """Realization of L^{1/2} - L^{-1/2}."""
    x = MotiveClass.x()
    return realize(x - 1 / x, p, depth)


def extract_dt(Z: TruncatedSeries) -> list:
    """[Omega_1, ..., Omega_N] with Omega_n = LOG(Z)_n (L^{1/2} - L^{-1/2}).

    Realized coefficients stay levelwise; rational or symbolic ones stay symbolic.
    """
    logZ = pleth_log(Z)
    x = MotiveClass.x()
    out = []
    for n in range(1, Z.order + 1):
        c = logZ[n]
        if isinstance(c, AdamsSequence):
            out.append(c * half_tate_factor(c.p, c.depth) if c.depth else c)
        else:
            out.append(MotiveClass.coerce(c) * (x - 1 / x))
    return out


def scaled_power_sum(d: int, n: int, p: int, k: int) -> CyclotomicValue:
    """sum_{z in F_{p^k}} psi(Tr(n z^d)), by direct enumeration."""
    F = vec_field(p, k)
    check_budget(F.Q, what="scaled power sum")
    z = np.arange(F.Q, dtype=np.int64)
    vals = F.scale(n, F.power(z, d))
    acc = TwistedAccumulator(p)
    acc.add_traces(F.trace(vals))
    return acc.value()


def is_dth_power(n: int, d: int, p: int, k: int) -> bool:
    """Whether the residue n (nonzero mod p) is a d-th power in F_{p^k}."""
    Q = p**k
    e = math.gcd(d, Q - 1)
    F = vec_field(p, k)
    return int(F.power(F.from_int(n), (Q - 1) // e)) == 1


def _require_1mod4(p: int) -> None:
    if p % 4 != 1:
        raise ValueError(f"p={p} must be 1 mod 4 so that the Gauss sum squares to q")


def check_cmps(d: int, p: int, n_max: int, k_max: int = 1, backend: str = "classes",
               workers: int = 1) -> CheckReport:
    """Omega_n = g_k sum_z psi_k(n z^d) on every cell n <= n_max, k <= k_max."""
    _require_1mod4(p)
    if n_max >= p:
        raise ValueError("n_max must be < p")
    rep = CheckReport("cmps", {"d": d, "p": p, "nmax": n_max, "kmax": k_max, "backend": backend})
    with rep.collecting():
        t0 = time.perf_counter()
        Z = partition_function(d, p, n_max, backend, k_max, workers=workers)
        omegas = extract_dt(Z)
        setup_ms = (time.perf_counter() - t0) * 1000
        for n in range(1, n_max + 1):
            for k in range(1, k_max + 1):
                t1 = time.perf_counter()
                g = gauss_sum(p, k)
                lhs = omegas[n - 1][k]
                rep.add(n, k, lhs, g * scaled_power_sum(d, n, p, k), t1, form="n-dependent")
                if is_dth_power(n, d, p, k):
                    rep.add(n, k, lhs, g * power_character_sum(d, p, k), t1, form="n-independent")
        if rep.rows:
            rep.rows[0].ms = (rep.rows[0].ms or 0) + setup_ms
    return rep


def feit_fine_rhs(q: int, n_max: int) -> TruncatedSeries:
    """EXP(sum_n q^2 T^n / (q - 1)), Adams operations acting by q -> q^l."""
    p, a = prime_power(q)
    coeffs: list = [Fraction(0)]
    for n in range(1, n_max + 1):
        depth = n_max // n
        coeffs.append(AdamsSequence.from_function(
            p, depth, lambda l: Fraction(q ** (2 * l), q**l - 1)))
    return pleth_exp(TruncatedSeries(coeffs, n_max))


def feit_fine_rhs_symbolic(n_max: int) -> TruncatedSeries:
    L = MotiveClass.L()
    return pleth_exp(TruncatedSeries([0] + [L * L / (L - 1)] * n_max, n_max))


def check_feit_fine(q_list: Sequence[int], n_max: int, backend: str = "classes",
                    brute_upto: int = 0, workers: int = 1) -> CheckReport:
    """sum_n #C_n(F_q)/|GL_n| T^n against the plethystic closed form."""
    rep = CheckReport("feit-fine", {"q": list(q_list), "nmax": n_max, "backend": backend,
                                    "brute_upto": brute_upto})
    sym = feit_fine_rhs_symbolic(n_max)
    with rep.collecting():
        for q in q_list:
            p, a = prime_power(q)
            rhs_series = feit_fine_rhs(q, n_max)
            for n in range(1, n_max + 1):
                t0 = time.perf_counter()
                rhs = rhs_series[n][1]
                lhs = commuting_twisted_count(n, p, a, None, backend, workers) * Fraction(1, gl_order(n, q))
                rep.add(n, 1, lhs, rhs, t0, q=q, route="plethystic")
                sym_val = realize(sym[n], p, a)[a]
                rep.add(n, 1, lhs, sym_val, None, q=q, route="symbolic")
                if n <= brute_upto:
                    t1 = time.perf_counter()
                    brute = commuting_twisted_count(n, p, a, None, "brute", workers) * Fraction(1, gl_order(n, q))
                    rep.add(n, 1, brute, rhs, t1, q=q, route="brute")
    return rep


def check_wallcross(p: int, n_max: int, d: int | None = 2, k: int = 1,
                    workers: int = 1) -> CheckReport:
    """Framed bracket series = unframed (via commuting counts) x ncHilb x L^{1/2}/(L-1)."""
    _require_1mod4(p)
    rep = CheckReport("wallcross", {"p": p, "nmax": n_max, "d": d, "k": k})
    Q, W = three_loop(d)
    Qf = framed(Q, "1")
    q = p**k
    g = gauss_sum(p, k)
    gi = g.inverse()
    with rep.collecting():
        M, H = [], []
        for n in range(n_max + 1):
            M.append(commuting_twisted_count(n, p, k, c_power(d), "classes", workers)
                     * Fraction(1, gl_order(n, q)))
            H.append(gi ** (2 * n * n + n) * nc_hilb_twisted_count(n, p, k, W, workers=workers))
        for n in range(n_max + 1):
            t0 = time.perf_counter()
            fr = rep_space_twisted_sum(Qf, W, {"1": n, "inf": 1}, p, k, workers=workers,
                                       order=["b", "c", "a", "j"])
            lhs = gi ** (3 * n * n + n) * fr * g ** (1 + n * n) * Fraction(1, (q - 1) * gl_order(n, q))
            rhs = CyclotomicValue.zero(p)
            for i in range(n + 1):
                rhs = rhs + H[i] * M[n - i] * gi ** (n - i)
            rhs = rhs * g * Fraction(1, q - 1)
            rep.add(n, k, lhs, rhs, t0)
    return rep


def _is_unit_cbb(W: Potential, p: int) -> bool:
    if len(W.terms) != 1:
        return False
    c, w = W.terms[0]
    rots = {w[i:] + w[:i] for i in range(len(w))}
    return ("c", "b", "b") in rots and c % p != 0


def check_preprojective(W_prime: Potential, p: int, n_max: int, k_max: int = 1,
                        backend: str = "classes", workers: int = 1) -> CheckReport:
    """Jordan-quiver series identity with G_n = sum_{y,z} psi(n W'(y, z))."""
    _require_1mod4(p)
    rep = CheckReport("preproj", {"potential": str(W_prime), "p": p, "nmax": n_max,
                                  "kmax": k_max, "backend": backend})
    tripled = Potential(((1, ("a", "b", "c")), (-1, ("a", "c", "b")))) + W_prime
    w = potential_weights(tripled, ["a", "b", "c"])
    rep.flags["quasihomogeneous"] = w is not None
    if w is None:
        raise ValueError("tripled potential plus W' admits no positive quasihomogeneous weighting")
    rep.flags["weights"] = {k: v for k, v in w.items() if k is not None}
    with rep.collecting():
        Z = partition_function(None, p, n_max, backend, k_max, twist=W_prime, workers=workers)
        G = [Fraction(0)]
        for n in range(1, n_max + 1):
            depth = (n_max // n) * k_max
            G.append(AdamsSequence.from_function(
                p, depth, lambda l, n=n: diagonal_sum(W_prime, n, p, l) * Fraction(1, p**l - 1)))
        rhs = pleth_exp(TruncatedSeries(G, n_max))
        omegas = extract_dt(Z)
        cbb = _is_unit_cbb(W_prime, p)
        for n in range(1, n_max + 1):
            for k in range(1, k_max + 1):
                t0 = time.perf_counter()
                rep.add(n, k, Z[n][k], rhs[n][k], t0, form="series")
                g = gauss_sum(p, k)
                pred = diagonal_sum(W_prime, n, p, k) / g
                rep.add(n, k, omegas[n - 1][k], pred, None, form="omega")
                if cbb:
                    rep.add(n, k, omegas[n - 1][k], g, None, form="omega=g")
    return rep
