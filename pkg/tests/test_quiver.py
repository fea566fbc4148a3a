import itertools
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from motivic_dt.budget import BudgetExceeded, enumeration_budget
from motivic_dt.cyclo import CyclotomicValue, gauss_sum, power_character_sum
from motivic_dt.ffield import vec_field
from motivic_dt.quiver import (Potential, QuiverSpec, centralizer_basis, commuting_twisted_count,
                               conj_classes, count_irreducible, diagonal_sum, framed, gl_order,
                               irreducible_polys, nc_hilb_twisted_count, orthogonality_sum,
                               parse_quiver_text, rank, rep_space_twisted_sum,
                               sym_line_twisted_count, three_loop)

C2 = Potential.parse("1 c c")


def _brute_gl(n, p):
    F = vec_field(p, 1)
    count = 0
    for entries in itertools.product(range(p), repeat=n * n):
        M = np.array(entries, dtype=np.int64).reshape(n, n)
        count += rank(F, M) == n
    return count


def test_gl_order():
    assert [gl_order(n, 2) for n in range(4)] == [1, 1, 6, 168]
    for n, p in [(1, 3), (2, 2), (2, 3), (3, 2)]:
        assert gl_order(n, p) == _brute_gl(n, p)


def test_class_examples():
    cls1 = list(conj_classes(1, 5))
    assert len(cls1) == 5
    assert all(c.class_size == 1 and c.centralizer_order == 4 for c in cls1)
    sizes = Counter(c.class_size for c in conj_classes(2, 2))
    assert sizes == Counter({1: 2, 2: 1, 3: 2, 6: 1})


@pytest.mark.parametrize("n,q", [(n, q) for n in (1, 2, 3) for q in (2, 3, 4, 5)])
def test_class_sizes_partition_matrix_space(n, q):
    assert sum(c.class_size for c in conj_classes(n, q)) == q ** (n * n)


@pytest.mark.parametrize("n,q", [(2, 2), (2, 3), (3, 2)])
def test_classes_match_orbit_enumeration(n, q):
    """Representatives are pairwise non-conjugate and their orbits cover Mat_n."""
    F = vec_field(q, 1)
    mats = [np.array(e, dtype=np.int64).reshape(n, n) for e in itertools.product(range(q), repeat=n * n)]
    gl = [g for g in mats if rank(F, g) == n]
    key = lambda M: tuple(M.ravel())
    seen = {}
    for c in conj_classes(n, q):
        R = c.representative()
        orbit = {key(F.matmul(F.matmul(g, R), _inv(F, g))) for g in gl}
        assert len(orbit) == c.class_size
        assert len(centralizer_basis(F, R)) == c.centralizer_dim
        for o in orbit:
            assert o not in seen
            seen[o] = c
    assert len(seen) == q ** (n * n)


def _inv(F, g):
    n = g.shape[0]
    for e in itertools.product(range(F.Q), repeat=n * n):
        h = np.array(e, dtype=np.int64).reshape(n, n)
        if np.array_equal(F.matmul(g, h), np.eye(n, dtype=np.int64)):
            return h
    raise AssertionError


@pytest.mark.parametrize("p,k,deg", [(2, 1, 4), (3, 1, 3), (5, 1, 2), (2, 2, 2), (3, 2, 2)])
def test_irreducible_polys_counted_by_necklaces(p, k, deg):
    rows = irreducible_polys(p, k, deg)
    assert len(rows) == count_irreducible(deg, p**k)
    assert len({tuple(r) for r in rows}) == len(rows)


def test_commuting_examples():
    q = 5
    for tw in (Potential.zero(), C2, Potential.parse("1 b c c")):
        brute1 = commuting_twisted_count(1, 5, 1, tw, "brute")
        assert commuting_twisted_count(1, 5, 1, tw) == brute1
    assert commuting_twisted_count(1, 5, 1, C2) == q * gauss_sum(5, 1)
    assert commuting_twisted_count(2, 2, 1, None, "brute") == 88
    assert commuting_twisted_count(2, 2, 1) == 88


@pytest.mark.parametrize("tw", ["1 c c", "1 c c c", "1 c b b", "2 b b, 1 c c c", "1 b c"])
def test_commuting_backends_agree(tw):
    W = Potential.parse(tw)
    assert commuting_twisted_count(2, 5, 1, W, "classes") == commuting_twisted_count(2, 5, 1, W, "brute")


def test_commuting_backends_agree_level_two():
    for tw in ("1 c c c", "1 b c c"):
        W = Potential.parse(tw)
        assert commuting_twisted_count(2, 2, 2, W) == commuting_twisted_count(2, 2, 2, W, "brute")


def test_rep_space_examples():
    Q, W = three_loop(None)
    g = gauss_sum(5, 1)
    assert rep_space_twisted_sum(Q, Potential.zero(), {"1": 1}, 5) == 125
    Q2, W2 = three_loop(2)
    assert rep_space_twisted_sum(Q2, W2, {"1": 1}, 5) == 25 * g
    loop = QuiverSpec(("1",), (("c", "1", "1"),))
    assert rep_space_twisted_sum(loop, C2, {"1": 1}, 5) == g


def test_rep_space_order_does_not_matter():
    Q, W = three_loop(2)
    a = rep_space_twisted_sum(Q, W, {"1": 2}, 3, order=["a", "b", "c"])
    b = rep_space_twisted_sum(Q, W, {"1": 2}, 3, order=["c", "b", "a"], workers=2)
    assert a == b == 3**4 * commuting_twisted_count(2, 3, 1, C2)


def test_framed_adds_arrow_and_vertex():
    Q, W = three_loop(2)
    Qf = framed(Q, "1")
    assert Qf.matrix_shape("j", {"1": 2, "inf": 1}) == (2, 1)
    # j is free: a factor q^n on top of the unframed sum
    assert rep_space_twisted_sum(Qf, W, {"1": 1, "inf": 1}, 5) == 5 * rep_space_twisted_sum(Q, W, {"1": 1}, 5)


def test_quiver_text_and_potential_validation():
    Q, W = parse_quiver_text("""
        # two vertices
        vertices: 1, 2
        arrows: x 1 2, y 2 1, l 1 1
        potential: +1 x y, -2 l l
    """)
    assert Q.euler_form({"1": 1, "2": 1}, {"1": 1, "2": 1}) == 2 - 3
    assert str(W) == "+1 x y, -2 l l"
    with pytest.raises(ValueError):
        parse_quiver_text("vertices: 1, 2\narrows: x 1 2\npotential: x")


def test_nc_hilb_examples():
    Q, W = three_loop(None)
    assert nc_hilb_twisted_count(0, 5) == 1
    assert nc_hilb_twisted_count(1, 5) == 125
    assert nc_hilb_twisted_count(1, 5, W=W) == 125


def test_nc_hilb_n2_direct_matches_normalized():
    p = 3
    _, W = three_loop(2)
    assert nc_hilb_twisted_count(2, p, W=W, method="direct") == nc_hilb_twisted_count(2, p, W=W)


def test_nc_hilb_untwisted_n2_p2():
    # stable triples over F_2, normalized count is an integer
    v = nc_hilb_twisted_count(2, 2)
    assert v == nc_hilb_twisted_count(2, 2, method="direct")
    assert v.is_integral()


def test_sym_line_examples():
    for d in (1, 2, 3, 4):
        assert sym_line_twisted_count(d, 1, 7, 1) == power_character_sum(d, 7, 1)
    assert sym_line_twisted_count(1, 2, 5, 1) == 0
    assert sym_line_twisted_count(2, 2, 5, 1) == 0


@pytest.mark.parametrize("d,n,p,k", [(2, 3, 5, 1), (3, 2, 7, 1), (3, 4, 5, 1), (2, 2, 3, 2)])
def test_sym_line_reduced_matches_full(d, n, p, k):
    assert sym_line_twisted_count(d, n, p, k) == sym_line_twisted_count(d, n, p, k, full=True)


def test_diagonal_sum():
    assert diagonal_sum(Potential.parse("1 c b b"), 1, 5) == 5
    assert diagonal_sum(Potential.parse("1 c b b"), 2, 5, 2) == 25
    assert diagonal_sum(C2, 1, 5) == 5 * gauss_sum(5, 1)


@pytest.mark.parametrize("p,n", [(3, 1), (3, 2), (5, 1), (5, 2)])
def test_orthogonality_exhaustive(p, n):
    for e in itertools.product(range(p), repeat=n * n):
        M = np.array(e, dtype=np.int64).reshape(n, n)
        expected = p ** (n * n) if not M.any() else 0
        assert orthogonality_sum(M, p) == expected


def test_budget_is_enforced():
    with enumeration_budget(100):
        with pytest.raises(BudgetExceeded):
            commuting_twisted_count(2, 5, 1, C2, "brute")


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31))
def test_centralizer_is_nullspace_of_commutator(seed):
    F = vec_field(3, 1)
    rng = np.random.default_rng(seed)
    C = rng.integers(0, 3, size=(3, 3))
    for B in centralizer_basis(F, C):
        assert np.array_equal(F.matmul(B, C), F.matmul(C, B))
