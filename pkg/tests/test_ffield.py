import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from motivic_dt.ffield import (enumerate_field, find_irreducible, is_irreducible, is_prime,
                               multiplicative_order, primitive_element, prime_power, tower,
                               vec_field)

FIELDS = [(2, 1), (2, 2), (2, 3), (3, 1), (3, 2), (5, 1), (5, 2), (7, 2), (3, 3)]


def test_irreducible_examples():
    assert find_irreducible(2, 2) == (1, 1, 1)
    assert find_irreducible(5, 1) == (0, 1)
    assert find_irreducible(5, 2) == (2, 0, 1)


def test_t2_plus_2_is_smallest_quadratic_mod_5():
    # brute force: monic quadratics without roots, ordered as find_irreducible orders them
    cands = []
    for a1, a0 in itertools.product(range(5), repeat=2):
        if all((x * x + a1 * x + a0) % 5 for x in range(5)):
            cands.append((a1 * 5 + a0, (a0, a1, 1)))
    assert min(cands)[1] == find_irreducible(5, 2)


@pytest.mark.parametrize("p,k", [(2, 4), (3, 4), (5, 3), (7, 3), (13, 2)])
def test_found_polynomial_is_irreducible(p, k):
    f = find_irreducible(p, k)
    assert len(f) == k + 1 and f[-1] == 1
    assert is_irreducible(f, p)


def test_prime_helpers():
    assert [n for n in range(20) if is_prime(n)] == [2, 3, 5, 7, 11, 13, 17, 19]
    assert prime_power(125) == (5, 3)
    with pytest.raises(ValueError):
        prime_power(12)


def test_trace_examples():
    t = tower(2, 2)
    w = t.gen()
    assert w * w == w + 1
    assert w.trace() == 1
    assert t.zero().trace() == 0
    t5 = tower(5, 1)
    assert [t5.element([x]).trace() for x in range(5)] == list(range(5))


def test_enumeration_sizes():
    assert [e.index for e in enumerate_field(tower(2, 1))] == [0, 1]
    els = list(enumerate_field(tower(2, 2)))
    assert len(els) == 4 and len(set(els)) == 4
    units = [e for e in enumerate_field(tower(5, 2)) if e.index != 0]
    assert len(units) == 24
    assert all((u * u.inverse()).index == 1 for u in units)


@pytest.mark.parametrize("p,k", FIELDS)
def test_trace_matches_matrix_trace_and_frobenius(p, k):
    t = tower(p, k)
    for e in enumerate_field(t):
        tr = e.trace()
        assert tr == e.matrix_trace()
        s, x = t.zero(), e
        for _ in range(k):
            s, x = s + x, x.frobenius()
        assert s.index == tr


@pytest.mark.parametrize("p,k", FIELDS)
def test_primitive_element_has_full_order(p, k):
    g = tower(p, k).from_index(primitive_element(p, k))
    assert multiplicative_order(g) == p**k - 1


@pytest.mark.parametrize("p,k", FIELDS)
def test_vec_field_agrees_with_scalar_field(p, k):
    F = vec_field(p, k)
    t = tower(p, k)
    idx = np.arange(F.Q, dtype=np.int64)
    a, b = np.meshgrid(idx, idx, indexing="ij")
    prod = F.mul(a, b)
    tr = F.trace(idx)
    for i in range(F.Q):
        x = t.from_index(i)
        assert tr[i] == x.trace()
        for j in range(0, F.Q, max(1, F.Q // 7)):
            assert prod[i, j] == (x * t.from_index(j)).index
            assert F.add(i, j) == (x + t.from_index(j)).index


def _field_elems(draw_field=st.sampled_from(FIELDS)):
    @st.composite
    def strat(draw):
        p, k = draw(draw_field)
        Q = p**k
        xs = [draw(st.integers(0, Q - 1)) for _ in range(3)]
        return p, k, xs
    return strat()


@settings(max_examples=150, deadline=None)
@given(_field_elems())
def test_field_axioms(case):
    p, k, (a, b, c) = case
    F = vec_field(p, k)
    assert F.mul(a, F.add(b, c)) == F.add(F.mul(a, b), F.mul(a, c))
    assert F.mul(F.mul(a, b), c) == F.mul(a, F.mul(b, c))
    assert F.add(a, F.neg(a)) == 0
    if a:
        assert F.mul(a, F.inv(a)) == 1
        assert F.power(a, F.Q - 1) == 1
    # trace is F_p-linear
    assert F.trace(F.add(a, b)) == (F.trace(a) + F.trace(b)) % p
    assert F.trace(F.scale(3, a)) == (3 * F.trace(a)) % p


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([(3, 1), (5, 1), (2, 2), (3, 2)]), st.integers(0, 2**31))
def test_matrix_ops(pk, seed):
    p, k = pk
    F = vec_field(p, k)
    rng = np.random.default_rng(seed)
    A, B, C = (rng.integers(0, F.Q, size=(3, 3)) for _ in range(3))
    assert np.array_equal(F.matmul(F.matmul(A, B), C), F.matmul(A, F.matmul(B, C)))
    assert F.trace_of_product(A, B) == F.mat_trace(F.matmul(B, A))
