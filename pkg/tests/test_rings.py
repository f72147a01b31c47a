"""Ring-core tests: chain-ring arithmetic, Frobenius, carry, Witt vectors.

Expected values are frozen from independent oracles: polynomial reduction by
hand for the field examples, and exhaustive integer arithmetic in Z/p^2 via
the ghost map for everything Witt.
"""

import math
from itertools import product

import pytest

from wittcyc.rings import (
    ChainRing,
    Witt2,
    carry_cocycle,
    witt_elements,
    witt_ghost_iso,
    witt_one,
    witt_zero,
)

F2 = ChainRing(2)
F3 = ChainRing(3)
F4 = ChainRing(2, 2)
F9 = ChainRing(3, 2)
Z4 = ChainRing(2, 1, 2)
Z9 = ChainRing(3, 1, 2)
GR4 = ChainRing(2, 2, 2)


def test_default_moduli_are_the_documented_ones():
    assert F4.modulus == (1, 1, 1)  # t^2 + t + 1
    assert F9.modulus == (1, 0, 1)  # t^2 + 1
    assert GR4.modulus == (1, 1, 1)


def test_f4_power_basis_product():
    t = F4.scalar((0, 1))
    assert t * t == F4.scalar((1, 1))  # t^2 = t + 1


def test_z9_nilpotence():
    three = Z9.scalar(3)
    assert (three * three).is_zero()


def test_f3_inverse():
    two = F3.scalar(2)
    assert two.inverse() == two


def test_inverse_of_nonunit_raises():
    with pytest.raises(ZeroDivisionError):
        Z4.scalar(2).inverse()


@pytest.mark.parametrize("ring", [F2, F3, F4, F9, Z4, Z9, GR4])
def test_ring_axioms_exhaustive(ring):
    elems = list(ring.elements())
    one = ring.one
    for a in elems:
        assert a * one == a
        assert a + ring.zero == a
        assert (a + (-a)).is_zero()
        if a.is_unit():
            assert (a * a.inverse()) == one
    for a, b in product(elems, repeat=2):
        assert a + b == b + a
        assert a * b == b * a
    sample = elems[:5]
    for a, b, c in product(sample, repeat=3):
        assert (a + b) + c == a + (b + c)
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c


def test_frobenius_f2_is_identity():
    for a in F2.elements():
        assert a.frobenius() == a


def test_frobenius_f4():
    t = F4.scalar((0, 1))
    assert t.frobenius() == t + F4.one  # t^2 reduced by t^2+t+1


def test_frobenius_f9():
    t = F9.scalar((0, 1))
    assert t.frobenius() == -t  # t^3 = t*t^2 = -t


@pytest.mark.parametrize("ring", [F2, F3, F4, F9])
def test_frobenius_is_ring_automorphism(ring):
    elems = list(ring.elements())
    for a, b in product(elems[:6], repeat=2):
        assert (a + b).frobenius() == a.frobenius() + b.frobenius()
        assert (a * b).frobenius() == a.frobenius() * b.frobenius()
    for a in elems:
        x = a
        for _ in range(ring.d):
            x = x.frobenius()
        assert x == a
        assert a.frobenius_inv().frobenius() == a


def test_frobenius_rejects_k2():
    with pytest.raises(ValueError):
        Z4.scalar(1).frobenius()


def test_carry_p2_is_product():
    for x, y in product(F2.elements(), repeat=2):
        assert carry_cocycle(x, y) == x * y
    assert carry_cocycle(F2.one, F2.one) == F2.one


def test_carry_p3_value_from_ghost_oracle():
    # ghost oracle: 1 + 1 = 2 in Z/9 forces (1,0)+(1,0) = (2,1), so c(1,1) = 1
    assert carry_cocycle(F3.one, F3.one) == F3.one


@pytest.mark.parametrize("ring", [F2, F3, F4])
def test_carry_symmetric_and_normalized(ring):
    for x, y in product(ring.elements(), repeat=2):
        assert carry_cocycle(x, y) == carry_cocycle(y, x)
    for x in ring.elements():
        assert carry_cocycle(x, ring.zero).is_zero()


def test_witt_add_p2():
    one = witt_one(F2)
    assert one + one == Witt2(F2.zero, F2.one)


def test_witt_add_neutral():
    for ring in (F2, F3, F4):
        z = witt_zero(ring)
        for w in witt_elements(ring):
            assert w + z == w


def test_witt_add_p3_example_from_oracle():
    # (1,0) + (2,0): ghost 1 + 8 = 9 = 0 mod 9, so the sum is (0, 0)
    w = Witt2(F3.one, F3.zero) + Witt2(F3.scalar(2), F3.zero)
    assert w == witt_zero(F3)


def test_witt_mul_unit_law():
    for ring in (F2, F3, F4):
        one = witt_one(ring)
        for w in witt_elements(ring):
            assert w * one == w


def test_witt_mul_square_zero_ideal():
    for ring in (F2, F3):
        for x1, y1 in product(ring.elements(), repeat=2):
            prod_ = Witt2(ring.zero, x1) * Witt2(ring.zero, y1)
            assert prod_ == witt_zero(ring)


def test_witt_mul_p3_example():
    w = Witt2(F3.scalar(2), F3.one) * Witt2(F3.one, F3.scalar(2))
    assert w == Witt2(F3.scalar(2), F3.scalar(2))  # 2^3*2 + 1*1^3 = 17 = 2 mod 3


@pytest.mark.parametrize("p", [2, 3, 5])
def test_ghost_iso_is_ring_isomorphism_exhaustive(p):
    ring = ChainRing(p)
    elems = list(witt_elements(ring))
    images = {witt_ghost_iso(w) for w in elems}
    assert images == set(range(p * p))
    assert witt_ghost_iso(witt_one(ring)) == 1
    for u, v in product(elems, repeat=2):
        assert witt_ghost_iso(u + v) == (witt_ghost_iso(u) + witt_ghost_iso(v)) % p**2
        assert witt_ghost_iso(u * v) == (witt_ghost_iso(u) * witt_ghost_iso(v)) % p**2


def test_ghost_p2_examples():
    assert witt_ghost_iso(Witt2(F2.zero, F2.one)) == 2
    assert witt_ghost_iso(Witt2(F2.one, F2.one)) == 3


@pytest.mark.parametrize("ring", [F2, F3, F4])
def test_witt_ring_axioms_exhaustive(ring):
    elems = list(witt_elements(ring))
    for u, v in product(elems, repeat=2):
        assert u + v == v + u
        assert u * v == v * u
        assert u - v + v == u
    for u, v, w in product(elems, repeat=3):
        assert (u + v) + w == u + (v + w)
        assert (u * v) * w == u * (v * w)
        assert u * (v + w) == u * v + u * w


@pytest.mark.parametrize("ring", [F2, F3, F4])
def test_witt_projection_and_square_zero_kernel(ring):
    # q: (x0, x1) -> x0 is a surjective ring map; its kernel squares to zero
    elems = list(witt_elements(ring))
    for u, v in product(elems, repeat=2):
        assert (u + v).x0 == u.x0 + v.x0
        assert (u * v).x0 == u.x0 * v.x0
    kernel = [w for w in elems if w.x0.is_zero()]
    assert len(kernel) == ring.order


@pytest.mark.parametrize("ring", [F2, F3, F4])
def test_p_fold_sum_of_one_generates_kernel(ring):
    w = witt_zero(ring)
    for _ in range(ring.p):
        w = w + witt_one(ring)
    assert w.x0.is_zero() and not w.x1.is_zero()
    ideal = {u * w for u in witt_elements(ring)}
    kernel = {u for u in witt_elements(ring) if u.x0.is_zero()}
    assert ideal == kernel


def test_carry_matches_integer_binomial_formula():
    # the displayed carry, with the classical sign, evaluated in Z then reduced
    for p, ring in ((2, F2), (3, F3), (5, ChainRing(5))):
        for x, y in product(range(p), repeat=2):
            expected = -sum(
                (math.comb(p, i) // p) * x**i * y ** (p - i) for i in range(1, p)
            )
            got = carry_cocycle(ring.scalar(x), ring.scalar(y))
            assert got == ring.scalar(expected % p)
