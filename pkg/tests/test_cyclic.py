"""Cyclic tensor powers, the trace sequence, Tate windows, and C(V)."""

import random

import numpy as np
import pytest

from wittcyc.complexes import ChainComplex, ChainMap, cone_of_identity, is_quasiexact
from wittcyc.cyclic import (
    CyclicExtension,
    EquivariantComplex,
    TateWindow,
    admissibility_report,
    coinvariants,
    cyclic_extension,
    frobenius_twist_chainmap,
    frobenius_twist_mat,
    interleave_product,
    invariants,
    tate_window,
    tensor_power_map,
    tensor_power_p,
    tilde_C_module,
    trace_map,
)
from wittcyc.linalg import Mat, PMap, element_in_image
from wittcyc.rings import ChainRing

from test_complexes import random_complex

F2 = ChainRing(2)
F3 = ChainRing(3)
F4 = ChainRing(2, 2)
Z4 = ChainRing(2, 1, 2)
Z9 = ChainRing(3, 1, 2)


def test_tensor_power_rank_one_degree_zero():
    e = tensor_power_p(ChainComplex.single(F2, 0, 1), 2)
    assert e.complex.term(0).ngens == 1
    assert e.sig(0) == PMap.identity(e.complex.term(0))


@pytest.mark.parametrize("p,ring", [(2, F2), (2, Z4), (3, F3), (3, Z9)])
def test_sigma_sign_law(p, ring):
    # sigma on (R[i])^{x p} is (-1)^{i(p-1)}
    for i in range(-2, 4):
        e = tensor_power_p(ChainComplex.single(ring, i, 1), p)
        sign = 1 if (i * (p - 1)) % 2 == 0 else ring.q - 1
        expect = Mat.from_rows(ring, [[sign]])
        assert e.sig(p * i).mat == expect


@pytest.mark.parametrize("p,ring", [(2, F2), (3, F3), (2, Z4)])
def test_sigma_order_and_commutes(p, ring):
    rng = random.Random(61)
    for _ in range(6):
        v = random_complex(ring, rng, degrees=(0, 2), max_rank=2)
        e = tensor_power_p(v, p)
        EquivariantComplex(e.complex, e.sigma, p)  # runs the order/commuting checks


def test_invariants_coinvariants_dimensions_field():
    rng = random.Random(67)
    for ring, p in ((F2, 2), (F3, 3)):
        for _ in range(5):
            v = ChainComplex.single(ring, 0, rng.randrange(1, 4))
            e = tensor_power_p(v, p)
            inv, _ = invariants(e, 0)
            coinv, _ = coinvariants(e, 0)
            assert inv.log_size == coinv.log_size


def test_trace_iso_on_regular_representation():
    # free R[Z/p]-module: sigma = cyclic permutation matrix; trace is an iso
    for ring, p in ((F2, 2), (F3, 3)):
        perm = Mat.zeros(ring, p, p)
        for i in range(p):
            perm.a[(i + 1) % p, i, 0] = 1
        e = EquivariantComplex.single(ring, 0, p, perm, p)
        tr = trace_map(e, 0)
        assert tr.is_iso()


def test_trace_not_iso_on_trivial_module():
    e = tensor_power_p(ChainComplex.single(F2, 0, 1), 2)
    tr = trace_map(e, 0)
    assert tr.is_zero()  # tr = 1 + 1 = 0 on the trivial module


def test_tilde_c_module_f_p():
    for ring, p in ((F2, 2), (F3, 3)):
        data = tilde_C_module(ring, 1, p)
        assert data.coinv.log_size == ring.d
        assert data.inv.log_size == ring.d
        assert data.four_term_exact()


def test_tilde_c_module_f2_square():
    data = tilde_C_module(F2, 2, 2)
    assert data.coinv.log_size == 3
    assert data.inv.log_size == 3
    assert data.complex.homology_profile(0) == (1, 1)
    assert data.complex.homology_profile(1) == (1, 1)
    assert data.four_term_exact()


F9 = ChainRing(3, 2)


@pytest.mark.parametrize("ring,p", [(F2, 2), (F3, 3), (F4, 2), (F9, 3)])
@pytest.mark.parametrize("rank", [1, 2, 3])
def test_four_term_exact_family(ring, p, rank):
    assert tilde_C_module(ring, rank, p).four_term_exact()


def test_psi_additive_modulo_trace_image():
    for ring, p, rank in ((F2, 2, 2), (F3, 3, 1)):
        data = tilde_C_module(ring, rank, p)
        one_minus = PMap.identity(data.power.complex.term(0)) - data.power.sig(0)
        vecs = list(ChainComplex.single(ring, 0, rank).term(0).elements())
        for v in vecs:
            for w in vecs:
                lhs = data.power_of_element(ring.arr_reduce(v + w))
                rhs = ring.arr_add(data.power_of_element(v), data.power_of_element(w))
                diff = ring.arr_sub(lhs, rhs)
                assert element_in_image(one_minus, diff)


def test_frobenius_twist_matrices():
    # over F_p the twist is the identity on matrices
    m = Mat.from_rows(F3, [[1, 2], [0, 1]])
    assert frobenius_twist_mat(m) == m
    # over F_4 it is an involution and multiplicative
    rng = random.Random(3)
    from test_linalg import random_mat

    for _ in range(6):
        a = random_mat(F4, 2, 2, rng)
        b = random_mat(F4, 2, 2, rng)
        assert frobenius_twist_mat(frobenius_twist_mat(a)) == a
        assert frobenius_twist_mat(a @ b) == frobenius_twist_mat(a) @ frobenius_twist_mat(b)


def test_tate_window_single_module_2_periodic():
    e = tensor_power_p(ChainComplex.single(F2, 0, 1), 2)
    w = tate_window(e, -3, 3)
    for n in range(-3, 2):
        assert w.complex.term(n).ngens == w.complex.term(n + 2).ngens == 1


def test_tate_window_acyclic_off_p_rows():
    # a single inner degree not divisible by p gives an acyclic Tate complex
    rng = random.Random(71)
    for ring, p in ((F2, 2), (F3, 3), (Z4, 2)):
        for _ in range(6):
            v = random_complex(ring, rng, degrees=(0, 2), max_rank=2)
            e = tensor_power_p(v, p)
            degs = [j for j in e.complex.degrees() if j % p != 0]
            if not degs:
                continue
            j = rng.choice(degs)
            single = EquivariantComplex.single(
                ring, j, e.complex.term(j).ngens, e.sig(j).mat, p
            )
            w = tate_window(single, j - 3, j + 3)
            h = w.complex.homology()
            for n in range(j - 2, j + 3):
                assert n not in h


def test_tate_window_interior_stable_under_enlarging():
    e = tensor_power_p(ChainComplex.from_free(F2, {0: 1, 1: 1}, {1: [[1]]}), 2)
    w1 = tate_window(e, -2, 4)
    w2 = tate_window(e, -4, 6)
    for n in range(-1, 4):
        assert w1.complex.term(n).ngens == w2.complex.term(n).ngens
        if n > -2:
            assert w1.complex.d(n).mat == w2.complex.d(n).mat


def test_cyclic_extension_module_case_matches_tilde():
    for ring, p in ((F2, 2), (F3, 3)):
        ext = cyclic_extension(ChainComplex.single(ring, 0, 1), p)
        data = tilde_C_module(ring, 1, p)
        assert ext.complex.term(0).log_size == data.complex.term(0).log_size
        assert ext.complex.term(1).log_size == data.complex.term(1).log_size
        assert ext.complex.homology() == data.complex.homology()
        assert ext.is_quasiexact_extension()


def test_cyclic_extension_quasiexact_random():
    rng = random.Random(83)
    for ring, p in ((F2, 2), (F3, 3), (F4, 2)):
        for _ in range(4):
            v = random_complex(ring, rng, degrees=(0, 2), max_rank=2 if p == 2 else 1)
            ext = cyclic_extension(v, p)
            assert ext.degree_bound_ok()
            assert ext.is_quasiexact_extension()


def test_flank_pieces_match_twist_ranks():
    # tau^F_{[i,i]} of the Tate window has the graded ranks of V^(1)[i]
    rng = random.Random(89)
    for ring, p in ((F2, 2), (F3, 3)):
        for _ in range(4):
            v = random_complex(ring, rng, degrees=(0, 2), max_rank=2 if p == 2 else 1)
            ext = cyclic_extension(v, p)
            lo, hi = v.amplitude()
            for level in (0, 1):
                piece = ext._iso_trunc(level)
                for n in range(lo + level - 1, hi + level + 2):
                    got = piece.complex.term(n).log_size
                    expect = v.term(n - level).log_size
                    assert got == expect, (ring, p, level, n)
                # the induced filtration is the level-shifted stupid one
                for n in piece.complex.degrees():
                    w = level - n
                    assert piece.gr_log_size(n, w) == piece.complex.term(n).log_size


def test_cyclic_functoriality_squares():
    # C(f) commutes with a_twisted and with b composed with the twist of f
    rng = random.Random(97)
    for ring, p in ((F2, 2), (F3, 3)):
        for _ in range(4):
            v = random_complex(ring, rng, degrees=(0, 1), max_rank=2)
            w = random_complex(ring, rng, degrees=(0, 1), max_rank=2)
            maps = {}
            ok = True
            for n in set(v.terms) | set(w.terms):
                naive = Mat(
                    ring,
                    np.array(
                        [
                            [[rng.randrange(ring.q) for _ in range(ring.d)] for _ in range(v.term(n).ngens)]
                            for _ in range(w.term(n).ngens)
                        ],
                        dtype=np.int64,
                    ).reshape(w.term(n).ngens, v.term(n).ngens, ring.d),
                )
                maps[n] = PMap(v.term(n), w.term(n), naive, check=False)
            try:
                f = ChainMap(v, w, maps)
            except ValueError:
                continue  # random matrices rarely form a chain map; fix below
            _check_squares(v, w, f, p)


def _check_squares(v, w, f, p):
    ev, ew = cyclic_extension(v, p), cyclic_extension(w, p)
    cf = ev.induced(f, ew)
    tw = frobenius_twist_chainmap(f)
    lhs = ew.a_twisted @ cf
    rhs = ChainMap(
        ev.complex, ew.twist, {n: tw.at(n) @ ev.a_twisted.at(n) for n in ev.complex.terms}, check=False
    )
    assert lhs == rhs
    lhs_b = cf @ ev.b
    rhs_b = ew.b @ tw.shift(1)
    assert lhs_b == rhs_b


def test_cyclic_functoriality_on_diagonal_maps():
    # guaranteed chain maps: scalar multiples of the identity and projections
    rng = random.Random(101)
    for ring, p in ((F2, 2), (F3, 3)):
        for _ in range(3):
            v = random_complex(ring, rng, degrees=(0, 2), max_rank=2 if p == 2 else 1)
            s = ring.scalar(rng.randrange(1, ring.q))
            maps = {
                n: PMap(v.term(n), v.term(n), Mat.scalar_matrix(ring, v.term(n).ngens, s))
                for n in v.terms
            }
            f = ChainMap(v, v, maps)
            _check_squares(v, v, f, p)


def test_admissibility_report():
    rng = random.Random(107)
    for ring, p in ((F2, 2), (F3, 3)):
        acyclic = []
        for _ in range(3):
            base = ChainComplex.single(ring, rng.randrange(-1, 2), rng.randrange(1, 3))
            cone, _, _ = cone_of_identity(base)
            acyclic.append(cone.shift(rng.randrange(-1, 2)))
        split = [
            (
                random_complex(ring, rng, degrees=(0, 1), max_rank=1),
                random_complex(ring, rng, degrees=(0, 1), max_rank=1),
            )
            for _ in range(2)
        ]
        failures = admissibility_report(ring, p, {"acyclic": acyclic, "split": split})
        assert failures == []


def test_interleave_product_unit():
    for ring, p in ((F2, 2), (F3, 3)):
        a = tilde_C_module(ring, 1, p)
        b = tilde_C_module(ring, 2, p)
        ab = tilde_C_module(ring, 2, p)  # 1 x 2 = 2 letters
        one = a.power_of_element(np.array([[1] + [0] * (ring.d - 1)], dtype=np.int64))
        for y in b.power.complex.term(0).elements():
            prod_ = interleave_product(a, b, ab, one, y)
            assert (prod_ == b.power.complex.term(0).reduce(y)).all()


def test_interleave_product_trace_compat_and_equivariance():
    # sigma(x . y) = sigma(x) . sigma(y), hence tr(x . y) = tr(x) . y for
    # invariant y
    for ring, p in ((F2, 2), (F3, 3)):
        b = tilde_C_module(ring, 2, p)
        big = tilde_C_module(ring, 4, p)
        elems = list(b.power.complex.term(0).elements())[:9]
        for x in elems:
            for y in elems[:4]:
                xy = interleave_product(b, b, big, x, y)
                sx = b.power.sig(0).apply(x)
                sy = b.power.sig(0).apply(y)
                assert (big.power.sig(0).apply(xy) == interleave_product(b, b, big, sx, sy)).all()
        for x in elems[:5]:
            trx = b.power.trace(0).apply(x)
            for g in range(b.inv.ngens):
                y = b._inv_incl.mat.a[:, g, :]
                lhs = big.power.trace(0).apply(interleave_product(b, b, big, x, y))
                rhs = interleave_product(b, b, big, trx, y)
                assert (lhs == rhs).all()


def test_interleave_product_associative_rank_one():
    for ring, p in ((F2, 2), (F3, 3)):
        a = tilde_C_module(ring, 1, p)
        e1 = np.array([[1] + [0] * (ring.d - 1)], dtype=np.int64)
        x = a.power_of_element(e1)
        assert (
            interleave_product(a, a, tilde_C_module(ring, 1, p), x, x)
            == a.power_of_element(e1)
        ).all()
