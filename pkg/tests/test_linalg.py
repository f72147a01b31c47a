"""Smith-form kernel and presented-module layer, cross-checked against an
independent Gaussian-elimination oracle over fields and hand enumerations
over Z/4."""

import random

import numpy as np
import pytest

from wittcyc.linalg import (
    Mat,
    PMap,
    PModule,
    Subquotient,
    induced_subquotient_map,
    inverse,
    is_invertible,
    kernel_gens,
    quotient,
    smith,
    solve,
    solve_map,
    submodule,
)
from wittcyc.rings import ChainRing

F2 = ChainRing(2)
F3 = ChainRing(3)
F4 = ChainRing(2, 2)
Z4 = ChainRing(2, 1, 2)
Z9 = ChainRing(3, 1, 2)
GR4 = ChainRing(2, 2, 2)

RINGS = [F2, F3, F4, Z4, Z9, GR4]


def random_mat(ring, rows, cols, rng):
    a = np.array(
        [[[rng.randrange(ring.q) for _ in range(ring.d)] for _ in range(cols)] for _ in range(rows)],
        dtype=np.int64,
    ).reshape(rows, cols, ring.d)
    return Mat(ring, a)


def field_rank_oracle(m: Mat) -> int:
    """Row reduction over a field (k = 1), written independently of smith."""
    ring = m.ring
    assert ring.k == 1
    rows = [[ring.scalar(tuple(int(c) for c in m.a[i, j])) for j in range(m.cols)] for i in range(m.rows)]
    rank = 0
    for col in range(m.cols):
        piv = next((r for r in range(rank, m.rows) if not rows[r][col].is_zero()), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        inv = rows[rank][col].inverse()
        rows[rank] = [x * inv for x in rows[rank]]
        for r in range(m.rows):
            if r != rank and not rows[r][col].is_zero():
                c = rows[r][col]
                rows[r] = [x - c * y for x, y in zip(rows[r], rows[rank])]
        rank += 1
        if rank == m.rows:
            break
    return rank


def test_smith_identity():
    sf = smith(Mat.identity(F3, 4))
    assert sf.exps == (0, 0, 0, 0)


def test_smith_mult_by_two_over_z4():
    m = Mat.from_rows(Z4, [[2]])
    sf = smith(m)
    assert sf.exps == (1,)
    U, orders = kernel_gens(m, sf)
    assert orders == (1,)  # kernel has one generator of additive order 2
    assert (m @ U).is_zero()
    assert sf.log_image_size == 1  # image 2Z/4 has order 2


@pytest.mark.parametrize("ring", [F2, F3, F4])
def test_smith_rank_matches_gauss_oracle(ring):
    rng = random.Random(7)
    for _ in range(25):
        m = random_mat(ring, rng.randrange(1, 5), rng.randrange(1, 5), rng)
        sf = smith(m)
        assert len(sf.exps) == field_rank_oracle(m)


@pytest.mark.parametrize("ring", RINGS)
def test_smith_witnesses(ring):
    rng = random.Random(13)
    for _ in range(20):
        m = random_mat(ring, rng.randrange(1, 6), rng.randrange(1, 6), rng)
        sf = smith(m)
        d = (sf.P @ m @ sf.Q).a
        for i in range(m.rows):
            for j in range(m.cols):
                if i != j:
                    assert not d[i, j].any()
                elif i < len(sf.exps):
                    expect = ring.arr_zeros((1,))[0]
                    expect[0] = ring.p ** sf.exps[i] % ring.q
                    assert (d[i, j] == expect).all()
                else:
                    assert not d[i, j].any()
        assert (sf.P @ sf.Pinv) == Mat.identity(ring, m.rows)
        assert (sf.Pinv @ sf.P) == Mat.identity(ring, m.rows)
        assert (sf.Q @ sf.Qinv) == Mat.identity(ring, m.cols)
        assert (sf.Qinv @ sf.Q) == Mat.identity(ring, m.cols)


@pytest.mark.parametrize("ring", RINGS)
def test_kernel_and_solve(ring):
    rng = random.Random(29)
    for _ in range(20):
        m = random_mat(ring, rng.randrange(1, 5), rng.randrange(1, 5), rng)
        U, orders = kernel_gens(m)
        assert (m @ U).is_zero()
        x = random_mat(ring, m.cols, 1, rng)
        b = m @ x
        sol = solve(m, b)
        assert sol is not None
        assert (m @ sol) == b


def test_solve_inconsistent():
    m = Mat.from_rows(Z4, [[2]])
    assert solve(m, Mat.from_rows(Z4, [[1]])) is None


@pytest.mark.parametrize("ring", RINGS)
def test_inverse(ring):
    rng = random.Random(31)
    found = 0
    while found < 5:
        m = random_mat(ring, 3, 3, rng)
        if not is_invertible(m):
            continue
        found += 1
        assert (m @ inverse(m)) == Mat.identity(ring, 3)


def test_smith_idempotent_profile():
    rng = random.Random(3)
    for ring in (Z4, GR4):
        for _ in range(10):
            m = random_mat(ring, 4, 3, rng)
            sf1 = smith(m)
            d = sf1.P @ m @ sf1.Q
            sf2 = smith(d)
            assert sf1.exps == sf2.exps


def test_submodule_canonical_form():
    # span{(2,0),(0,1)} in (Z/4)^2 is R/2 + R
    gens = Mat.from_rows(Z4, [[2, 0], [0, 1]])
    free = PModule.free(Z4, 2)
    S, incl = submodule(free, gens)
    assert sorted(S.orders) == [1, 2]
    assert incl.is_injective()


def test_quotient_canonical_form():
    free = PModule.free(Z4, 2)
    gens = Mat.from_rows(Z4, [[2], [0]])
    Q, proj = quotient(free, gens)
    assert sorted(Q.orders) == [1, 2]
    assert proj.is_surjective()
    # the killed generator really dies
    v = free.zero_el()
    v[0, 0] = 2
    assert not proj.apply(v).any()


@pytest.mark.parametrize("ring", [Z4, Z9, F3, GR4])
def test_kernel_image_sizes_are_complementary(ring):
    rng = random.Random(41)
    for _ in range(12):
        m = random_mat(ring, rng.randrange(1, 5), rng.randrange(1, 5), rng)
        f = PMap(PModule.free(ring, m.cols), PModule.free(ring, m.rows), m)
        assert f.log_image_size() + f.log_kernel_size() == f.src.log_size


def test_pmap_validity():
    src = PModule(Z4, (2,))
    tgt = PModule(Z4, (1,))
    PMap(src, tgt, Mat.from_rows(Z4, [[1]]))  # fine: c_tgt - c_src <= 0
    big_src = PModule(Z4, (1,))
    big_tgt = PModule(Z4, (2,))
    with pytest.raises(ValueError):
        PMap(big_src, big_tgt, Mat.from_rows(Z4, [[1]]))
    PMap(big_src, big_tgt, Mat.from_rows(Z4, [[2]]))  # multiplication by p is fine


def test_pmap_kernel_cokernel_over_z4():
    # multiplication by 2 on Z/4: kernel and cokernel both R/2
    free = PModule.free(Z4, 1)
    f = PMap(free, free, Mat.from_rows(Z4, [[2]]))
    K, incl = f.kernel()
    assert K.orders == (1,)
    C, proj = f.cokernel()
    assert C.orders == (1,)
    assert (f @ incl).is_zero()
    assert (proj @ f).is_zero()


def test_subquotient_homology_style():
    # ker(2)/im(2) inside Z/4 is R/2 even though everything ambient is free
    free = PModule.free(Z4, 1)
    two = Mat.from_rows(Z4, [[2]])
    sq = Subquotient(free, two, Mat.zeros(Z4, 1, 0))
    assert sq.module.orders == (1,)
    sq2 = Subquotient(free, two, two)
    assert sq2.module.is_zero()


def test_subquotient_canon_roundtrip():
    rng = random.Random(5)
    for ring in (F3, Z4, Z9):
        free = PModule.free(ring, 4)
        s = random_mat(ring, 4, 3, rng)
        sq = Subquotient(free, s, Mat.zeros(ring, 4, 0))
        reps = sq.from_canon()
        for j in range(sq.module.ngens):
            v = sq.to_canon(reps.a[:, j, :])
            expect = sq.module.zero_el()
            expect[j, 0] = 1
            assert (v == sq.module.reduce(expect)).all()


def test_induced_subquotient_map_identity():
    free = PModule.free(Z4, 2)
    s = Mat.from_rows(Z4, [[1, 0], [0, 2]])
    sq = Subquotient(free, s, Mat.zeros(Z4, 2, 0))
    ident = Mat.identity(Z4, 2)
    f = induced_subquotient_map(ident, sq, sq)
    assert f == PMap.identity(sq.module)
