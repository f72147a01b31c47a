"""Bounded chain complexes over chain rings, with filtrations.

Terms are finitely presented modules (``PModule``); complexes built from
matrices over the ring have free terms, and constructions that leave the
free world (canonical truncations, filtered truncations, homology) return
presented terms in canonical form.  Differentials lower degree by one and
d . d = 0 is enforced at construction; violating input is rejected.

``FilteredComplex`` carries a basis-aligned decreasing filtration on a free
complex: each basis vector has an integer weight and F^i is the span of the
vectors of weight >= i.  Filtered truncation follows the subquotient
formulas

    tau^F_{>=n} E_i = d^{-1}(F^{n+1-i} E_{i-1}) & F^{n-i} E_i,
    tau^F_{<=n} E_i = E_i / (F^{n+1-i} E_i + d(F^{n-i} E_{i+1})),

and the window form tau^F_{[n,m]} is computed as one subquotient per degree
so that natural inclusions/projections between nested windows exist on the
nose.  Shifts carry no sign; the only signs in the library live in tensor
constructions.
"""

from __future__ import annotations

from typing import Callable, Iterable

import numpy as np

from .linalg import (
    Mat,
    PMap,
    PModule,
    Subquotient,
    induced_subquotient_map,
    kernel_gens,
    quotient,
    section_of,
    solve_map,
    submodule,
)
from .rings import ChainRing


class ChainComplex:
    """Bounded complex of presented modules; ``terms[n]`` and ``diff[n]: n -> n-1``."""

    __slots__ = ("ring", "terms", "diff")

    def __init__(self, ring: ChainRing, terms: dict, diff: dict, check: bool = True):
        self.ring = ring
        self.terms = {n: m for n, m in terms.items() if m.ngens}
        self.diff = {}
        for n, f in diff.items():
            if n in self.terms and (n - 1) in self.terms:
                self.diff[n] = f
        if check:
            for n, f in self.diff.items():
                if f.src != self.terms[n] or f.tgt != self.terms[n - 1]:
                    raise ValueError(f"differential at degree {n} has wrong source/target")
            for n in self.diff:
                if (n - 1) in self.diff:
                    if not (self.d(n - 1) @ self.d(n)).is_zero():
                        raise ValueError(f"d*d != 0 at degree {n}")

    @staticmethod
    def from_free(ring: ChainRing, ranks: dict, diffs: dict) -> "ChainComplex":
        """Free complex from ranks and differential matrices (Mat or rows)."""
        terms = {n: PModule.free(ring, r) for n, r in ranks.items() if r}
        dd = {}
        for n, m in diffs.items():
            if n not in terms or (n - 1) not in terms:
                continue
            if not isinstance(m, Mat):
                m = Mat.from_rows(ring, m)
            dd[n] = PMap(terms[n], terms[n - 1], m)
        return ChainComplex(ring, terms, dd)

    @staticmethod
    def single(ring: ChainRing, degree: int, module: PModule | int) -> "ChainComplex":
        if isinstance(module, int):
            module = PModule.free(ring, module)
        return ChainComplex(ring, {degree: module}, {})

    def term(self, n: int) -> PModule:
        return self.terms.get(n, PModule(self.ring, ()))

    def d(self, n: int) -> PMap:
        f = self.diff.get(n)
        if f is None:
            return PMap.zero(self.term(n), self.term(n - 1))
        return f

    def degrees(self) -> list:
        return sorted(self.terms)

    def amplitude(self) -> tuple:
        degs = self.degrees()
        if not degs:
            return (0, -1)
        return (degs[0], degs[-1])

    def support_bounds(self) -> tuple:
        return self.amplitude()

    def shift(self, m: int) -> "ChainComplex":
        """Homological shift: term n of the result is term n-m of the input."""
        return ChainComplex(
            self.ring,
            {n + m: mod for n, mod in self.terms.items()},
            {n + m: f for n, f in self.diff.items()},
            check=False,
        )

    def direct_sum(self, other: "ChainComplex") -> "ChainComplex":
        terms = {}
        diff = {}
        for n in set(self.terms) | set(other.terms):
            a, b = self.term(n), other.term(n)
            terms[n] = PModule(self.ring, a.orders + b.orders)
        for n in list(terms):
            if (n - 1) not in terms:
                continue
            da, db = self.d(n), other.d(n)
            block = Mat.block_diag(self.ring, [da.mat, db.mat])
            diff[n] = PMap(terms[n], terms[n - 1], block, check=False)
        return ChainComplex(self.ring, terms, diff, check=False)

    def homology_profile(self, n: int) -> tuple:
        """Multiset (sorted tuple) of cyclic-factor exponents of H_n."""
        dn = self.d(n)
        dn1 = self.d(n + 1)
        K, incl = dn.kernel()
        img_in_K = solve_map(incl, dn1.mat)
        if img_in_K is None:
            raise ValueError("d*d != 0: image does not lie in the kernel")
        H, _ = quotient(K, img_in_K)
        return tuple(sorted(H.orders))

    def homology(self) -> dict:
        degs = self.degrees()
        if not degs:
            return {}
        lo, hi = degs[0], degs[-1]
        out = {}
        for n in range(lo, hi + 1):
            prof = self.homology_profile(n)
            if prof:
                out[n] = prof
        return out

    def is_acyclic(self) -> bool:
        return not self.homology()

    def total_log_size(self, n: int) -> int:
        return self.term(n).log_size

    def __eq__(self, other):
        return (
            isinstance(other, ChainComplex)
            and self.ring == other.ring
            and self.terms == other.terms
            and all(self.d(n) == other.d(n) for n in set(self.diff) | set(other.diff))
        )

    def __repr__(self):
        span = ", ".join(f"{n}:{self.term(n).orders}" for n in self.degrees())
        return f"ChainComplex({self.ring!r}; {span})"


class ChainMap:
    """Degreewise PMaps commuting with the differentials."""

    __slots__ = ("src", "tgt", "maps")

    def __init__(self, src: ChainComplex, tgt: ChainComplex, maps: dict, check: bool = True):
        self.src = src
        self.tgt = tgt
        self.maps = {n: f for n, f in maps.items() if f.src.ngens and f.tgt.ngens}
        if check:
            for n in set(self.src.terms) | set(self.tgt.terms):
                lhs = self.tgt.d(n) @ self.at(n)
                rhs = self.at(n - 1) @ self.src.d(n)
                if lhs != rhs:
                    raise ValueError(f"not a chain map at degree {n}")

    def at(self, n: int) -> PMap:
        f = self.maps.get(n)
        if f is None:
            return PMap.zero(self.src.term(n), self.tgt.term(n))
        return f

    @staticmethod
    def identity(c: ChainComplex) -> "ChainMap":
        return ChainMap(c, c, {n: PMap.identity(m) for n, m in c.terms.items()}, check=False)

    @staticmethod
    def zero(src: ChainComplex, tgt: ChainComplex) -> "ChainMap":
        return ChainMap(src, tgt, {}, check=False)

    def __matmul__(self, other: "ChainMap") -> "ChainMap":
        maps = {}
        for n in set(other.src.terms):
            maps[n] = self.at(n) @ other.at(n)
        return ChainMap(other.src, self.tgt, maps, check=False)

    def __sub__(self, other: "ChainMap") -> "ChainMap":
        maps = {}
        for n in set(self.src.terms):
            maps[n] = self.at(n) - other.at(n)
        return ChainMap(self.src, self.tgt, maps, check=False)

    def shift(self, m: int) -> "ChainMap":
        return ChainMap(
            self.src.shift(m),
            self.tgt.shift(m),
            {n + m: f for n, f in self.maps.items()},
            check=False,
        )

    def is_zero(self) -> bool:
        return all(f.is_zero() for f in self.maps.values())

    def __eq__(self, other):
        if not isinstance(other, ChainMap):
            return False
        degs = set(self.maps) | set(other.maps)
        return all(self.at(n) == other.at(n) for n in degs)

    def is_quasi_iso(self) -> bool:
        return cone_of_map(self).is_acyclic()


# --------------------------------------------------------------------------
# cones
# --------------------------------------------------------------------------


def cone_of_map(f: ChainMap) -> ChainComplex:
    """Cone(f)_n = X_{n-1} + Y_n, differential [[-d_X, 0], [f, d_Y]]."""
    X, Y = f.src, f.tgt
    ring = X.ring
    terms = {}
    for n in set(x + 1 for x in X.terms) | set(Y.terms):
        terms[n] = PModule(ring, X.term(n - 1).orders + Y.term(n).orders)
    diff = {}
    for n in terms:
        if (n - 1) not in terms:
            continue
        sx, sy = X.term(n - 1), Y.term(n)
        tx, ty = X.term(n - 2), Y.term(n - 1)
        a = ring.arr_zeros((tx.ngens + ty.ngens, sx.ngens + sy.ngens))
        dx = X.d(n - 1).mat.a
        a[: tx.ngens, : sx.ngens] = (-dx) % ring.q
        a[tx.ngens :, : sx.ngens] = f.at(n - 1).mat.a
        a[tx.ngens :, sx.ngens :] = Y.d(n).mat.a
        diff[n] = PMap(terms[n], terms[n - 1], Mat(ring, a), check=False)
    return ChainComplex(ring, terms, diff, check=False)


def cone_of_identity(e: ChainComplex) -> tuple:
    """(Cone(E), beta, alpha): 0 -> E -> Cone(E) -> E[1] -> 0 exact.

    beta is the bottom inclusion and alpha the projection with the degreewise
    sign (-1)^n, which makes both chain maps with unsigned shifts.
    """
    cone = cone_of_map(ChainMap.identity(e))
    ring = e.ring
    beta_maps = {}
    alpha_maps = {}
    sh = e.shift(1)
    for n in cone.terms:
        sx, sy = e.term(n - 1), e.term(n)
        if sy.ngens:
            a = Mat.zeros(ring, sx.ngens + sy.ngens, sy.ngens)
            a.a[sx.ngens :, :] = Mat.identity(ring, sy.ngens).a
            beta_maps[n] = PMap(sy, cone.term(n), a, check=False)
        if sx.ngens:
            a = Mat.zeros(ring, sx.ngens, sx.ngens + sy.ngens)
            sign = 1 if n % 2 == 0 else ring.q - 1
            a.a[:, : sx.ngens] = Mat.identity(ring, sx.ngens).a * sign
            alpha_maps[n] = PMap(cone.term(n), sx, a, check=False)
    beta = ChainMap(e, cone, beta_maps)
    alpha = ChainMap(cone, sh, alpha_maps)
    return cone, beta, alpha


# --------------------------------------------------------------------------
# canonical truncation
# --------------------------------------------------------------------------


def truncate_above(e: ChainComplex, m: int) -> ChainComplex:
    """tau_{>= m}: keep degrees > m, replace degree m by ker(d_m)."""
    terms = {}
    diff = {}
    K, incl = e.d(m).kernel()
    if K.ngens:
        terms[m] = K
    for n in e.degrees():
        if n > m:
            terms[n] = e.term(n)
            if n > m + 1:
                diff[n] = e.d(n)
    if (m + 1) in terms and m in terms:
        core = solve_map(incl, e.d(m + 1).mat)
        if core is None:
            raise ValueError("d*d != 0")
        diff[m + 1] = PMap(terms[m + 1], K, core, check=False)
    return ChainComplex(e.ring, terms, diff, check=False)


def truncate_below(e: ChainComplex, m: int) -> ChainComplex:
    """tau_{<= m}: keep degrees < m, replace degree m by coker(d_{m+1})."""
    terms = {}
    diff = {}
    C, proj = quotient(e.term(m), e.d(m + 1).mat)
    if C.ngens:
        terms[m] = C
    for n in e.degrees():
        if n < m:
            terms[n] = e.term(n)
            if n < m and (n - 1) in e.terms:
                diff[n] = e.d(n)
    if m in terms and (m - 1) in terms:
        sec = section_of(proj)
        diff[m] = PMap(C, terms[m - 1], e.d(m).mat @ sec, check=False)
    return ChainComplex(e.ring, terms, diff, check=False)


def truncate(e: ChainComplex, lo=None, hi=None) -> ChainComplex:
    """Canonical truncation to the window [lo, hi] (either side optional)."""
    if lo is not None and hi is not None and lo > hi:
        raise ValueError("empty truncation window")
    out = e
    if hi is not None:
        out = truncate_below(out, hi)
    if lo is not None:
        out = truncate_above(out, lo)
    return out


# --------------------------------------------------------------------------
# exactness
# --------------------------------------------------------------------------


def is_exact_sequence(maps: list) -> bool:
    """Exactness of X0 -> X1 -> ... -> Xn at the inner spots, by size count."""
    for f, g in zip(maps, maps[1:]):
        if not (g @ f).is_zero():
            return False
        if f.log_image_size() != g.log_kernel_size():
            return False
    return True


def is_exact_complex_sequence(fs: list) -> bool:
    """Degreewise exactness of a sequence of chain maps, ends included.

    fs = [f1, ..., fm] for 0 -> X0 -> X1 -> ... -> Xm -> 0: checks injectivity
    of f1, surjectivity of fm, and exactness at every inner term.
    """
    first, last = fs[0], fs[-1]
    degs = set()
    for f in fs:
        degs |= set(f.src.terms) | set(f.tgt.terms)
    for n in degs:
        chain = [f.at(n) for f in fs]
        if not chain[0].is_injective():
            return False
        if not chain[-1].is_surjective():
            return False
        if not is_exact_sequence(chain):
            return False
    return True


def subquotient_complex(
    amb: ChainComplex, s_gens: dict, t_gens: dict
) -> tuple[ChainComplex, dict]:
    """The complex S/T for d-stable families of ambient generator matrices.

    Returns the canonical complex and the per-degree Subquotient witnesses.
    """
    ring = amb.ring
    sqs = {}
    for n in set(s_gens):
        sq = Subquotient(amb.term(n), s_gens[n], t_gens[n])
        if sq.module.ngens:
            sqs[n] = sq
    terms = {n: sq.module for n, sq in sqs.items()}
    diff = {}
    for n in sqs:
        if (n - 1) not in sqs:
            continue
        diff[n] = induced_subquotient_map(amb.d(n).mat, sqs[n], sqs[n - 1])
    return ChainComplex(ring, terms, diff, check=False), sqs


def is_quasiexact(b: ChainMap, a: ChainMap) -> bool:
    """Quasiexactness of 0 -> B -> E -> A -> 0: b injective, a surjective,
    and Ker a / Im b acyclic.  Raises if a.b != 0."""
    if not (a @ b).is_zero():
        raise ValueError("a composed with b is nonzero")
    E = b.tgt
    ring = E.ring
    degs = set(E.terms) | set(b.src.terms) | set(a.tgt.terms)
    for n in degs:
        if not b.at(n).is_injective():
            return False
        if not a.at(n).is_surjective():
            return False
    s_gens = {}
    t_gens = {}
    for n in degs:
        K, incl = a.at(n).kernel()
        s_gens[n] = incl.mat if K.ngens else Mat.zeros(ring, E.term(n).ngens, 0)
        t_gens[n] = b.at(n).mat
    sub, _ = subquotient_complex(E, s_gens, t_gens)
    return sub.is_acyclic()


# --------------------------------------------------------------------------
# filtered complexes
# --------------------------------------------------------------------------


class FilteredComplex:
    """Free complex with basis-aligned weights; F^i = span of weight >= i.

    Invariants (checked): terms free, and weights never drop along the
    differential, so every F^i is a subcomplex.
    """

    __slots__ = ("complex", "weights")

    def __init__(self, complex_: ChainComplex, weights: dict, check: bool = True):
        self.complex = complex_
        self.weights = {
            n: np.asarray(w, dtype=np.int64) for n, w in weights.items() if complex_.term(n).ngens
        }
        if check:
            for n, mod in complex_.terms.items():
                if not mod.is_free():
                    raise ValueError("filtered complexes require free terms")
                if len(self.weights.get(n, ())) != mod.ngens:
                    raise ValueError(f"weight vector at degree {n} has wrong length")
            for n, f in complex_.diff.items():
                nz = f.mat.a.any(axis=2)
                for i, j in np.argwhere(nz):
                    if self.weights[n - 1][i] < self.weights[n][j]:
                        raise ValueError("differential does not preserve the filtration")

    @property
    def ring(self) -> ChainRing:
        return self.complex.ring

    def weight_range(self) -> tuple:
        allw = [w for ws in self.weights.values() for w in ws]
        if not allw:
            return (0, -1)
        return (int(min(allw)), int(max(allw)))

    def level_cols(self, n: int, i: int) -> Mat:
        """Basis columns spanning F^i in degree n."""
        mod = self.complex.term(n)
        idx = [j for j, w in enumerate(self.weights.get(n, ())) if w >= i]
        m = Mat.zeros(self.ring, mod.ngens, len(idx))
        for c, j in enumerate(idx):
            m.a[j, c, 0] = 1
        return m

    def gr_indices(self, n: int, i: int) -> list:
        return [j for j, w in enumerate(self.weights.get(n, ())) if w == i]

    def gr_complex(self, i: int) -> ChainComplex:
        """The weight-i graded piece with its induced differential."""
        terms = {}
        sel = {}
        for n in self.complex.terms:
            idx = self.gr_indices(n, i)
            if idx:
                terms[n] = PModule.free(self.ring, len(idx))
                sel[n] = idx
        diff = {}
        for n in terms:
            if (n - 1) not in terms:
                continue
            d = self.complex.d(n).mat
            block = d.a[np.ix_(sel[n - 1], sel[n])]
            diff[n] = PMap(terms[n], terms[n - 1], Mat(self.ring, block), check=False)
        return ChainComplex(self.ring, terms, diff, check=False)

    @staticmethod
    def trivial(complex_: ChainComplex) -> "FilteredComplex":
        weights = {n: np.zeros(m.ngens, dtype=np.int64) for n, m in complex_.terms.items()}
        return FilteredComplex(complex_, weights)


class TruncatedFiltered:
    """Result of a filtered truncation: canonical complex plus witnesses.

    ``complex`` has presented terms; ``sqs[n]`` is the ambient Subquotient
    witness used for induced maps, and ``gr_log_size`` exposes the induced
    filtration (computed as sizes of ((S & F^i) + T)/T)."""

    __slots__ = ("source", "complex", "sqs", "lo", "hi")

    def __init__(self, source, complex_, sqs, lo, hi):
        self.source = source
        self.complex = complex_
        self.sqs = sqs
        self.lo = lo
        self.hi = hi

    def gr_log_size(self, n: int, i: int) -> int:
        sq = self.sqs.get(n)
        if sq is None:
            return 0
        return _filtered_piece_log(self.source, sq, n, i) - _filtered_piece_log(
            self.source, sq, n, i + 1
        )


def _span_log(amb: PModule, gens: Mat) -> int:
    """log_p of the size of the span of ``gens`` inside a presented module."""
    from .linalg import smith

    rel = amb.relations()
    stacked = gens.hstack(rel) if gens.cols else rel
    ring = amb.ring
    return smith(stacked, "").log_image_size - ring.d * sum(ring.k - c for c in amb.orders)


def _filtered_piece_log(fc: FilteredComplex, sq: Subquotient, n: int, i: int) -> int:
    """log size of ((S & F^i) + T)/T inside the subquotient at degree n."""
    inter = _intersection(sq.amb, sq.s_gens, fc.level_cols(n, i))
    total = inter.hstack(sq.t_gens)
    return _span_log(sq.amb, total) - _span_log(sq.amb, sq.t_gens)


def _intersection(amb: PModule, a_gens: Mat, b_gens: Mat) -> Mat:
    """Generators of span(a) & span(b) inside a presented module."""
    ring = amb.ring
    if a_gens.cols == 0 or b_gens.cols == 0:
        return Mat.zeros(ring, amb.ngens, 0)
    stacked = a_gens.hstack(-b_gens).hstack(amb.relations())
    U, _ = kernel_gens(stacked)
    coeffs = Mat(ring, U.a[: a_gens.cols])
    return a_gens @ coeffs


def filtered_truncate(fc: FilteredComplex, lo=None, hi=None, degree_window=None) -> TruncatedFiltered:
    """tau^F over a window; lo/hi of None means no truncation on that side.

    The degree window defaults to all degrees that can carry a nonzero term,
    padded by one on each side so boundary formulas read complete data.
    """
    cx = fc.complex
    ring = fc.ring
    degs = cx.degrees()
    if not degs:
        empty = ChainComplex(ring, {}, {}, check=False)
        return TruncatedFiltered(fc, empty, {}, lo, hi)
    if degree_window is None:
        degree_window = (degs[0] - 1, degs[-1] + 1)
    s_gens = {}
    t_gens = {}
    for n in range(degree_window[0], degree_window[1] + 1):
        amb = cx.term(n)
        if lo is None:
            s = Mat.identity(ring, amb.ngens)
        else:
            # d^{-1}(F^{lo+1-n} E_{n-1}) intersect F^{lo-n} E_n
            s = _preimage_in_level(fc, n, lo)
        if hi is None:
            t = Mat.zeros(ring, amb.ngens, 0)
        else:
            inside = fc.level_cols(n, hi + 1 - n)
            up_lvl = fc.level_cols(n + 1, hi - n)
            if lo is not None:
                inside = _intersection(amb, s, inside)
                upstairs = _preimage_in_level(fc, n + 1, lo)
                up_lvl = _intersection(cx.term(n + 1), upstairs, up_lvl)
            img = cx.d(n + 1).mat @ up_lvl
            t = inside.hstack(img)
        s_gens[n] = s
        t_gens[n] = t
    complex_, sqs = subquotient_complex(cx, s_gens, t_gens)
    return TruncatedFiltered(fc, complex_, sqs, lo, hi)


def _preimage_in_level(fc: FilteredComplex, n: int, lo: int) -> Mat:
    """Generators of d^{-1}(F^{lo+1-n} E_{n-1}) & F^{lo-n} E_n."""
    ring = fc.ring
    cx = fc.complex
    amb = cx.term(n)
    base = fc.level_cols(n, lo - n)
    if base.cols == 0:
        return base
    tgt = cx.term(n - 1)
    d = cx.d(n).mat @ base
    lvl = fc.level_cols(n - 1, lo + 1 - n)
    # solve d(base x) = lvl y, i.e. kernel of [d*base | -lvl | relations]
    stacked = d.hstack(-lvl).hstack(tgt.relations())
    U, _ = kernel_gens(stacked)
    coeffs = Mat(ring, U.a[: base.cols])
    return base @ coeffs
