"""Exact dense linear algebra over finite chain rings.

Two layers live here.

``Mat`` is a dense matrix over a ``ChainRing``, stored as an int64 numpy
array of shape (rows, cols, d).  ``smith`` drives any such matrix to the
diagonal form P A Q = diag(p^{e_1}, ..., p^{e_r}) with P, Q invertible and
exponents e_i in {0, ..., k} (a chain ring is a local PIR, so this always
works); pivots take the minimal-valuation entry, ties broken by lowest
(row, col), which makes every derived basis deterministic.  Kernels,
images, solving, and membership all come from the Smith witnesses.

``PModule``/``PMap`` are finitely presented modules in canonical form
M = (+) R/p^{c_i} with c_i in {1, ..., k} (c = k is a free generator), and
maps between them given by matrices on generators.  Submodules, quotients,
subquotients, pullbacks and pushouts reduce to Smith computations on block
matrices; every constructor returns canonical presentations so that equality
of induced maps is literal matrix equality.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .rings import ChainRing, Scalar


class Mat:
    """Dense matrix over a chain ring; immutable by convention."""

    __slots__ = ("ring", "rows", "cols", "a")

    def __init__(self, ring: ChainRing, a: np.ndarray):
        assert a.ndim == 3 and a.shape[2] == ring.d
        self.ring = ring
        self.rows, self.cols = a.shape[0], a.shape[1]
        self.a = a % ring.q

    # -- constructors ---------------------------------------------------------

    @staticmethod
    def zeros(ring: ChainRing, rows: int, cols: int) -> "Mat":
        return Mat(ring, ring.arr_zeros((rows, cols)))

    @staticmethod
    def identity(ring: ChainRing, n: int) -> "Mat":
        a = ring.arr_zeros((n, n))
        for i in range(n):
            a[i, i, 0] = 1
        return Mat(ring, a)

    @staticmethod
    def from_rows(ring: ChainRing, rows: Sequence[Sequence]) -> "Mat":
        """Rows of scalars; each scalar an int, coefficient list, or Scalar."""
        r = len(rows)
        c = len(rows[0]) if r else 0
        a = ring.arr_zeros((r, c))
        for i, row in enumerate(rows):
            if len(row) != c:
                raise ValueError("ragged matrix")
            for j, x in enumerate(row):
                if isinstance(x, Scalar):
                    a[i, j] = np.array(x.coeffs)
                elif isinstance(x, int):
                    a[i, j, 0] = x
                else:
                    a[i, j] = np.array(list(x))
        return Mat(ring, a)

    @staticmethod
    def scalar_matrix(ring: ChainRing, n: int, s: Scalar) -> "Mat":
        a = ring.arr_zeros((n, n))
        for i in range(n):
            a[i, i] = np.array(s.coeffs)
        return Mat(ring, a)

    # -- arithmetic -----------------------------------------------------------

    def __add__(self, other: "Mat") -> "Mat":
        return Mat(self.ring, self.ring.arr_add(self.a, other.a))

    def __sub__(self, other: "Mat") -> "Mat":
        return Mat(self.ring, self.ring.arr_sub(self.a, other.a))

    def __neg__(self) -> "Mat":
        return Mat(self.ring, self.ring.arr_neg(self.a))

    def __matmul__(self, other: "Mat") -> "Mat":
        if other.rows != self.cols:
            raise ValueError("shape mismatch in matrix product")
        if self.rows == 0 or other.cols == 0 or self.cols == 0:
            return Mat.zeros(self.ring, self.rows, other.cols)
        return Mat(self.ring, self.ring.arr_matmul(self.a, other.a))

    def scale(self, s: Scalar) -> "Mat":
        return Mat(self.ring, self.ring.arr_scalar_mul(s, self.a))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Mat)
            and self.ring == other.ring
            and self.a.shape == other.a.shape
            and bool((self.a == other.a).all())
        )

    def __hash__(self):
        return hash((self.ring, self.a.tobytes(), self.a.shape))

    def is_zero(self) -> bool:
        return not self.a.any()

    def col(self, j: int) -> np.ndarray:
        return self.a[:, j, :]

    def hstack(self, other: "Mat") -> "Mat":
        return Mat(self.ring, np.concatenate([self.a, other.a], axis=1))

    def vstack(self, other: "Mat") -> "Mat":
        return Mat(self.ring, np.concatenate([self.a, other.a], axis=0))

    def take_cols(self, idx) -> "Mat":
        return Mat(self.ring, self.a[:, list(idx), :])

    def take_rows(self, idx) -> "Mat":
        return Mat(self.ring, self.a[list(idx), :, :])

    def transpose(self) -> "Mat":
        return Mat(self.ring, np.swapaxes(self.a, 0, 1))

    def __repr__(self):
        return f"Mat({self.ring!r}, {self.rows}x{self.cols})"

    @staticmethod
    def block_diag(ring: ChainRing, blocks: Sequence["Mat"]) -> "Mat":
        rows = sum(b.rows for b in blocks)
        cols = sum(b.cols for b in blocks)
        a = ring.arr_zeros((rows, cols))
        r = c = 0
        for b in blocks:
            a[r : r + b.rows, c : c + b.cols] = b.a
            r += b.rows
            c += b.cols
        return Mat(ring, a)


@dataclass(frozen=True)
class SmithForm:
    """P @ A @ Q is diagonal with entries p^{exps[i]}; witnesses on demand."""

    ring: ChainRing
    exps: tuple          # exponents of the nonzero diagonal, 0 <= e < k
    P: Mat | None
    Pinv: Mat | None
    Q: Mat | None
    Qinv: Mat | None
    rows: int
    cols: int

    def diag_exponent(self, i: int) -> int:
        # missing diagonal entries are zero, i.e. exponent k
        return self.exps[i] if i < len(self.exps) else self.ring.k

    @property
    def log_image_size(self) -> int:
        """log_p |Im A| (counting F_p-dimensions, i.e. already times d)."""
        k, d = self.ring.k, self.ring.d
        return d * sum(k - e for e in self.exps)

    @property
    def log_kernel_size(self) -> int:
        k, d = self.ring.k, self.ring.d
        return d * k * self.cols - self.log_image_size


def _apply_rowop_sub(a, P, Pinv, ring, factors, t):
    """rows_i -= factors_i * row_t on a and P; inverse op columns on Pinv."""
    fr = factors.copy()
    fr[t] = 0
    if not fr.any():
        return
    a -= _outer(ring, fr, a[t])
    a %= ring.q
    if P is not None:
        P.a[...] = ring.arr_reduce(P.a - _outer(ring, fr, P.a[t]))
    if Pinv is not None:
        # Pinv <- Pinv @ E^{-1}: col_t += sum_i factors_i * col_i
        Pinv.a[:, t] = ring.arr_reduce(
            Pinv.a[:, t] + _contract_cols(ring, Pinv.a, fr)
        )


def _outer(ring: ChainRing, v: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Outer product of a coefficient column (n,d) with a row (m,d) -> (n,m,d)."""
    d = ring.d
    if d == 1:
        return (v[:, None, 0] * w[None, :, 0])[:, :, None] % ring.q
    conv = np.zeros((v.shape[0], w.shape[0], 2 * d - 1), dtype=np.int64)
    for i in range(d):
        for j in range(d):
            conv[:, :, i + j] += v[:, None, i] * w[None, :, j]
    return ring._fold(conv)


def _contract_cols(ring: ChainRing, a: np.ndarray, f: np.ndarray) -> np.ndarray:
    """sum_i f_i * a[:, i] with ring multiplication; a is (n, m, d), f is (m, d)."""
    d = ring.d
    if d == 1:
        return (a[:, :, 0] @ f[:, 0])[:, None] % ring.q
    conv = np.zeros((a.shape[0], 2 * d - 1), dtype=np.int64)
    for i in range(d):
        for j in range(d):
            conv[:, i + j] += a[:, :, i] @ f[:, j]
    return ring._fold(conv)


def smith(m: Mat, want: str = "PpQq") -> SmithForm:
    """Diagonalize over the chain ring; ``want`` selects which of the
    witnesses P, Pinv ("p"), Q, Qinv ("q") to track."""
    ring = m.ring
    k, q, p = ring.k, ring.q, ring.p
    a = m.a.copy()
    nr, nc = m.rows, m.cols
    P = Mat.identity(ring, nr) if "P" in want else None
    Pinv = Mat.identity(ring, nr) if "p" in want else None
    Q = Mat.identity(ring, nc) if "Q" in want else None
    Qinv = Mat.identity(ring, nc) if "q" in want else None
    exps = []
    t = 0
    while t < min(nr, nc):
        vals = ring.arr_val(a[t:, t:])
        e = int(vals.min()) if vals.size else k
        if e >= k:
            break
        flat = np.argwhere(vals == e)
        i, j = int(flat[0][0]) + t, int(flat[0][1]) + t
        if i != t:
            a[[t, i]] = a[[i, t]]
            if P is not None:
                P.a[[t, i]] = P.a[[i, t]]
            if Pinv is not None:
                Pinv.a[:, [t, i]] = Pinv.a[:, [i, t]]
        if j != t:
            a[:, [t, j]] = a[:, [j, t]]
            if Q is not None:
                Q.a[:, [t, j]] = Q.a[:, [j, t]]
            if Qinv is not None:
                Qinv.a[[t, j]] = Qinv.a[[j, t]]
        # pivot = unit * p^e; scale its row by unit^{-1} so pivot becomes p^e
        unit = tuple(int(c) // p**e % q for c in a[t, t])
        uinv_s = Scalar(ring, ring.unit_inverse(unit))
        a[t] = ring.arr_scalar_mul(uinv_s, a[t][None, :, :])[0]
        if P is not None:
            P.a[t] = ring.arr_scalar_mul(uinv_s, P.a[t][None, :, :])[0]
        if Pinv is not None:
            Pinv.a[:, t] = ring.arr_scalar_mul(Scalar(ring, unit), Pinv.a[:, t][:, None, :])[:, 0, :]
        # clear the pivot column with row ops (all other entries have val >= e)
        factors = (a[:, t] // p**e) % q
        _apply_rowop_sub(a, P, Pinv, ring, factors, t)
        # clear the pivot row with column ops
        factors = (a[t, :] // p**e) % q
        fc = factors.copy()
        fc[t] = 0
        if fc.any():
            a -= np.swapaxes(_outer(ring, fc, a[:, t]), 0, 1)
            a %= q
            if Q is not None:
                Q.a[...] = ring.arr_reduce(Q.a - np.swapaxes(_outer(ring, fc, Q.a[:, t]), 0, 1))
            if Qinv is not None:
                Qinv.a[t] = ring.arr_reduce(Qinv.a[t] + _contract_cols(ring, np.swapaxes(Qinv.a, 0, 1), fc))
        exps.append(e)
        t += 1
    return SmithForm(ring, tuple(exps), P, Pinv, Q, Qinv, nr, nc)


def kernel_gens(m: Mat, sf: SmithForm | None = None) -> tuple[Mat, tuple]:
    """Generators of ker(m) with their order exponents.

    Returns (U, orders): columns of U generate the kernel, and the i-th
    generator has annihilator p^{orders[i]} (orders[i] in {1, ..., k}; a
    generator of order k is free).
    """
    ring = m.ring
    k, p = ring.k, ring.p
    sf = sf or smith(m, "Q")
    cols = []
    orders = []
    for i in range(m.cols):
        e = sf.diag_exponent(i)
        if e == 0:
            continue
        v = ring.arr_zeros((m.cols, 1))
        v[i, 0, 0] = p ** (k - e)
        cols.append(v)
        orders.append(e)
    if not cols:
        return Mat.zeros(ring, m.cols, 0), tuple()
    U = Mat(ring, np.concatenate(cols, axis=1))
    return sf.Q @ U, tuple(orders)


def solve(m: Mat, b: Mat, sf: SmithForm | None = None) -> Mat | None:
    """A particular solution X of m @ X = b, or None if inconsistent."""
    ring = m.ring
    k, p, q = ring.k, ring.p, ring.q
    sf = sf or smith(m, "PQ")
    y = (sf.P @ b).a
    x = ring.arr_zeros((m.cols, b.cols))
    for i in range(m.rows):
        e = sf.diag_exponent(i) if i < m.cols else k
        row = y[i]
        if i >= m.cols or e >= k:
            if (row % q).any():
                return None
            continue
        if (row % p**e).any():
            return None
        x[i] = (row // p**e) % q
    return sf.Q @ Mat(ring, x)


def is_invertible(m: Mat, sf: SmithForm | None = None) -> bool:
    if m.rows != m.cols:
        return False
    sf = sf or smith(m, "")
    return len(sf.exps) == m.rows and all(e == 0 for e in sf.exps)


def inverse(m: Mat) -> Mat:
    sf = smith(m, "PQ")
    if not is_invertible(m, sf):
        raise ValueError("matrix is not invertible")
    return sf.Q @ sf.P


# --------------------------------------------------------------------------
# finitely presented modules
# --------------------------------------------------------------------------


class PModule:
    """(+)_i R/p^{c_i} in canonical form; c_i in {1, ..., k}, free iff c_i = k."""

    __slots__ = ("ring", "orders")

    def __init__(self, ring: ChainRing, orders: Sequence[int]):
        assert all(1 <= c <= ring.k for c in orders)
        self.ring = ring
        self.orders = tuple(orders)

    @staticmethod
    def free(ring: ChainRing, n: int) -> "PModule":
        return PModule(ring, (ring.k,) * n)

    @property
    def ngens(self) -> int:
        return len(self.orders)

    @property
    def log_size(self) -> int:
        return self.ring.d * sum(self.orders)

    def is_free(self) -> bool:
        return all(c == self.ring.k for c in self.orders)

    def is_zero(self) -> bool:
        return not self.orders

    def reduce(self, a: np.ndarray) -> np.ndarray:
        """Canonicalize coordinates: entry i taken mod p^{c_i}."""
        out = a % self.ring.q
        for i, c in enumerate(self.orders):
            if c < self.ring.k:
                out[i] = out[i] % self.ring.p**c
        return out

    def relations(self) -> Mat:
        """diag(p^{c_i}) as a map R^n -> R^n presenting this module."""
        ring = self.ring
        a = ring.arr_zeros((self.ngens, self.ngens))
        for i, c in enumerate(self.orders):
            a[i, i, 0] = ring.p**c % ring.q
        return Mat(ring, a)

    def elements(self):
        """All elements as coordinate arrays (exhaustive; small modules only)."""
        from itertools import product as iproduct

        ranges = []
        for c in self.orders:
            ranges.extend([range(self.ring.p**c)] * self.ring.d)
        for tup in iproduct(*ranges):
            yield np.array(tup, dtype=np.int64).reshape(self.ngens, self.ring.d)

    def zero_el(self) -> np.ndarray:
        return self.ring.arr_zeros((self.ngens,))

    def gen(self, i: int) -> np.ndarray:
        v = self.zero_el()
        v[i, 0] = 1
        return v

    def __eq__(self, other):
        return (
            isinstance(other, PModule)
            and self.ring == other.ring
            and self.orders == other.orders
        )

    def __hash__(self):
        return hash((self.ring, self.orders))

    def __repr__(self):
        return f"PModule({self.ring!r}, {self.orders})"


class PMap:
    """A map of presented modules, as a matrix on generators.

    Well-defined iff val(A[i, j]) >= c_i(tgt) - c_j(src); entries are stored
    reduced mod p^{c_i(tgt)} so equal maps have equal matrices.
    """

    __slots__ = ("src", "tgt", "mat", "_sfc")

    def __init__(self, src: PModule, tgt: PModule, mat: Mat, check: bool = True):
        assert mat.rows == tgt.ngens and mat.cols == src.ngens
        ring = src.ring
        a = mat.a % ring.q
        for i, c in enumerate(tgt.orders):
            if c < ring.k:
                a[i] = a[i] % ring.p**c
        self.src = src
        self.tgt = tgt
        self.mat = Mat(ring, a)
        self._sfc = None
        if check and mat.cols and mat.rows:
            vals = ring.arr_val(self.mat.a)
            need = np.array(tgt.orders)[:, None] - np.array(src.orders)[None, :]
            if (vals < need).any():
                raise ValueError("matrix does not define a module map")

    @property
    def ring(self) -> ChainRing:
        return self.src.ring

    @staticmethod
    def zero(src: PModule, tgt: PModule) -> "PMap":
        return PMap(src, tgt, Mat.zeros(src.ring, tgt.ngens, src.ngens), check=False)

    @staticmethod
    def identity(m: PModule) -> "PMap":
        return PMap(m, m, Mat.identity(m.ring, m.ngens), check=False)

    def __matmul__(self, other: "PMap") -> "PMap":
        assert other.tgt == self.src
        return PMap(other.src, self.tgt, self.mat @ other.mat, check=False)

    def __add__(self, other: "PMap") -> "PMap":
        assert self.src == other.src and self.tgt == other.tgt
        return PMap(self.src, self.tgt, self.mat + other.mat, check=False)

    def __sub__(self, other: "PMap") -> "PMap":
        assert self.src == other.src and self.tgt == other.tgt
        return PMap(self.src, self.tgt, self.mat - other.mat, check=False)

    def __neg__(self) -> "PMap":
        return PMap(self.src, self.tgt, -self.mat, check=False)

    def is_zero(self) -> bool:
        return self.mat.is_zero()

    def __eq__(self, other):
        return (
            isinstance(other, PMap)
            and self.src == other.src
            and self.tgt == other.tgt
            and self.mat == other.mat
        )

    def __hash__(self):
        return hash((self.src, self.tgt, self.mat))

    def apply(self, v: np.ndarray) -> np.ndarray:
        out = self.ring.arr_matmul(self.mat.a, v.reshape(self.src.ngens, 1, self.ring.d))
        return self.tgt.reduce(out[:, 0, :])

    def __repr__(self):
        return f"PMap({self.src.orders} -> {self.tgt.orders})"

    # -- structure ------------------------------------------------------------

    def _free_level(self) -> Mat:
        """The composite R^{src} -> tgt as a map to the free cover's quotient:
        kernel computations stack the matrix with tgt's relations."""
        return self.mat.hstack(self.tgt.relations())

    def _stacked_smith(self) -> SmithForm:
        if self._sfc is None:
            self._sfc = smith(self._free_level(), "PQ")
        return self._sfc

    def kernel(self) -> tuple[PModule, "PMap"]:
        """(K, incl) with incl: K -> src an injection onto ker(self)."""
        stacked = self._free_level()
        U, _ = kernel_gens(stacked, self._stacked_smith())
        lifted = Mat(self.ring, U.a[: self.src.ngens])
        return submodule(self.src, lifted)

    def image(self) -> tuple[PModule, "PMap"]:
        return submodule(self.tgt, self.mat)

    def cokernel(self) -> tuple[PModule, "PMap"]:
        """(C, proj) with proj: tgt -> C the canonical surjection."""
        return quotient(self.tgt, self.mat)

    def log_image_size(self) -> int:
        s, _ = self.image()
        return s.log_size

    def log_kernel_size(self) -> int:
        return self.src.log_size - self.log_image_size()

    def is_injective(self) -> bool:
        return self.log_kernel_size() == 0

    def is_surjective(self) -> bool:
        return self.log_image_size() == self.tgt.log_size

    def is_iso(self) -> bool:
        return self.is_injective() and self.is_surjective()

    def inverse(self) -> "PMap":
        if not self.is_iso():
            raise ValueError("map is not an isomorphism")
        sol = solve_map(self, Mat.identity(self.ring, self.tgt.ngens))
        return PMap(self.tgt, self.src, sol)


def solve_map(f: PMap, b: Mat) -> Mat | None:
    """Solve f(X) = b columnwise inside the presented target, or None."""
    stacked = f._free_level()
    sol = solve(stacked, b, f._stacked_smith())
    if sol is None:
        return None
    return Mat(f.ring, sol.a[: f.src.ngens])


def element_in_image(f: PMap, v: np.ndarray) -> bool:
    b = Mat(f.ring, v.reshape(f.tgt.ngens, 1, f.ring.d))
    return solve_map(f, b) is not None


def submodule(m: PModule, gens: Mat) -> tuple[PModule, PMap]:
    """Canonical presentation of the submodule of ``m`` generated by ``gens``.

    Returns (S, incl) with incl injective and Im(incl) = span(gens).
    """
    ring = m.ring
    u = gens.cols
    if u == 0:
        return PModule(ring, ()), PMap.zero(PModule(ring, ()), m)
    stacked = gens.hstack(m.relations())
    K, _ = kernel_gens(stacked)
    rel = Mat(ring, K.a[:u]) if K.cols else Mat.zeros(ring, u, 0)
    sf = smith(rel, "p")
    # coker(rel) in rotated coordinates; generator i of the canonical module
    # is (gens @ Pinv) column i, with annihilator exponent e_i
    new_gens = gens @ sf.Pinv
    orders = []
    keep = []
    for i in range(u):
        c = sf.diag_exponent(i)
        if c <= 0:
            continue
        orders.append(c)
        keep.append(i)
    S = PModule(ring, orders)
    incl = PMap(S, m, new_gens.take_cols(keep) if keep else Mat.zeros(ring, m.ngens, 0), check=False)
    return S, incl


def quotient(m: PModule, gens: Mat) -> tuple[PModule, PMap]:
    """Canonical presentation of m / span(gens); returns (Q, proj)."""
    ring = m.ring
    rel = gens.hstack(m.relations()) if gens.cols else m.relations()
    sf = smith(rel, "P")
    orders = []
    keep = []
    for i in range(m.ngens):
        c = sf.diag_exponent(i)
        if c <= 0:
            continue
        orders.append(c)
        keep.append(i)
    Q = PModule(ring, orders)
    proj_mat = Mat(ring, sf.P.a[keep]) if keep else Mat.zeros(ring, 0, m.ngens)
    return Q, PMap(m, Q, proj_mat, check=False)


def section_of(proj: PMap) -> Mat:
    """A set-level section of a surjective proj: lift of each target generator."""
    sol = solve_map(proj, Mat.identity(proj.ring, proj.tgt.ngens))
    if sol is None:
        raise ValueError("map is not surjective")
    return sol


def induced_map(
    f: PMap,
    src_sub: PMap,
    tgt_proj_or_sub: PMap,
    mode: str,
) -> PMap:
    """Transport f along canonical sub/quotient witnesses.

    mode "sub->sub": f restricted to Im(src_sub), corestricted to Im(tgt_sub);
    mode "quot->quot": f descended along quotient witnesses (src_sub, tgt_proj
    are the projections).
    """
    if mode == "sub->sub":
        comp = f @ src_sub
        sol = solve_map(tgt_proj_or_sub, comp.mat)
        if sol is None:
            raise ValueError("image does not land in the target submodule")
        return PMap(src_sub.src, tgt_proj_or_sub.src, sol)
    if mode == "quot->quot":
        sec = section_of(src_sub)
        return PMap(src_sub.tgt, tgt_proj_or_sub.tgt, (tgt_proj_or_sub @ f).mat @ sec, check=False)
    raise ValueError(f"unknown mode {mode!r}")


class Subquotient:
    """S/T inside an ambient free module, with canonical presentation.

    ``amb`` is the ambient PModule (usually free), ``s_gens`` and ``t_gens``
    ambient generator matrices with span(T) <= span(S).  ``module`` is the
    canonical quotient; ``to_canon`` maps an ambient element of S to its
    class, ``from_canon`` lifts canonical generators to ambient elements.
    """

    __slots__ = ("amb", "s_gens", "t_gens", "module", "_S", "_incl", "_proj")

    def __init__(self, amb: PModule, s_gens: Mat, t_gens: Mat):
        self.amb = amb
        self.s_gens = s_gens
        self.t_gens = t_gens
        S, incl = submodule(amb, s_gens)
        t_in_S = solve_map(incl, t_gens) if t_gens.cols else Mat.zeros(amb.ring, S.ngens, 0)
        if t_in_S is None:
            raise ValueError("T is not contained in S")
        self._S = S
        self._incl = incl
        self.module, self._proj = quotient(S, t_in_S)

    def to_canon(self, v: np.ndarray) -> np.ndarray:
        """Class of an ambient element (must lie in S)."""
        b = Mat(self.amb.ring, v.reshape(self.amb.ngens, 1, self.amb.ring.d))
        sol = solve_map(self._incl, b)
        if sol is None:
            raise ValueError("element does not lie in the subobject")
        return self.module.reduce(self._proj.apply(sol.a[:, 0, :]))

    def to_canon_mat(self, cols: Mat) -> Mat:
        sol = solve_map(self._incl, cols)
        if sol is None:
            raise ValueError("columns do not lie in the subobject")
        out = (self._proj.mat @ sol).a
        for i, c in enumerate(self.module.orders):
            if c < self.amb.ring.k:
                out[i] = out[i] % self.amb.ring.p**c
        return Mat(self.amb.ring, out)

    def from_canon(self) -> Mat:
        """Ambient representatives of the canonical generators."""
        sec = section_of(self._proj)
        return self._incl.mat @ sec

    def contains(self, v: np.ndarray) -> bool:
        b = Mat(self.amb.ring, v.reshape(self.amb.ngens, 1, self.amb.ring.d))
        return solve_map(self._incl, b) is not None


def induced_subquotient_map(f_amb: Mat, src: Subquotient, tgt: Subquotient) -> PMap:
    """The map src.module -> tgt.module induced by an ambient matrix that
    sends S_src into S_tgt and T_src into T_tgt (verified by solving)."""
    reps = src.from_canon()
    images = f_amb @ reps
    sol = tgt.to_canon_mat(images)
    pm = PMap(src.module, tgt.module, sol, check=False)
    # well-definedness: T_src must land in T_tgt (checked via zero classes)
    if src.t_gens.cols:
        t_img = f_amb @ src.t_gens
        cls = tgt.to_canon_mat(t_img)
        if not cls.is_zero():
            raise ValueError("ambient map does not respect the T-part")
    return pm
