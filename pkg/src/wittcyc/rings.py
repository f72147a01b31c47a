"""Exact arithmetic in finite chain rings and length-2 Witt vectors.

A chain ring here is (Z/p^k)[t]/(m(t)) with k in {1, 2} and m monic of
degree d, irreducible mod p.  k = 1 gives the field F_{p^d}; k = 2 gives a
local ring of order p^{2d} with maximal ideal (p), e.g. Z/4, Z/9, GR(4,2).

Elements are coefficient vectors of length d with entries in [0, p^k),
coordinates in the power basis 1, t, ..., t^{d-1}.  All operations are
exact; nothing ever leaves integer arithmetic.

Witt2 is the ring of length-2 Witt vectors over F_{p^d}: pairs (x0, x1)
with the carry-cocycle addition and the Frobenius-twisted multiplication
(x0, x1)(y0, y1) = (x0 y0, x0^p y1 + x1 y0^p).  The carry uses the
classical sign, c(x, y) = -sum_{0<i<p} (1/p) C(p,i) x^i y^{p-i}, which is
the unique choice making (x0, x1) -> x0^p + p*x1 a ring isomorphism
W2(F_p) -> Z/p^2.
"""

from __future__ import annotations

import math
from functools import lru_cache
from itertools import product
from typing import Iterator

import numpy as np


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    for q in range(2, int(n**0.5) + 1):
        if n % q == 0:
            return False
    return True


def _poly_mul_mod(a: tuple, b: tuple, modulus: tuple, q: int) -> tuple:
    # schoolbook product, then reduce by the monic modulus, coefficients mod q
    d = len(modulus) - 1
    prod_ = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                prod_[i + j] = (prod_[i + j] + ai * bj) % q
    for i in range(len(prod_) - 1, d - 1, -1):
        c = prod_[i]
        if c:
            for j in range(d + 1):
                prod_[i - d + j] = (prod_[i - d + j] - c * modulus[j]) % q
        prod_[i] = 0
    return tuple(prod_[:d])


def _irreducible_mod_p(poly: tuple, p: int) -> bool:
    """Brute-force irreducibility of a monic polynomial over F_p (tiny d)."""
    d = len(poly) - 1
    if d == 1:
        return True
    # check for roots and, for d <= 3 that suffices; general d: trial division
    for k in range(1, d // 2 + 1):
        for cand in product(range(p), repeat=k):
            divisor = list(cand) + [1]
            rem = [c % p for c in poly]
            for i in range(len(rem) - 1, k - 1, -1):
                c = rem[i]
                if c:
                    for j in range(k + 1):
                        rem[i - k + j] = (rem[i - k + j] - c * divisor[j]) % p
                rem[i] = 0
            if not any(rem[:k]):
                return False
    return True


@lru_cache(maxsize=None)
def default_modulus(p: int, d: int) -> tuple:
    """Smallest monic degree-d polynomial irreducible over F_p, lexicographic
    in (constant, ..., leading) order.  d=2 picks t^2+t+1 for p=2 and t^2+1
    for p=3, matching the fixed moduli used throughout the test corpus."""
    if d == 1:
        return (0, 1)
    for tail in product(range(p), repeat=d):
        poly = tuple(tail) + (1,)
        if _irreducible_mod_p(poly, p):
            return poly
    raise ValueError(f"no irreducible polynomial of degree {d} over F_{p}")


class ChainRing:
    """RingSpec: the ring (Z/p^k)[t]/(m(t)) plus vectorized array kernels.

    Matrices over the ring are numpy int64 arrays of shape (..., d) with
    entries reduced mod q = p^k; the last axis is the polynomial coordinate.
    """

    def __init__(self, p: int, d: int = 1, k: int = 1, modulus: tuple | None = None):
        if not _is_prime(p):
            raise ValueError(f"p = {p} is not prime")
        if d < 1 or k not in (1, 2):
            raise ValueError("need d >= 1 and k in {1, 2}")
        self.p = p
        self.d = d
        self.k = k
        self.q = p**k
        if modulus is None:
            modulus = default_modulus(p, d)
        modulus = tuple(c % self.q for c in modulus[:-1]) + (1,)
        if len(modulus) != d + 1:
            raise ValueError("modulus degree must equal d")
        if not _irreducible_mod_p(tuple(c % p for c in modulus), p):
            raise ValueError("modulus is not irreducible mod p")
        self.modulus = modulus
        self.order = self.q**d
        # t^e mod m for e < 2d-1, used to fold convolution tails
        if d == 1:
            red = np.ones((1, 1), dtype=np.int64)
        else:
            red = np.zeros((2 * d - 1, d), dtype=np.int64)
            cur = (1,) + (0,) * (d - 1)
            for e in range(2 * d - 1):
                red[e] = cur
                cur = _poly_mul_mod(cur, (0, 1), self.modulus, self.q)
        self._red = red

    # -- scalar land ---------------------------------------------------------

    def scalar(self, coeffs) -> "Scalar":
        if isinstance(coeffs, int):
            coeffs = (coeffs,) + (0,) * (self.d - 1)
        return Scalar(self, tuple(int(c) % self.q for c in coeffs))

    @property
    def zero(self) -> "Scalar":
        return self.scalar(0)

    @property
    def one(self) -> "Scalar":
        return self.scalar(1)

    def elements(self) -> Iterator["Scalar"]:
        for coeffs in product(range(self.q), repeat=self.d):
            yield Scalar(self, coeffs)

    def residue_field(self) -> "ChainRing":
        """The k = 1 quotient R/p, same modulus read mod p."""
        if self.k == 1:
            return self
        return ChainRing(self.p, self.d, 1, tuple(c % self.p for c in self.modulus))

    def lift_ring(self) -> "ChainRing":
        """The k = 2 ring with the same modulus read mod p^2."""
        if self.k == 2:
            return self
        return ChainRing(self.p, self.d, 2, self.modulus)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ChainRing)
            and (self.p, self.d, self.k, self.modulus)
            == (other.p, other.d, other.k, other.modulus)
        )

    def __hash__(self):
        return hash((self.p, self.d, self.k, self.modulus))

    def __repr__(self):
        if self.d == 1:
            return f"Z/{self.q}" if self.k == 2 else f"F_{self.p}"
        base = f"GR({self.q},{self.d})" if self.k == 2 else f"F_{self.p**self.d}"
        return base

    # -- vectorized array kernels (shape (..., d), int64, reduced mod q) -----

    def arr_zeros(self, shape) -> np.ndarray:
        return np.zeros(tuple(shape) + (self.d,), dtype=np.int64)

    def arr_reduce(self, a: np.ndarray) -> np.ndarray:
        return np.mod(a, self.q)

    def arr_add(self, a, b) -> np.ndarray:
        return (a + b) % self.q

    def arr_sub(self, a, b) -> np.ndarray:
        return (a - b) % self.q

    def arr_neg(self, a) -> np.ndarray:
        return (-a) % self.q

    def _fold(self, conv: np.ndarray) -> np.ndarray:
        """Reduce a (..., 2d-1) convolution by the modulus to (..., d)."""
        d = self.d
        out = conv[..., :d].copy()
        for e in range(d, 2 * d - 1):
            col = conv[..., e]
            for j in range(d):
                r = self._red[e, j]
                if r:
                    out[..., j] += col * r
        return out % self.q

    def arr_scalar_mul(self, s: "Scalar", a: np.ndarray) -> np.ndarray:
        if self.d == 1:
            return (s.coeffs[0] * a) % self.q
        out = np.zeros(a.shape[:-1] + (2 * self.d - 1,), dtype=np.int64)
        for i, ci in enumerate(s.coeffs):
            if ci:
                out[..., i : i + self.d] += ci * a
        return self._fold(out)

    def arr_matmul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """(r, m, d) @ (m, c, d) -> (r, c, d) with polynomial reduction."""
        d = self.d
        if d == 1:
            return (a[:, :, 0] @ b[:, :, 0])[:, :, None] % self.q
        conv = np.zeros((a.shape[0], b.shape[1], 2 * d - 1), dtype=np.int64)
        for i in range(d):
            for j in range(d):
                conv[:, :, i + j] += a[:, :, i] @ b[:, :, j]
        return self._fold(conv)

    def arr_val(self, a: np.ndarray) -> np.ndarray:
        """p-adic valuation per entry, in {0, ..., k}; shape (...,)."""
        v = np.full(a.shape[:-1], self.k, dtype=np.int64)
        for e in range(self.k - 1, -1, -1):
            nz = (a % (self.p ** (e + 1)) != 0).any(axis=-1)
            v[nz] = np.minimum(v[nz], e)
        return v

    def unit_inverse(self, coeffs: tuple) -> tuple:
        """Inverse of a unit: Euclid in F_p[t]/(m mod p), then Hensel to p^k."""
        p, d, q = self.p, self.d, self.q
        if self.arr_val(np.array(coeffs, dtype=np.int64)) != 0:
            raise ZeroDivisionError("not a unit in the chain ring")
        inv = self._field_inverse(tuple(c % p for c in coeffs))
        if self.k == 2:
            # Hensel step x -> x(2 - a x) doubles precision
            ax = _poly_mul_mod(coeffs, inv, self.modulus, q)
            two_minus = ((2 - ax[0]) % q,) + tuple((-c) % q for c in ax[1:])
            inv = _poly_mul_mod(inv, two_minus, self.modulus, q)
        return inv

    def _field_inverse(self, coeffs: tuple) -> tuple:
        p, d = self.p, self.d
        if d == 1:
            return (pow(coeffs[0], p - 2, p),)
        # extended Euclid in F_p[t]
        def degree(f):
            for i in range(len(f) - 1, -1, -1):
                if f[i] % p:
                    return i
            return -1

        def scale(f, c):
            return [x * c % p for x in f]

        r0, r1 = list(self.modulus), list(coeffs) + [0]
        s0, s1 = [0] * (d + 1), [1] + [0] * d
        while degree(r1) > 0:
            dr0, dr1 = degree(r0), degree(r1)
            if dr0 < dr1:
                r0, r1, s0, s1 = r1, r0, s1, s0
                continue
            c = r0[dr0] * pow(r1[dr1], p - 2, p) % p
            shift = dr0 - dr1
            for i in range(dr1 + 1):
                r0[i + shift] = (r0[i + shift] - c * r1[i]) % p
            for i in range(d + 1 - shift):
                s0[i + shift] = (s0[i + shift] - c * s1[i]) % p
        if degree(r1) != 0:
            raise ZeroDivisionError("not invertible mod p")
        c = pow(r1[0], p - 2, p)
        return tuple(x * c % p for x in s1[:d])


class Scalar:
    """An element of a chain ring; immutable, canonical coefficients."""

    __slots__ = ("ring", "coeffs")

    def __init__(self, ring: ChainRing, coeffs: tuple):
        self.ring = ring
        self.coeffs = coeffs

    def _check(self, other: "Scalar"):
        if not isinstance(other, Scalar) or other.ring != self.ring:
            raise ValueError("scalars live in different rings")

    def __add__(self, other):
        self._check(other)
        q = self.ring.q
        return Scalar(self.ring, tuple((a + b) % q for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other):
        self._check(other)
        q = self.ring.q
        return Scalar(self.ring, tuple((a - b) % q for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self):
        q = self.ring.q
        return Scalar(self.ring, tuple((-a) % q for a in self.coeffs))

    def __mul__(self, other):
        self._check(other)
        return Scalar(
            self.ring,
            _poly_mul_mod(self.coeffs, other.coeffs, self.ring.modulus, self.ring.q),
        )

    def __pow__(self, n: int):
        out = self.ring.one
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def inverse(self) -> "Scalar":
        return Scalar(self.ring, self.ring.unit_inverse(self.coeffs))

    def is_unit(self) -> bool:
        return any(c % self.ring.p for c in self.coeffs)

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def valuation(self) -> int:
        return int(self.ring.arr_val(np.array(self.coeffs, dtype=np.int64)))

    def frobenius(self) -> "Scalar":
        """x -> x^p; a bijective ring endomorphism of F_{p^d} (k = 1 only)."""
        if self.ring.k != 1:
            raise ValueError("Frobenius is only modeled on k = 1 rings")
        return self ** self.ring.p

    def frobenius_inv(self) -> "Scalar":
        if self.ring.k != 1:
            raise ValueError("Frobenius is only modeled on k = 1 rings")
        return self ** (self.ring.p ** (self.ring.d - 1))

    def __eq__(self, other):
        return (
            isinstance(other, Scalar)
            and self.ring == other.ring
            and self.coeffs == other.coeffs
        )

    def __hash__(self):
        return hash((self.ring, self.coeffs))

    def __repr__(self):
        if self.ring.d == 1:
            return str(self.coeffs[0])
        return "+".join(
            f"{c}t^{i}" if i > 1 else (f"{c}t" if i == 1 else str(c))
            for i, c in enumerate(self.coeffs)
        )


def carry_cocycle(x: Scalar, y: Scalar) -> Scalar:
    """Universal addition carry of length-2 Witt vectors over F_{p^d}.

    c(x, y) = -sum_{0<i<p} (binom(p,i)/p) x^i y^{p-i}; the binomial is divided
    exactly by p in Z before reduction, and the sign is the classical one (see
    witt_ghost_iso).  Symmetric, and c(x, 0) = 0.
    """
    if x.ring != y.ring:
        raise ValueError("scalars live in different rings")
    if x.ring.k != 1:
        raise ValueError("carry_cocycle expects k = 1 scalars")
    ring = x.ring
    p = ring.p
    acc = ring.zero
    for i in range(1, p):
        coeff = (math.comb(p, i) // p) % p
        acc = acc + ring.scalar(coeff) * x**i * y ** (p - i)
    return -acc


class Witt2:
    """A length-2 Witt vector (x0, x1) over F_{p^d}."""

    __slots__ = ("x0", "x1")

    def __init__(self, x0: Scalar, x1: Scalar):
        if x0.ring != x1.ring:
            raise ValueError("components live in different rings")
        if x0.ring.k != 1:
            raise ValueError("Witt2 components must be k = 1 scalars")
        self.x0 = x0
        self.x1 = x1

    @property
    def ring(self) -> ChainRing:
        return self.x0.ring

    def _check(self, other: "Witt2"):
        if not isinstance(other, Witt2) or other.ring != self.ring:
            raise ValueError("Witt vectors over different rings")

    def __add__(self, other):
        self._check(other)
        return Witt2(
            self.x0 + other.x0,
            self.x1 + other.x1 + carry_cocycle(self.x0, other.x0),
        )

    def __neg__(self):
        # subtraction oracle: (x0,x1) + (-(x0,x1)) = 0 with the same carry law
        m = Witt2(-self.x0, -self.x1)
        corr = carry_cocycle(self.x0, -self.x0)
        return Witt2(m.x0, m.x1 - corr)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        self._check(other)
        p = self.ring.p
        return Witt2(
            self.x0 * other.x0,
            self.x0**p * other.x1 + self.x1 * other.x0**p,
        )

    def __eq__(self, other):
        return (
            isinstance(other, Witt2)
            and self.ring == other.ring
            and (self.x0, self.x1) == (other.x0, other.x1)
        )

    def __hash__(self):
        return hash((self.x0, self.x1))

    def __repr__(self):
        return f"({self.x0!r}, {self.x1!r})"


def witt_zero(ring: ChainRing) -> Witt2:
    return Witt2(ring.zero, ring.zero)


def witt_one(ring: ChainRing) -> Witt2:
    return Witt2(ring.one, ring.zero)


def witt_elements(ring: ChainRing) -> Iterator[Witt2]:
    for x0 in ring.elements():
        for x1 in ring.elements():
            yield Witt2(x0, x1)


def witt_ghost_iso(w: Witt2) -> int:
    """W2(F_p) -> Z/p^2, (x0, x1) -> x0~^p + p*x1~, integer representatives.

    Only the prime-field case is supported; exhaustive checks certify this to
    be a ring isomorphism, which is what pins the carry sign globally.
    """
    ring = w.ring
    if ring.d != 1:
        raise ValueError("ghost components are only defined for d = 1")
    p = ring.p
    return (w.x0.coeffs[0] ** p + p * w.x1.coeffs[0]) % p**2
