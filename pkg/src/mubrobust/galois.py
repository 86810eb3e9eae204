"""Finite fields GF(p^r) and Galois rings GR(4, r).

Elements are stored as dense coefficient vectors in the polynomial basis
``1, X, ..., X^(r-1)``, reduced modulo a fixed monic modulus.  All structures
are small (at most 64 elements by default), so every structure also exposes
integer-indexed addition/multiplication tables built once at construction.

The element enumeration order is lexicographic over coefficient vectors
``(c_0, c_1, ..., c_{r-1})`` with ``c_0`` most significant.  The same order is
used to pick the modulus (smallest irreducible in that order) and to index
basis vectors downstream, so every derived object is deterministic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

from .errors import BudgetExceededError, InvalidInputError

DEFAULT_SIZE_BUDGET = 64


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def prime_power(n: int) -> tuple[int, int] | None:
    """Return ``(p, r)`` with ``n == p**r`` and ``p`` prime, or None."""
    if n < 2:
        return None
    for p in range(2, n + 1):
        if n % p == 0:
            if not is_prime(p):
                return None
            r = 0
            while n % p == 0:
                n //= p
                r += 1
            return (p, r) if n == 1 else None
    return None


# -- polynomial helpers over Z_m, coefficient lists low-degree first ---------


def _trim(c: list[int]) -> list[int]:
    while c and c[-1] == 0:
        c.pop()
    return c


def poly_mul(a: Sequence[int], b: Sequence[int], m: int) -> list[int]:
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] = (out[i + j] + ai * bj) % m
    return _trim(out)


def poly_mod(a: Sequence[int], monic: Sequence[int], m: int) -> list[int]:
    """Remainder of ``a`` modulo a monic polynomial over Z_m."""
    a = [x % m for x in a]
    n = len(monic) - 1
    for i in range(len(a) - 1, n - 1, -1):
        c = a[i]
        if c:
            for j in range(n + 1):
                a[i - n + j] = (a[i - n + j] - c * monic[j]) % m
    return _trim(a[:n] if len(a) > n else a)


def poly_has_root(f: Sequence[int], p: int) -> bool:
    return any(sum(c * pow(x, i, p) for i, c in enumerate(f)) % p == 0 for x in range(p))


def _monic_polys(p: int, deg: int) -> Iterator[list[int]]:
    """All monic polynomials of degree ``deg`` over Z_p, lexicographic in (c_0..c_{deg-1})."""
    for low in itertools.product(range(p), repeat=deg):
        yield list(low) + [1]


def is_irreducible(f: Sequence[int], p: int) -> bool:
    """Trial division by every monic polynomial of degree 1..deg/2."""
    f = _trim(list(f))
    n = len(f) - 1
    if n < 1:
        return False
    if n == 1:
        return True
    for deg in range(1, n // 2 + 1):
        for g in _monic_polys(p, deg):
            if not poly_mod(f, g, p):
                return False
    return True


def smallest_irreducible(p: int, r: int) -> tuple[int, ...]:
    """Lexicographically smallest monic irreducible degree-r polynomial over Z_p."""
    for f in _monic_polys(p, r):
        if is_irreducible(f, p):
            return tuple(f)
    raise AssertionError("an irreducible polynomial of every degree exists")


class _Algebra:
    """Shared machinery for a quotient ring Z_m[X]/(modulus) of size m^r."""

    modulus_int: int
    r: int
    modulus_poly: tuple[int, ...]

    def _init_tables(self) -> None:
        m, r = self.modulus_int, self.r
        self.coeff_vectors: list[tuple[int, ...]] = list(itertools.product(range(m), repeat=r))
        self._index = {c: i for i, c in enumerate(self.coeff_vectors)}
        n = len(self.coeff_vectors)
        arr = np.array(self.coeff_vectors, dtype=np.int64).reshape(n, r)
        self.add_table = self._lookup((arr[:, None, :] + arr[None, :, :]) % m)
        self.neg_table = self._lookup((-arr) % m)
        # multiplication-by-a matrices: column i holds the coefficients of a * X^i
        companion = np.zeros((r, r), dtype=np.int64)
        companion[1:, :-1] = np.eye(r - 1, dtype=np.int64)
        companion[:, -1] = [(-c) % m for c in self.modulus_poly[:r]]
        powers = [np.eye(r, dtype=np.int64)]
        for _ in range(r - 1):
            powers.append(companion @ powers[-1] % m)
        mats = np.einsum("ni,ijk->njk", arr, np.stack(powers)) % m
        mul = np.empty((n, n), dtype=np.int32)
        chunk = max(1, 2**22 // (n * r))
        for start in range(0, n, chunk):
            prod = np.einsum("ajk,bk->abj", mats[start : start + chunk], arr) % m
            mul[start : start + chunk] = self._lookup(prod)
        self.mul_table = mul

    def _lookup(self, coeffs: np.ndarray) -> np.ndarray:
        m = self.modulus_int
        weights = m ** np.arange(self.r - 1, -1, -1)
        return coeffs @ weights

    def _reduce(self, coeffs: Sequence[int]) -> tuple[int, ...]:
        c = poly_mod(coeffs, self.modulus_poly, self.modulus_int)
        return tuple(c) + (0,) * (self.r - len(c))

    @property
    def size(self) -> int:
        return len(self.coeff_vectors)

    def __len__(self) -> int:
        return self.size

    def index(self, coeffs: Sequence[int]) -> int:
        return self._index[self._reduce(coeffs)]


@dataclass(frozen=True, eq=False)
class _Element:
    coeffs: tuple[int, ...]
    parent: "_Algebra"

    @property
    def index(self) -> int:
        return self.parent._index[self.coeffs]

    def _coerce(self, other) -> "_Element":
        if isinstance(other, int):
            return self.parent.element(other)
        if not isinstance(other, _Element) or other.parent is not self.parent:
            raise InvalidInputError("arithmetic between elements of different structures")
        return other

    def _wrap(self, idx: int) -> "_Element":
        return self.parent[int(idx)]

    def __add__(self, other):
        o = self._coerce(other)
        return self._wrap(self.parent.add_table[self.index, o.index])

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return self._wrap(self.parent.add_table[self.index, self.parent.neg_table[o.index]])

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __neg__(self):
        return self._wrap(self.parent.neg_table[self.index])

    def __mul__(self, other):
        o = self._coerce(other)
        return self._wrap(self.parent.mul_table[self.index, o.index])

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        result, base = self.parent.one, self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, int):
            other = self.parent.element(other)
        return isinstance(other, _Element) and other.parent is self.parent and other.coeffs == self.coeffs

    def __hash__(self) -> int:
        return hash((id(self.parent), self.coeffs))

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def inverse(self):
        row = self.parent.mul_table[self.index]
        hits = np.flatnonzero(row == self.parent.one.index)
        if hits.size == 0:
            raise ZeroDivisionError(f"{self!r} is not invertible")
        return self._wrap(hits[0])

    def __truediv__(self, other):
        return self * self._coerce(other).inverse()

    def __repr__(self) -> str:
        terms = [f"{c}" if i == 0 else f"{c}*X^{i}" for i, c in enumerate(self.coeffs) if c]
        return " + ".join(terms) or "0"


class FieldElement(_Element):
    def trace(self) -> int:
        return self.parent.trace(self)


class RingElement(_Element):
    def trace(self) -> int:
        return self.parent.trace(self)

    def decompose(self) -> tuple["RingElement", "RingElement"]:
        return self.parent.decompose(self)


class FiniteField(_Algebra):
    """The Galois field GF(p^r) as Z_p[X]/(f) with ``f`` the smallest irreducible.

    Parameters
    ----------
    p : int
        Prime characteristic.
    r : int
        Extension degree.
    size_budget : int
        Largest allowed field order.
    """

    def __init__(self, p: int, r: int, size_budget: int = DEFAULT_SIZE_BUDGET):
        if not is_prime(p):
            raise InvalidInputError(f"characteristic {p} is not prime")
        if r < 1:
            raise InvalidInputError(f"extension degree must be positive, got {r}")
        if p**r > size_budget:
            raise BudgetExceededError(f"GF({p}^{r}) has {p**r} elements, budget is {size_budget}")
        self.p = p
        self.r = r
        self.modulus_int = p
        self.modulus_poly = smallest_irreducible(p, r)
        self._init_tables()
        self._elements = [FieldElement(c, self) for c in self.coeff_vectors]

    def __getitem__(self, i: int) -> FieldElement:
        return self._elements[i]

    def __iter__(self) -> Iterator[FieldElement]:
        return iter(self._elements)

    def element(self, value) -> FieldElement:
        """Element from an integer (embedded prime-field value) or a coefficient vector."""
        if isinstance(value, int):
            return self._elements[self.index([value % self.p])]
        return self._elements[self.index(list(value))]

    @property
    def zero(self) -> FieldElement:
        return self.element(0)

    @property
    def one(self) -> FieldElement:
        return self.element(1)

    def trace(self, a: FieldElement) -> int:
        return int(self.trace_table[a.index])

    @cached_property
    def trace_table(self) -> np.ndarray:
        """``Tr(a) = a + a^p + ... + a^(p^(r-1))`` for every element, as integers in Z_p."""
        out = np.empty(self.size, dtype=np.int64)
        for a in self._elements:
            t, power = self.zero, a
            for _ in range(self.r):
                t = t + power
                power = power**self.p
            if any(t.coeffs[1:]):
                raise AssertionError("trace left the prime subfield")
            out[a.index] = t.coeffs[0]
        return out

    def descriptor(self) -> dict:
        return {"kind": "field", "p": self.p, "r": self.r, "modulus": list(self.modulus_poly)}

    def __repr__(self) -> str:
        return f"FiniteField(p={self.p}, r={self.r}, modulus={list(self.modulus_poly)})"


def graeffe_lift(f2: Sequence[int]) -> tuple[int, ...]:
    """Hensel lift to Z_4 of a monic polynomial over Z_2, dividing ``X^(2^r-1) - 1``.

    Writes ``f = e(X) + o(X)`` (even and odd parts); the lift ``h`` satisfies
    ``h(X^2) = (-1)^r (e(X)^2 - o(X)^2) mod 4``.
    """
    f = list(f2)
    r = len(f) - 1
    even = [c if i % 2 == 0 else 0 for i, c in enumerate(f)]
    odd = [c if i % 2 == 1 else 0 for i, c in enumerate(f)]
    e2 = poly_mul(even, even, 4)
    o2 = poly_mul(odd, odd, 4)
    n = max(len(e2), len(o2))
    diff = [((e2[i] if i < len(e2) else 0) - (o2[i] if i < len(o2) else 0)) % 4 for i in range(n)]
    sign = -1 if r % 2 else 1
    h = [(sign * diff[2 * i]) % 4 for i in range(r + 1)]
    if h[-1] != 1 or any(diff[2 * i + 1] % 4 for i in range(r)):
        raise AssertionError("Graeffe step did not produce a monic even polynomial")
    return tuple(h)


class GaloisRing(_Algebra):
    """The Galois ring GR(4, r) = Z_4[X]/(h) with ``h`` the Hensel lift of the GF(2^r) modulus.

    The Teichmuller set ``T_r = {x : x^(2^r) = x}`` has ``2^r`` elements and is
    enumerated in the order of its reductions modulo 2, i.e. in the field order
    of ``FiniteField(2, r)``.
    """

    def __init__(self, r: int, size_budget: int = DEFAULT_SIZE_BUDGET):
        if r < 1:
            raise InvalidInputError(f"degree must be positive, got {r}")
        if 2**r > size_budget:
            raise BudgetExceededError(f"GR(4,{r}) Teichmuller set has {2**r} elements, budget is {size_budget}")
        self.r = r
        self.modulus_int = 4
        self.residue_field = FiniteField(2, r, size_budget=size_budget)
        self.modulus_poly = graeffe_lift(self.residue_field.modulus_poly)
        self._init_tables()
        self._elements = [RingElement(c, self) for c in self.coeff_vectors]
        self._build_teichmuller()

    def __getitem__(self, i: int) -> RingElement:
        return self._elements[i]

    def __iter__(self) -> Iterator[RingElement]:
        return iter(self._elements)

    def element(self, value) -> RingElement:
        if isinstance(value, int):
            return self._elements[self.index([value % 4])]
        return self._elements[self.index(list(value))]

    @property
    def zero(self) -> RingElement:
        return self.element(0)

    @property
    def one(self) -> RingElement:
        return self.element(1)

    def reduce_mod2(self, a: RingElement) -> FieldElement:
        return self.residue_field.element([c % 2 for c in a.coeffs])

    def teichmuller_of(self, a: RingElement) -> RingElement:
        """The unique ``t`` in T_r congruent to ``a`` mod 2, computed as ``a^(2^r)``."""
        return a ** (2**self.r)

    def _build_teichmuller(self) -> None:
        by_residue: dict[int, RingElement] = {}
        for a in self._elements:
            t = self.teichmuller_of(a)
            by_residue.setdefault(self.reduce_mod2(t).index, t)
        if len(by_residue) != 2**self.r:
            raise AssertionError("Teichmuller set has the wrong size")
        self.teichmuller: list[RingElement] = [by_residue[i] for i in range(2**self.r)]
        self._teich_pos = {t.index: i for i, t in enumerate(self.teichmuller)}
        # a generator of the cyclic group T_r \ {0}
        order = 2**self.r - 1
        self.generator = None
        for t in self.teichmuller[1:]:
            if all(t ** (order // q) != self.one for q in range(2, order + 1) if order % q == 0 and is_prime(q)) or order == 1:
                self.generator = t
                break
        if self.generator is None:
            raise AssertionError("no Teichmuller generator of full order")

    def teichmuller_position(self, t: RingElement) -> int:
        return self._teich_pos[t.index]

    def decompose(self, a: RingElement) -> tuple[RingElement, RingElement]:
        """2-adic decomposition ``a = t + 2u`` with ``t, u`` in T_r."""
        t = self.teichmuller_of(a)
        diff = (a - t).coeffs
        if any(c % 2 for c in diff):
            raise AssertionError("a - t is not divisible by 2")
        v = self.element([c // 2 for c in diff])
        return t, self.teichmuller_of(v)

    def frobenius(self, a: RingElement) -> RingElement:
        t, u = self.decompose(a)
        return t * t + 2 * (u * u)

    @cached_property
    def trace_table(self) -> np.ndarray:
        """Generalized trace ``sum_i phi^i(a)`` in Z_4 for every ring element."""
        out = np.empty(self.size, dtype=np.int64)
        for a in self._elements:
            t, b = self.zero, a
            for _ in range(self.r):
                t = t + b
                b = self.frobenius(b)
            if any(t.coeffs[1:]):
                raise AssertionError("ring trace left Z_4")
            out[a.index] = t.coeffs[0]
        return out

    def trace(self, a: RingElement) -> int:
        return int(self.trace_table[a.index])

    def descriptor(self) -> dict:
        return {
            "kind": "galois_ring",
            "p": 2,
            "r": self.r,
            "modulus": list(self.modulus_poly),
            "residue_modulus": list(self.residue_field.modulus_poly),
        }

    def __repr__(self) -> str:
        return f"GaloisRing(r={self.r}, modulus={list(self.modulus_poly)})"


def field_construct(p: int, r: int, size_budget: int = DEFAULT_SIZE_BUDGET) -> FiniteField:
    return FiniteField(p, r, size_budget=size_budget)


def ring_construct(r: int, size_budget: int = DEFAULT_SIZE_BUDGET) -> GaloisRing:
    return GaloisRing(r, size_budget=size_budget)


def field_trace(a: FieldElement) -> int:
    return a.parent.trace(a)


def ring_trace(a: RingElement) -> int:
    return a.parent.trace(a)


def teichmuller_decompose(a: RingElement) -> tuple[RingElement, RingElement]:
    return a.parent.decompose(a)
