"""Complete sets of mutually unbiased bases and measurement sets built from them.

Odd prime powers ``d = p^r`` use the quadratic-phase bases over GF(d)

    |phi^x_a> = d^{-1/2} sum_l w_p^{Tr(x l^2 + a l)} |l>,      x, a, l in GF(d),

even prime powers ``d = 2^r`` use the Teichmuller set T_r of GR(4, r)

    |phi^x_a> = d^{-1/2} sum_l i^{Tr((x + 2a) l)} |l>,          x, a, l in T_r,

and in both cases the computational basis is appended last, so the first
``d`` bases are the non-computational ones.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import BudgetExceededError, InvalidInputError, NumericalError
from .galois import DEFAULT_SIZE_BUDGET, FiniteField, GaloisRing, prime_power
from .linalg import HermitianOperator, root_of_unity

COMPLETENESS_TOL = 1e-9
PSD_TOL = 1e-9
UNBIASED_TOL = 1e-10


@dataclass(frozen=True)
class Basis:
    vectors: np.ndarray  # d x d, columns are the basis vectors
    label: str

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    def gram_deviation(self) -> float:
        v = self.vectors
        return float(np.max(np.abs(v.conj().T @ v - np.eye(self.dim))))

    def projectors(self) -> np.ndarray:
        v = self.vectors
        return np.einsum("ia,ja->aij", v, v.conj())


@dataclass(frozen=True)
class UnbiasednessReport:
    max_deviation: float
    tol: float
    offending_pair: tuple[int, int] | None

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tol


@dataclass
class MubSet:
    """An ordered list of bases in dimension ``dim`` plus construction metadata."""

    dim: int
    bases: list[Basis]
    metadata: dict = field(default_factory=dict)
    covariance_generators: "Covariance | None" = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.bases)

    def vectors(self) -> np.ndarray:
        return np.stack([b.vectors for b in self.bases])

    @cached_property
    def covariance(self) -> "Covariance | None":
        if self.covariance_generators is None:
            return None
        return self.covariance_generators.closure(self)

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "p": self.metadata.get("p"),
            "r": self.metadata.get("r"),
            "modulus": self.metadata.get("modulus"),
            "metadata": self.metadata,
            "bases": [
                [[{"re": float(z.real), "im": float(z.imag)} for z in vec] for vec in b.vectors.T]
                for b in self.bases
            ],
            "labels": [b.label for b in self.bases],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1)

    @classmethod
    def from_json(cls, data: dict | str, tol: float = UNBIASED_TOL) -> "MubSet":
        """Load an exported set; orthonormality and unbiasedness are re-verified."""
        if isinstance(data, str):
            data = json.loads(data)
        d = int(data["dim"])
        labels = data.get("labels") or [str(i) for i in range(len(data["bases"]))]
        bases = []
        for vecs, label in zip(data["bases"], labels):
            arr = np.array([[complex(z["re"], z["im"]) for z in vec] for vec in vecs]).T
            if arr.shape != (d, d):
                raise InvalidInputError(f"basis {label} has shape {arr.shape}, expected {(d, d)}")
            b = Basis(arr, label)
            if b.gram_deviation() > tol:
                raise InvalidInputError(f"basis {label} is not orthonormal")
            bases.append(b)
        m = cls(d, bases, dict(data.get("metadata") or {}))
        rep = verify_unbiased(m, tol)
        if not rep.passed:
            raise InvalidInputError(f"imported bases are not mutually unbiased (deviation {rep.max_deviation:.3e})")
        return m


def _check_budget(d: int, size_budget: int) -> None:
    if d > size_budget:
        raise BudgetExceededError(f"dimension {d} exceeds the size budget {size_budget}")


def _weyl_generators(field_: FiniteField, character) -> "Covariance":
    """Shift and phase operators of the additive group of the residue field.

    ``character[b, l]`` is the value of the additive character ``chi_b(l)``.
    """
    d = field_.size
    shifts = np.zeros((d, d, d), dtype=complex)
    for c in range(d):
        shifts[c, field_.add_table[:, c], np.arange(d)] = 1.0
    phases = np.array([np.diag(character[b]) for b in range(d)])
    return Covariance(unitaries=np.concatenate([phases, shifts]), perms=None, shape=(d, d))


def build_mub_odd(p: int, r: int, size_budget: int = DEFAULT_SIZE_BUDGET) -> MubSet:
    if p == 2:
        raise InvalidInputError("build_mub_odd needs an odd prime; use build_mub_even for p = 2")
    F = FiniteField(p, r, size_budget=size_budget)
    d = F.size
    omega = root_of_unity(p)
    powers = omega ** np.arange(p)
    idx = np.arange(d)
    sq = F.mul_table[idx, idx]
    bases = []
    for x in range(d):
        xl2 = F.mul_table[x, sq]  # x * l^2 for every l
        expo = F.trace_table[F.add_table[xl2[None, :], F.mul_table[:, idx]]]  # rows a, columns l
        vecs = powers[expo].T / math.sqrt(d)
        bases.append(Basis(vecs, f"x={x}"))
    bases.append(Basis(np.eye(d, dtype=complex), "computational"))
    character = powers[F.trace_table[F.mul_table]]
    meta = {"p": p, "r": r, "modulus": list(F.modulus_poly), "convention": "quadratic-phase/GF", **F.descriptor()}
    return MubSet(d, bases, meta, _weyl_generators(F, character))


def build_mub_even(r: int, size_budget: int = DEFAULT_SIZE_BUDGET) -> MubSet:
    R = GaloisRing(r, size_budget=size_budget)
    d = 2**r
    T = np.array([t.index for t in R.teichmuller])
    ipow = np.array([1, 1j, -1, -1j])
    two = R.element(2).index
    bases = []
    for x in T:
        x2a = R.add_table[x, R.mul_table[two, T]]  # x + 2a for every a
        expo = R.trace_table[R.mul_table[x2a[:, None], T[None, :]]]  # rows a, columns l
        vecs = ipow[expo].T / math.sqrt(d)
        bases.append(Basis(vecs, f"x=T[{len(bases)}]"))
    bases.append(Basis(np.eye(d, dtype=complex), "computational"))
    F = R.residue_field
    character = np.where(F.trace_table[F.mul_table] % 2 == 0, 1.0, -1.0).astype(complex)
    meta = {"p": 2, "r": r, "modulus": list(R.modulus_poly), "convention": "teichmuller/GR(4,r)", **R.descriptor()}
    return MubSet(d, bases, meta, _weyl_generators(F, character))


def build_mub(d: int, size_budget: int = DEFAULT_SIZE_BUDGET) -> MubSet:
    """Complete set of ``d + 1`` MUB for a prime power ``d``."""
    pr = prime_power(d)
    if pr is None:
        raise InvalidInputError(
            f"dimension {d} is not a prime power; complete sets of MUB are only constructed for d = p^r"
        )
    _check_budget(d, size_budget)
    p, r = pr
    return build_mub_even(r, size_budget) if p == 2 else build_mub_odd(p, r, size_budget)


def pauli_triple() -> MubSet:
    """Eigenbases of Z, X and Y, in that order."""
    s = 1 / math.sqrt(2)
    z = np.eye(2, dtype=complex)
    x = np.array([[1, 1], [1, -1]], dtype=complex) * s
    y = np.array([[1, 1], [1j, -1j]], dtype=complex) * s
    F = FiniteField(2, 1)
    character = np.array([[1, 1], [1, -1]], dtype=complex)
    meta = {"p": 2, "r": 1, "modulus": list(F.modulus_poly), "convention": "pauli"}
    return MubSet(2, [Basis(z, "Z"), Basis(x, "X"), Basis(y, "Y")], meta, _weyl_generators(F, character))


def tensor_mub(first: MubSet, second: MubSet, pairs: Sequence[tuple[int, int]]) -> MubSet:
    """Product bases ``B_i (x) C_j`` for the given index pairs.

    Products of pairwise-unbiased bases are unbiased whenever both factors
    change between any two chosen pairs, which covers the usual ``min(d1, d2) + 1``
    bases in composite dimension.
    """
    d = first.dim * second.dim
    bases = [
        Basis(np.kron(first.bases[i].vectors, second.bases[j].vectors), f"{first.bases[i].label}(x){second.bases[j].label}")
        for i, j in pairs
    ]
    meta = {"convention": "tensor", "factors": [first.metadata, second.metadata], "pairs": [list(p) for p in pairs]}
    gens = None
    if first.covariance_generators is not None and second.covariance_generators is not None:
        u1 = first.covariance_generators.unitaries
        u2 = second.covariance_generators.unitaries
        eye1, eye2 = np.eye(first.dim), np.eye(second.dim)
        units = [np.kron(u, eye2) for u in u1] + [np.kron(eye1, u) for u in u2]
        gens = Covariance(np.array(units), None, shape=None, factors=(first.covariance_generators, second.covariance_generators))
    return MubSet(d, bases, meta, gens)


def product_mub(d: int, size_budget: int = DEFAULT_SIZE_BUDGET) -> MubSet:
    """Unbiased product bases in a dimension ``d = d1 d2`` with coprime prime-power factors.

    Pairs the i-th basis of both constructions, giving ``min(d1, d2) + 1``
    bases (three for d = 6).  Dimensions with more than two prime factors
    are rejected.
    """
    factors = _prime_power_factors(d)
    if len(factors) != 2:
        raise InvalidInputError(f"product construction needs exactly two coprime prime-power factors, got d={d}")
    first, second = (build_mub(f, size_budget) for f in factors)
    n = min(len(first.bases), len(second.bases))
    return tensor_mub(first, second, [(i, i) for i in range(n)])


def construct_mub(d: int, size_budget: int = DEFAULT_SIZE_BUDGET) -> MubSet:
    """Complete set for prime powers, product bases for two-factor composites."""
    return build_mub(d, size_budget) if prime_power(d) is not None else product_mub(d, size_budget)


def _prime_power_factors(d: int) -> list[int]:
    out, n, p = [], d, 2
    while p * p <= n:
        if n % p == 0:
            q = 1
            while n % p == 0:
                n //= p
                q *= p
            out.append(q)
        p += 1
    if n > 1:
        out.append(n)
    return out


def verify_unbiased(m: MubSet, tol: float = UNBIASED_TOL) -> UnbiasednessReport:
    target = 1 / math.sqrt(m.dim)
    worst, pair = 0.0, None
    vecs = m.vectors()
    for i in range(len(vecs)):
        for j in range(i + 1, len(vecs)):
            dev = float(np.max(np.abs(np.abs(vecs[i].conj().T @ vecs[j]) - target)))
            if dev > worst:
                worst, pair = dev, (i, j)
    return UnbiasednessReport(worst, tol, pair if worst > tol else None)


# -- covariance ---------------------------------------------------------------


@dataclass
class Covariance:
    """A finite unitary group permuting the outcomes of every measurement.

    ``unitaries[g] A_{a|x} unitaries[g]^dagger = A_{perms[g, x, a]|x}``.  Built
    for the standard constructions from the shift/phase operators of the
    residue field; every permutation is extracted numerically and verified.
    """

    unitaries: np.ndarray
    perms: np.ndarray | None
    shape: tuple[int, int] | None = None
    factors: tuple["Covariance", "Covariance"] | None = None

    @property
    def order(self) -> int:
        return self.unitaries.shape[0]

    def closure(self, m: MubSet) -> "Covariance":
        """Full group (all products phase_b * shift_c) with permutations of every basis of ``m``."""
        vecs = m.vectors()
        gen_perms = np.array([[_induced_permutation(u, v) for v in vecs] for u in self.unitaries])
        if self.factors is not None:
            n1 = self.factors[0].unitaries.shape[0]
            left, right = range(n1), range(n1, self.order)
            gen_groups = (self.factors[0].shape, self.factors[1].shape)
            # each factor group is generated as phase_b * shift_c; combine both factors
            g1 = _group_words(gen_groups[0], list(left))
            g2 = _group_words(gen_groups[1], list(right))
            words = [w1 + w2 for w1 in g1 for w2 in g2]
        else:
            words = _group_words(self.shape, list(range(self.order)))
        units, perms = [], []
        for word in words:
            u = np.eye(m.dim, dtype=complex)
            perm = np.tile(np.arange(m.dim), (len(vecs), 1))
            for g in reversed(word):  # rightmost factor acts first
                u = self.unitaries[g] @ u
                perm = np.take_along_axis(gen_perms[g], perm, axis=1)
            units.append(u)
            perms.append(perm)
        return Covariance(np.array(units), np.array(perms))

    def restrict(self, subset: Sequence[int]) -> "Covariance":
        return Covariance(self.unitaries, self.perms[:, list(subset), :])

    def verify(self, ops: np.ndarray, tol: float = 1e-9) -> float:
        """Max deviation of ``U A_{a|x} U^dagger`` from the permuted operator."""
        worst = 0.0
        for g in range(self.order):
            u = self.unitaries[g]
            moved = u @ ops @ u.conj().T
            target = np.take_along_axis(ops, self.perms[g][:, :, None, None], axis=1)
            worst = max(worst, float(np.max(np.abs(moved - target))))
        if worst > tol:
            raise NumericalError(f"covariance check failed (deviation {worst:.3e})")
        return worst

    def transitive_prefix(self, n_outcomes: Sequence[int], max_fixed: int = 2) -> int:
        """Largest f <= max_fixed such that the group acts transitively on the first f outcome labels."""
        best = 0
        for f in range(1, min(max_fixed, len(n_outcomes)) + 1):
            images = {tuple(self.perms[g, :f, 0]) for g in range(self.order)}
            if len(images) == int(np.prod(n_outcomes[:f])):
                best = f
            else:
                break
        return best


def _group_words(shape, gens: list[int]) -> list[list[int]]:
    """Words ``[phase_b, shift_c]`` enumerating the d^2 elements of a shift/phase group."""
    d = shape[0]
    phases, shifts = gens[:d], gens[d:]
    return [[phases[b], shifts[c]] for b in range(d) for c in range(d)]


def _induced_permutation(u: np.ndarray, basis: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    overlaps = np.abs(basis.conj().T @ (u @ basis))  # [a', a]
    perm = np.argmax(overlaps, axis=0)
    if np.max(np.abs(overlaps[perm, np.arange(len(perm))] - 1.0)) > tol or len(set(perm.tolist())) != len(perm):
        raise NumericalError("unitary does not permute the basis vectors")
    return perm


# -- measurement sets -----------------------------------------------------------


class MeasurementSet:
    """k POVMs in dimension d; ``operators[x][a]`` is the effect A_{a|x}.

    Parameters
    ----------
    operators : sequence of array_like
        One ``(n_x, d, d)`` stack per measurement.
    covariance : Covariance, optional
        Verified symmetry used to shrink tuple enumerations.
    tol : float
        PSD and completeness tolerance.
    """

    def __init__(self, operators, covariance: Covariance | None = None, tol: float = COMPLETENESS_TOL, labels=None):
        ops = [np.array(o, dtype=complex) for o in operators]
        if not ops:
            raise InvalidInputError("a measurement set needs at least one measurement")
        d = ops[0].shape[-1]
        for x, o in enumerate(ops):
            if o.ndim != 3 or o.shape[1:] != (d, d):
                raise InvalidInputError(f"measurement {x} has shape {o.shape}")
            if np.max(np.abs(o - o.conj().transpose(0, 2, 1))) > 1e-10:
                raise InvalidInputError(f"measurement {x} has non-Hermitian effects")
            o[:] = (o + o.conj().transpose(0, 2, 1)) / 2
            if np.min(np.linalg.eigvalsh(o)) < -PSD_TOL:
                raise InvalidInputError(f"measurement {x} has a non-positive effect")
            if np.max(np.abs(o.sum(axis=0) - np.eye(d))) > tol:
                raise InvalidInputError(f"measurement {x} does not sum to the identity")
        self.ops = ops
        self.dim = d
        self.covariance = covariance
        self.labels = list(labels) if labels is not None else [str(x) for x in range(len(ops))]

    @property
    def k(self) -> int:
        return len(self.ops)

    @property
    def outcome_counts(self) -> tuple[int, ...]:
        return tuple(o.shape[0] for o in self.ops)

    @property
    def n_tuples(self) -> int:
        return int(np.prod(self.outcome_counts, dtype=object))

    @property
    def uniform(self) -> bool:
        return len(set(self.outcome_counts)) == 1

    def stacked(self) -> np.ndarray:
        if not self.uniform:
            raise InvalidInputError("measurements have different numbers of outcomes")
        return np.stack(self.ops)

    def operator(self, a: int, x: int) -> HermitianOperator:
        return HermitianOperator(self.ops[x][a])

    @cached_property
    def traces(self) -> list[np.ndarray]:
        return [np.trace(o, axis1=1, axis2=2).real for o in self.ops]

    @cached_property
    def rank_one_projective(self) -> bool:
        for o in self.ops:
            if np.max(np.abs(o @ o - o)) > 1e-9 or np.max(np.abs(np.trace(o, axis1=1, axis2=2) - 1)) > 1e-9:
                return False
        return True

    @cached_property
    def unbiased_traces(self) -> bool:
        return all(np.allclose(t, t[0], atol=1e-12) for t in self.traces)

    def noisy(self, eta: float) -> "MeasurementSet":
        d = self.dim
        return MeasurementSet(
            [eta * o + (1 - eta) * t[:, None, None] * np.eye(d) / d for o, t in zip(self.ops, self.traces)],
            labels=self.labels,
        )

    def permuted(self, order: Sequence[int]) -> "MeasurementSet":
        cov = self.covariance.restrict(order) if self.covariance is not None else None
        return MeasurementSet([self.ops[i] for i in order], cov, labels=[self.labels[i] for i in order])

    def __repr__(self) -> str:
        return f"MeasurementSet(k={self.k}, d={self.dim}, outcomes={self.outcome_counts})"


def to_measurements(m: MubSet, subset: Sequence[int] | None = None, with_symmetry: bool = True) -> MeasurementSet:
    """Rank-one projective measurements onto the chosen bases (all of them by default)."""
    if subset is None:
        subset = range(len(m.bases))
    subset = [int(i) for i in subset]
    if len(set(subset)) != len(subset):
        raise InvalidInputError(f"duplicate basis indices in {subset}")
    if any(i < 0 or i >= len(m.bases) for i in subset):
        raise InvalidInputError(f"basis index out of range in {subset} (set has {len(m.bases)} bases)")
    ops = [m.bases[i].projectors() for i in subset]
    cov = None
    if with_symmetry and m.covariance_generators is not None:
        cov = m.covariance.restrict(subset)
    return MeasurementSet(ops, cov, tol=1e-10, labels=[m.bases[i].label for i in subset])


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))
