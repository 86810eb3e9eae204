"""Subset scans, qubit closed forms and the steering correspondence."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from .bounds import eta_up_rank1
from .errors import BudgetExceededError, InvalidInputError
from .jointmeas import RobustnessOptions, robustness
from .mub import MeasurementSet, MubSet, build_mub, to_measurements

GROUP_TOL = 1e-6
SENSITIVITY_TOLS = (1e-5, 1e-7)
SCAN_BUDGET = 10**8

PAULI = np.array(
    [[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]],
    dtype=complex,
)


# -- subset scans -------------------------------------------------------------------


@dataclass
class SubsetRecord:
    indices: tuple[int, ...]
    eta_up: float
    eta_star: float | None = None
    method: str | None = None
    cluster_id: int = -1


@dataclass
class SubsetScan:
    d: int
    k: int
    group_tol: float
    records: list[SubsetRecord]
    complete: bool = True
    sensitivity: dict = field(default_factory=dict)

    @property
    def distinct(self) -> int:
        return len({r.cluster_id for r in self.records})

    def cluster_values(self) -> list[float]:
        """Smallest eta_up of every cluster, in increasing order."""
        out: dict[int, float] = {}
        for r in self.records:
            out[r.cluster_id] = min(out.get(r.cluster_id, math.inf), r.eta_up)
        return [out[c] for c in sorted(out)]

    def representatives(self) -> list[SubsetRecord]:
        """First subset (in enumeration order) of every cluster."""
        seen: dict[int, SubsetRecord] = {}
        for r in self.records:
            seen.setdefault(r.cluster_id, r)
        return [seen[c] for c in sorted(seen)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["indices", "eta_up", "eta_star", "cluster_id"])
        for r in self.records:
            star = "" if r.eta_star is None else f"{r.eta_star:.12g}"
            w.writerow([" ".join(map(str, r.indices)), f"{r.eta_up:.12g}", star, r.cluster_id])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "d": self.d,
            "k": self.k,
            "distinct": self.distinct,
            "group_tol": self.group_tol,
            "complete": self.complete,
            "sensitivity": self.sensitivity,
            "values": self.cluster_values(),
            "subsets": len(self.records),
        }


def cluster_labels(values: Sequence[float], tol: float) -> list[int]:
    """Single-linkage clusters of sorted values: a gap larger than ``tol`` starts a new cluster."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    labels = [0] * len(values)
    cid, prev = -1, None
    for i in order:
        if prev is None or values[i] - prev > tol:
            cid += 1
        labels[i] = cid
        prev = values[i]
    return labels


def _eta_up_for(args) -> float:
    mubs, subset = args
    return eta_up_rank1(to_measurements(mubs, subset)).value


def scan_cost(d: int, k: int, fixed: int = 0) -> int:
    """Eigenproblems needed to scan every k-subset, with ``fixed`` leading outcomes pinned by symmetry."""
    return math.comb(d + 1, k) * d ** (k - min(fixed, k))


def scan_subsets(
    d: int,
    k: int,
    compute_exact: bool = False,
    group_tol: float = GROUP_TOL,
    budget: int = SCAN_BUDGET,
    mubs: MubSet | None = None,
    jobs: int = 1,
    options: RobustnessOptions | None = None,
    reduced: bool = False,
) -> SubsetScan:
    """eta_up (and optionally eta*) for every k-subset of the d+1 constructed bases.

    Raises
    ------
    BudgetExceededError
        ``C(d+1, k) d^k`` exceeds ``budget``.  With ``reduced`` the count
        credits the two outcome labels fixed by the covariance group,
        ``C(d+1, k) d^(k-2)``, which is what the enumeration actually visits.
    """
    if group_tol <= 0:
        raise InvalidInputError("group_tol must be positive")
    if not 1 <= k <= d + 1:
        raise InvalidInputError(f"k must lie in 1..{d + 1}")
    mubs = mubs if mubs is not None else build_mub(d)
    cost = scan_cost(d, k, 2 if reduced and mubs.covariance_generators is not None else 0)
    if cost > budget:
        raise BudgetExceededError(f"scan of d={d}, k={k} needs {cost} eigenproblems (budget {budget})")
    subsets = list(combinations(range(len(mubs.bases)), k))
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            values = list(pool.map(_eta_up_for, [(mubs, s) for s in subsets], chunksize=8))
    else:
        values = [_eta_up_for((mubs, s)) for s in subsets]
    labels = cluster_labels(values, group_tol)
    records = [SubsetRecord(s, v, cluster_id=c) for s, v, c in zip(subsets, values, labels)]
    scan = SubsetScan(d, k, group_tol, records)
    scan.sensitivity = {f"{t:g}": len(set(cluster_labels(values, t))) for t in SENSITIVITY_TOLS}
    if compute_exact:
        opts = options or RobustnessOptions()
        exact: dict[int, tuple[float | None, str]] = {}
        for rep in scan.representatives():
            rep_report = robustness(to_measurements(mubs, rep.indices), opts)
            exact[rep.cluster_id] = (rep_report.eta, rep_report.method)
        for r in records:
            r.eta_star, r.method = exact[r.cluster_id]
    return scan


# -- qubits --------------------------------------------------------------------------


def _bloch(v) -> np.ndarray:
    a = np.asarray(v, dtype=float)
    if a.shape[-1] != 3:
        raise InvalidInputError("Bloch vectors have three components")
    if np.any(np.linalg.norm(a, axis=-1) > 1 + 1e-12):
        raise InvalidInputError("Bloch vectors must have norm at most 1")
    if np.any(np.linalg.norm(a, axis=-1) == 0):
        raise InvalidInputError("Bloch vectors must be nonzero")
    return a


def qubit_eta2(a1, a2) -> float | np.ndarray:
    """``2 / (|a1 + a2| + |a1 - a2|)``; broadcasts over leading axes."""
    a1, a2 = _bloch(a1), _bloch(a2)
    return 2 / (np.linalg.norm(a1 + a2, axis=-1) + np.linalg.norm(a1 - a2, axis=-1))


def _triple_norms(a1, a2, a3):
    return (
        np.linalg.norm(a1 + a2 + a3, axis=-1),
        np.linalg.norm(a1 - a2 - a3, axis=-1),
        np.linalg.norm(a2 - a1 - a3, axis=-1),
        np.linalg.norm(a3 - a1 - a2, axis=-1),
    )


def qubit_eta3(a1, a2, a3) -> float | np.ndarray:
    """``4 / sum`` of the four norms ``|a1+a2+a3|``, ``|a1-a2-a3|``, ``|a2-a1-a3|``, ``|a3-a1-a2|``.

    This is the largest noise level at which the explicit triple parent stays
    positive, hence a lower bound on the true robustness. It is exact for
    orthonormal triples but not in general: three equal unit vectors give 2/3
    although identical measurements are compatible at any noise level.
    """
    a1, a2, a3 = _bloch(a1), _bloch(a2), _bloch(a3)
    return 4 / sum(_triple_norms(a1, a2, a3))


def _dot_sigma(v: np.ndarray) -> np.ndarray:
    return np.einsum("i,ijk->jk", v, PAULI)


def qubit_parent(vectors, eta: float) -> dict[tuple[int, ...], np.ndarray]:
    """Explicit parent elements for two or three noisy unbiased qubit POVMs, keyed by signs."""
    vecs = [_bloch(v) for v in vectors]
    eye = np.eye(2, dtype=complex)
    out = {}
    if len(vecs) == 2:
        a1, a2 = vecs
        z = 1 - eta * np.linalg.norm(a1 - a2)
        for m1 in (1, -1):
            for m2 in (1, -1):
                out[(m1, m2)] = ((1 + m1 * m2 * z) * eye + eta * _dot_sigma(m1 * a1 + m2 * a2)) / 4
        return out
    if len(vecs) == 3:
        a1, a2, a3 = vecs
        _, n1, n2, n3 = _triple_norms(a1, a2, a3)
        z1 = 1 - eta * (n2 + n3) / 2
        z2 = 1 - eta * (n1 + n3) / 2
        z3 = 1 - eta * (n1 + n2) / 2
        for m1 in (1, -1):
            for m2 in (1, -1):
                for m3 in (1, -1):
                    scal = 1 + m2 * m3 * z1 + m3 * m1 * z2 + m1 * m2 * z3
                    out[(m1, m2, m3)] = (scal * eye + eta * _dot_sigma(m1 * a1 + m2 * a2 + m3 * a3)) / 8
        return out
    raise InvalidInputError("qubit parents are defined for two or three measurements")


def qubit_parent_positivity(vectors, eta: float, tol: float = 1e-10) -> bool:
    """Whether every explicit parent element is PSD (within ``tol``)."""
    elems = np.array(list(qubit_parent(vectors, eta).values()))
    return bool(np.linalg.eigvalsh(elems).min() >= -tol)


def qubit_measurements(vectors, eta: float = 1.0) -> MeasurementSet:
    """Two-outcome POVMs ``(1 +- eta a.sigma)/2``."""
    ops = []
    for v in vectors:
        s = _dot_sigma(_bloch(v))
        ops.append(np.array([(np.eye(2) + eta * s) / 2, (np.eye(2) - eta * s) / 2]))
    return MeasurementSet(ops)


def random_unit_vectors(n: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


# -- steering ------------------------------------------------------------------------


@dataclass
class Assemblage:
    """Conditional states ``sigma[x][a]`` prepared on Bob's side."""

    sigma: list[np.ndarray]

    def no_signalling_deviation(self) -> float:
        marg = [s.sum(axis=0) for s in self.sigma]
        return max(float(np.max(np.abs(mm - marg[0]))) for mm in marg)

    def min_eigenvalue(self) -> float:
        return min(float(np.linalg.eigvalsh(s).min()) for s in self.sigma)


def _pure_state(psi, d: int) -> np.ndarray:
    v = np.asarray(psi, dtype=complex).reshape(-1)
    if v.size != d * d:
        raise InvalidInputError(f"state has {v.size} amplitudes, expected {d * d}")
    n = np.linalg.norm(v)
    if abs(n - 1) > 1e-10:
        raise InvalidInputError("state must be normalised")
    return v


def assemblage(rho: np.ndarray, m: MeasurementSet) -> Assemblage:
    """``sigma_{a|x} = tr_A[(A_{a|x} x 1) rho]``."""
    d = m.dim
    r = rho.reshape(d, d, d, d)  # [i, j, k, l] = <i j| rho |k l>
    return Assemblage([np.einsum("aki,ijkl->ajl", o, r) for o in m.ops])


def noisy_state(psi, d: int, w: float) -> np.ndarray:
    """``w |psi><psi| + (1 - w) 1/d x tr_A |psi><psi|``."""
    v = _pure_state(psi, d)
    rho = np.outer(v, v.conj())
    bob = np.einsum("ijil->jl", rho.reshape(d, d, d, d))
    return w * rho + (1 - w) * np.kron(np.eye(d) / d, bob)


def steering_identity_check(psi, m: MeasurementSet, eta: float) -> float:
    """Max entrywise difference between the two assemblages.

    Noisy measurements on the pure state against noiseless measurements on
    the noisy state.
    """
    d = m.dim
    v = _pure_state(psi, d)
    rho = np.outer(v, v.conj())
    left = assemblage(rho, m.noisy(eta))
    right = assemblage(noisy_state(v, d, eta), m)
    return max(float(np.max(np.abs(a - b))) for a, b in zip(left.sigma, right.sigma))


def maximally_entangled(d: int) -> np.ndarray:
    return np.eye(d, dtype=complex).reshape(-1) / math.sqrt(d)


@dataclass
class SteeringReport:
    d: int
    k: int
    w_star: float | None
    method: str
    lower: float
    upper: float | None
    subset: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "k": self.k,
            "w_star": self.w_star,
            "method": self.method,
            "lower": self.lower,
            "upper": self.upper,
            "subset": list(self.subset),
            "statement": (
                "noisy state steerable with these measurements iff w > w_star"
                if self.w_star is not None
                else "only bounds available"
            ),
        }


def steering_bound(d: int, k: int, subset: Sequence[int] | None = None, options=None) -> SteeringReport:
    """Critical visibility of the noisy state for k constructed bases, equal to their robustness."""
    mubs = build_mub(d)
    subset = tuple(range(k)) if subset is None else tuple(subset)
    if len(subset) != k:
        raise InvalidInputError("subset size must equal k")
    rep = robustness(to_measurements(mubs, subset), options)
    return SteeringReport(d, k, rep.eta, rep.method, rep.lower, rep.upper, subset)
