"""Upper and lower bounds on the white-noise robustness of a measurement set.

The upper bounds all go through

    lambda = max_j || sum_x A_{j_x|x} ||,

the largest operator norm over outcome tuples.  The lower bound comes from an
explicit parent measurement whose robustness obeys a one-parameter-per-step
recursion.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .errors import BudgetExceededError, InvalidInputError, NumericalError, ZeroDenominatorError
from .linalg import batched_max_eig, real_poly_roots
from .mub import MeasurementSet
from .tuples import iter_blocks

TIE_TOL = 1e-8
TUPLE_BUDGET = 10**7
ALPHA_BRACKET = (0.0, 10.0)
GOLDEN_TOL = 1e-12


@dataclass
class LambdaResult:
    """Outcome of the tuple scan.

    ``method`` is ``"exhaustive"``, ``"symmetry-reduced"`` (only tuples whose
    first ``fixed`` indices are 0 were scanned; valid because a verified
    symmetry group maps every tuple onto such a representative) or
    ``"budget-truncated"`` (``lam`` is then only a lower bound on lambda).
    """

    lam: float
    argmax_tuples: np.ndarray
    tuples_scanned: int
    method: str
    fixed: int = 0
    tie_tol: float = TIE_TOL

    @property
    def complete(self) -> bool:
        return self.method != "budget-truncated"


def compute_lambda(
    m: MeasurementSet,
    tie_tol: float = TIE_TOL,
    budget: int = TUPLE_BUDGET,
    symmetry: bool = True,
    truncate: bool = False,
    max_ties: int = 1 << 20,
) -> LambdaResult:
    """Maximise ``||S_j||`` over all outcome tuples.

    Parameters
    ----------
    m : MeasurementSet
    tie_tol : float
        Tuples within this distance of the maximum are reported as maximisers.
    budget : int
        Maximum number of tuples to diagonalise.
    symmetry : bool
        Use ``m.covariance`` (when present) to pin leading indices to 0.  The
        group action is re-verified on ``m`` before it is relied upon.
    truncate : bool
        Scan the first ``budget`` tuples instead of raising when over budget.

    Raises
    ------
    BudgetExceededError
        The (reduced) tuple count exceeds ``budget`` and ``truncate`` is off.
    """
    if tie_tol <= 0:
        raise InvalidInputError("tie_tol must be positive")
    fixed = 0
    if symmetry and m.covariance is not None and m.covariance.perms is not None:
        m.covariance.verify(_padded_stack(m))
        fixed = m.covariance.transitive_prefix(m.outcome_counts)
    counts = m.outcome_counts
    total = int(np.prod(counts[fixed:], dtype=object))
    limit = None
    method = "symmetry-reduced" if fixed else "exhaustive"
    if total > budget:
        if not truncate:
            raise BudgetExceededError(
                f"{total} tuples to scan exceeds the budget of {budget}; reduce k or raise the budget"
            )
        limit, method = budget, "budget-truncated"
    best = -np.inf
    cand: list[tuple[np.ndarray, np.ndarray]] = []  # (tuples, norms) near the running maximum
    n_cand = 0
    scanned = 0
    for blk in iter_blocks(m.ops, fixed=fixed, limit=limit):
        vals = batched_max_eig(blk.sums)
        scanned += len(vals)
        top = float(vals.max())
        if top > best:
            best = top
            cand = [(t[v >= best - tie_tol], v[v >= best - tie_tol]) for t, v in cand]
            n_cand = sum(len(v) for _, v in cand)
        rows = np.nonzero(vals >= best - tie_tol)[0]
        if len(rows):
            cand.append((blk.tuples(counts[len(counts) - blk.tail_axes:], rows), vals[rows]))
            n_cand += len(rows)
            if n_cand > max_ties:
                raise BudgetExceededError(f"more than {max_ties} maximising tuples")
    keep = [t[v >= best - tie_tol] for t, v in cand]
    argmax = np.concatenate(keep) if keep else np.zeros((0, m.k), dtype=int)
    return LambdaResult(best, argmax, scanned, method, fixed, tie_tol)


def _padded_stack(m: MeasurementSet):
    if not m.uniform:
        raise InvalidInputError("symmetry reduction needs the same number of outcomes per measurement")
    return m.stacked()


# -- reports -------------------------------------------------------------------


@dataclass
class BoundReport:
    kind: str
    value: float
    d: int
    k: int
    lam: float | None = None
    alphas: list[float] | None = None
    tuples_scanned: int | None = None
    certifying: bool = True
    tolerances: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["lambda"] = out.pop("lam")
        return {key: val for key, val in out.items() if val is not None}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _lambda_report(kind, value, m: MeasurementSet, lr: LambdaResult, **extra) -> BoundReport:
    return BoundReport(
        kind=kind,
        value=float(value),
        d=m.dim,
        k=m.k,
        lam=lr.lam,
        tuples_scanned=lr.tuples_scanned,
        certifying=lr.complete,
        tolerances={"tie_tol": lr.tie_tol},
        extra={"lambda_method": lr.method, **extra},
    )


def noise_weights(m: MeasurementSet) -> tuple[float, float]:
    """The two trace sums of the general bound: ``sum (trA/d)^2`` and ``sum (trA^2/d - (trA/d)^2)``."""
    d = m.dim
    shift = sum(float(np.sum((t / d) ** 2)) for t in m.traces)
    sq = sum(float(np.einsum("aij,aji->", o, o).real) for o in m.ops)
    return shift, sq / d - shift


def eta_up_general(m: MeasurementSet, lam: LambdaResult | None = None, **kw) -> BoundReport:
    """Upper bound from the dual ansatz, valid for arbitrary POVMs.

    Raises
    ------
    ZeroDenominatorError
        All effects are proportional to the identity.
    """
    shift, denom = noise_weights(m)
    if denom <= 1e-12:
        raise ZeroDenominatorError("every effect is proportional to the identity; the bound is undefined")
    lr = lam if lam is not None else compute_lambda(m, **kw)
    return _lambda_report("upper_general", (lr.lam - shift) / denom, m, lr)


def eta_up_rank1(m: MeasurementSet, lam: LambdaResult | None = None, **kw) -> BoundReport:
    """``(lambda - k/d) / (k - k/d)`` for rank-one projective measurements."""
    if not m.rank_one_projective:
        raise InvalidInputError("eta_up_rank1 needs rank-one projective measurements")
    k, d = m.k, m.dim
    lr = lam if lam is not None else compute_lambda(m, **kw)
    return _lambda_report("upper_rank1", (lr.lam - k / d) / (k - k / d), m, lr)


def eta_up_simple(k: int, d: int) -> BoundReport:
    """``(sqrt(d)/k + 1) / (sqrt(d) + 1)``, from ``lambda <= 1 + (k-1)/sqrt(d)``."""
    if k < 1 or d < 2:
        raise InvalidInputError("need k >= 1 and d >= 2")
    s = math.sqrt(d)
    return BoundReport("upper_simple", (s / k + 1) / (s + 1), d, k, lam=1 + (k - 1) / s)


# -- characteristic polynomial bound -----------------------------------------------


def power_sums_closed_form(
    k: int, d: int, sigma3: float, sigma4: float, published: bool = False
) -> tuple[float, float, float, float]:
    """``tr S^n`` for n = 1..4 when S is a sum of k rank-one projectors from distinct MUB.

    In ``tr S^4`` the closed walks a->b->a->c (three distinct labels) add
    ``2 k(k-1)(k-2)/d^2`` on top of the two-label walks.  ``published=True``
    instead uses ``k (k-1)^2 / d^2`` for those terms together, which drops
    ``k(k-1)(k-2)/d^2`` and is kept only to reproduce numbers derived from it.
    """
    r = (k - 1) / d
    if published:
        quartic = k * r * r
    else:
        quartic = k * (k - 1) * (2 * k - 3) / d**2
    return (
        float(k),
        k * (r + 1),
        k * (3 * r + 1) + sigma3,
        k * (6 * r + 1) + quartic + 4 * sigma3 + sigma4,
    )


def newton_elementary(p: Sequence[float]) -> list[float]:
    """Elementary symmetric functions e_1..e_n from power sums p_1..p_n."""
    e = [1.0]
    for n in range(1, len(p) + 1):
        acc = sum((-1) ** (i - 1) * e[n - i] * p[i - 1] for i in range(1, n + 1))
        e.append(acc / n)
    return e[1:]


def charpoly_quartic(k: int, d: int, sigma3: float, sigma4: float, published: bool = False) -> np.ndarray:
    """Coefficients (highest first) of ``X^4 - e1 X^3 + e2 X^2 - e3 X + e4``.

    For d >= k = 4 the four nonzero eigenvalues of S are exactly its roots.
    """
    e1, e2, e3, e4 = newton_elementary(power_sums_closed_form(k, d, sigma3, sigma4, published))
    return np.array([1.0, -e1, e2, -e3, e4])


def eta_up_charpoly_k4(d: int, k: int = 4, traces: str = "exact") -> BoundReport:
    """Bound lambda for four MUB without enumeration.

    The overlap products ``sigma3`` and ``sigma4`` are replaced by their
    largest possible moduli (24 d^{-3/2} and 24 d^{-2}); the largest root
    grows with both, so the largest root of the resulting quartic bounds
    every ``||S_j||``.

    With ``traces="exact"`` the quartic is built from the true power sums;
    at these extreme overlaps its largest root is ``1 + 3/sqrt(d)``, so the
    bound coincides with the simple one.  ``traces="published"``
    uses the shortened ``tr S^4`` (see :func:`power_sums_closed_form`); the
    result is not a valid bound (it falls below a certified value at d = 7)
    and is reported with ``certifying=False``.
    """
    if k != 4:
        raise InvalidInputError("the characteristic-polynomial bound is implemented for k = 4")
    if d < 5:
        raise InvalidInputError("the characteristic-polynomial bound needs d >= 5")
    if traces not in ("exact", "published"):
        raise InvalidInputError(f"traces must be 'exact' or 'published', got {traces!r}")
    published = traces == "published"
    s3 = k * (k - 1) * (k - 2) / d**1.5
    s4 = k * (k - 1) * (k - 2) * (k - 3) / d**2
    coeffs = charpoly_quartic(k, d, s3, s4, published)
    roots = real_poly_roots(coeffs)
    if roots.size == 0:
        raise NumericalError("the quartic has no real root")
    lam = float(roots[-1])
    value = (lam - k / d) / (k - k / d)
    return BoundReport(
        "upper_charpoly_k4",
        value,
        d,
        k,
        lam=lam,
        certifying=not published,
        extra={"sigma3": s3, "sigma4": s4, "quartic": coeffs.tolist(), "traces": traces},
    )


@dataclass(frozen=True)
class NewtonTraces:
    traces: tuple[float, float, float, float]
    sigma3: complex
    sigma4: complex

    def closed_form_residual(self, k: int, d: int) -> float:
        expect = power_sums_closed_form(k, d, self.sigma3.real, self.sigma4.real)
        return max(abs(a - b) for a, b in zip(self.traces, expect))


def _distinct_mask(k: int, order: int) -> np.ndarray:
    mask = np.zeros((k,) * order)
    for idx in itertools.permutations(range(k), order):
        mask[idx] = 1.0
    return mask


def newton_traces(m: MeasurementSet, j: Sequence[int]) -> NewtonTraces:
    """Power traces of S_j and the overlap products over pairwise distinct indices.

    ``sigma3 = sum <a|b><b|c><c|a>`` and ``sigma4 = sum <a|b><b|c><c|e><e|a>``
    with a, b, c, e ranging over distinct measurements.
    """
    if not m.rank_one_projective:
        raise InvalidInputError("newton_traces needs rank-one projective measurements")
    if len(j) != m.k:
        raise InvalidInputError(f"tuple has length {len(j)}, expected {m.k}")
    projs = [m.ops[x][int(a)] for x, a in enumerate(j)]
    vecs = []
    for p in projs:
        col = int(np.argmax(np.linalg.norm(p, axis=0)))
        v = p[:, col]
        vecs.append(v / np.linalg.norm(v))
    v = np.array(vecs)
    gram = v.conj() @ v.T  # gram[a, b] = <a|b>
    s = sum(projs)
    powers, cur = [], np.eye(m.dim, dtype=complex)
    for _ in range(4):
        cur = cur @ s
        powers.append(float(np.trace(cur).real))
    k = m.k
    s3 = np.einsum("ab,bc,ca,abc->", gram, gram, gram, _distinct_mask(k, 3)) if k >= 3 else 0j
    s4 = np.einsum("ab,bc,ce,ea,abce->", gram, gram, gram, gram, _distinct_mask(k, 4)) if k >= 4 else 0j
    return NewtonTraces(tuple(powers), complex(s3), complex(s4))


# -- recursive lower bound ---------------------------------------------------------


def _stage_coeffs(i: int, d: int, eta_prev: float):
    sd = math.sqrt(d)
    num = (d * (i - 1) * eta_prev, 2 * sd * ((i - 1) * eta_prev + 1), float(d))
    den = (i * float(d), i * 2 * sd, i * float(d))
    return num, den


def stage_value(i: int, d: int, eta_prev: float, alpha: float) -> float:
    """eta_i as a function of alpha_i given eta_{i-1}."""
    sd = math.sqrt(d)
    return ((2 * alpha * sd + d) * (i - 1) * eta_prev + (2 * alpha * sd + alpha * alpha * d)) / (
        i * (2 * alpha * sd + (alpha * alpha + 1) * d)
    )


def golden_max(f, lo: float, hi: float, tol: float = GOLDEN_TOL, max_iter: int = 200) -> float:
    """Golden-section search for the maximiser of a unimodal function on [lo, hi]."""
    g = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, e = b - g * (b - a), a + g * (b - a)
    fc, fe = f(c), f(e)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc >= fe:
            b, e, fe = e, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, e, fe
            e = a + g * (b - a)
            fe = f(e)
    return (a + b) / 2


def optimal_alpha(i: int, d: int, eta_prev: float) -> float:
    """Best alpha_i for one stage.

    Golden-section search on the bracket locates the maximum; since function
    values are flat there, the estimate is then polished with Newton steps on
    the numerator of the derivative, a quadratic in alpha.
    """
    lo, hi = ALPHA_BRACKET
    alpha = golden_max(lambda a: stage_value(i, d, eta_prev, a), lo, hi)
    (n0, n1, n2), (d0, d1, d2) = _stage_coeffs(i, d, eta_prev)
    q = (n2 * d1 - n1 * d2, 2 * (n2 * d0 - n0 * d2), n1 * d0 - n0 * d1)  # highest first
    for _ in range(20):
        gval = (q[0] * alpha + q[1]) * alpha + q[2]
        slope = 2 * q[0] * alpha + q[1]
        if slope == 0:
            break
        step = gval / slope
        alpha -= step
        if abs(step) <= 1e-16 * max(1.0, abs(alpha)):
            break
    return alpha


def eta_low_sequence(k: int, d: int) -> tuple[list[float], list[float]]:
    """Stage-wise optimal ``alphas`` (alpha_2..alpha_k) and ``etas`` (eta_1..eta_k)."""
    etas, alphas = [1.0], []
    for i in range(2, k + 1):
        a = optimal_alpha(i, d, etas[-1])
        alphas.append(a)
        etas.append(stage_value(i, d, etas[-1], a))
    return alphas, etas


def eta_low_value(d: int, alphas: Sequence[float]) -> float:
    """The recursion evaluated at given alpha_2..alpha_k."""
    eta = 1.0
    for i, a in enumerate(alphas, start=2):
        eta = stage_value(i, d, eta, a)
    return eta


def eta_low_recursive(k: int, d: int) -> BoundReport:
    """Lower bound for k MUB in dimension d from the explicit parent construction."""
    if k < 1 or d < 2:
        raise InvalidInputError("need k >= 1 and d >= 2")
    alphas, etas = eta_low_sequence(k, d)
    return BoundReport(
        "lower_recursive",
        etas[-1],
        d,
        k,
        alphas=alphas,
        tolerances={"golden_tol": GOLDEN_TOL},
        extra={"alpha_bracket": list(ALPHA_BRACKET), "stages": etas},
    )
