"""Exact white-noise robustness and parent measurements.

The robustness ``eta*`` of ``{A_{a|x}}`` is the largest eta for which the
noisy effects ``eta A + (1 - eta) tr(A) 1/d`` are marginals of one parent
POVM ``{G_j}`` indexed by outcome tuples.  It is computed either by the
interior-point solver in :mod:`mubrobust.sdp`, or certified in closed form by
a guessed parent whose marginals meet the upper bound of
:mod:`mubrobust.bounds` exactly.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bounds import (
    LambdaResult,
    TIE_TOL,
    TUPLE_BUDGET,
    compute_lambda,
    eta_low_recursive,
    eta_up_general,
    noise_weights,
)
from .errors import BudgetExceededError, InvalidInputError, MubError, NotAParentError, ZeroDenominatorError
from .linalg import batched_eigvalsh, batched_max_eig, batched_top_projectors, dagger
from .mub import MeasurementSet
from .sdp import GAP_TOL, LinearMap, SdpProblem, SdpSolution, herm_coords, herm_from_coords, hermitian_basis, solve_sdp
from .tuples import iter_blocks, orbit_tuples, partial_sums

SDP_BLOCK_BUDGET = 4096
MARGINAL_TOL = 1e-7
SEQUENCE_TOL_LARGE_N = 1e-6
NORMALISATION_TOL = 1e-6
UNBIASED_TOL = 1e-9


# -- the robustness SDP ------------------------------------------------------------


class RobustnessMap(LinearMap):
    """Constraint map of the robustness SDP.

    Primal blocks are the parent elements G_j (one d x d block per tuple) and
    one scalar ``z``; the multipliers are Hermitian coordinates of the dual
    operators X_{a|x}.  Because every measurement sums to the identity, the
    last effect of measurements 2..k carries no information and is dropped.
    """

    def __init__(self, m: MeasurementSet):
        self.d = d = m.dim
        self.counts = m.outcome_counts
        self.k = len(self.counts)
        self.kept = [(x, a) for x in range(self.k) for a in range(self.counts[x] if x == 0 else self.counts[x] - 1)]
        self.n2 = d * d
        self.m = len(self.kept) * self.n2
        self.shapes = [(m.n_tuples, d), (1, 1)]
        self.basis = hermitian_basis(d).reshape(self.n2, self.n2)  # rows: E_p flattened
        shifted = [o - (t / d)[:, None, None] * np.eye(d) for o, t in zip(m.ops, m.traces)]
        self.f = np.concatenate([herm_coords(shifted[x][a]) for x, a in self.kept])
        self.target = np.concatenate([herm_coords(m.ops[x][a]) for x, a in self.kept])
        self._offsets = {}
        for i, (x, a) in enumerate(self.kept):
            self._offsets.setdefault(x, []).append(i)

    def marginals(self, g: np.ndarray) -> list[np.ndarray]:
        t = g.reshape(self.counts + (self.d, self.d))
        out = []
        for x in range(self.k):
            axes = tuple(i for i in range(self.k) if i != x)
            out.append(t.sum(axis=axes) if axes else t)
        return out

    def apply(self, z):
        marg = self.marginals(z[0])
        coords = np.concatenate([herm_coords(marg[x][a]) for x, a in self.kept])
        return coords + z[1][0, 0, 0].real * self.f

    def dual_operators(self, y: np.ndarray) -> list[np.ndarray]:
        d = self.d
        xs = [np.zeros((n, d, d), dtype=complex) for n in self.counts]
        mats = herm_from_coords(y.reshape(len(self.kept), self.n2), d)
        for i, (x, a) in enumerate(self.kept):
            xs[x][a] = mats[i]
        return xs

    def adjoint(self, y):
        sums = partial_sums(self.dual_operators(y))
        return [sums, np.array([[[float(self.f @ y)]]], dtype=complex)]

    def _block_kernels(self, w: np.ndarray, chunk: int = 512) -> np.ndarray:
        """``K_j[p, q] = tr(E_p W_j E_q W_j)`` for every tuple block."""
        n2 = self.n2
        e = self.basis
        out = np.empty((w.shape[0], n2, n2))
        for s in range(0, w.shape[0], chunk):
            ww = w[s : s + chunk]
            pair = np.einsum("nbc,nea->nabce", ww, ww).reshape(-1, n2, n2)
            out[s : s + chunk] = (e @ pair @ e.T).real
        return out

    def schur(self, w):
        n2 = self.n2
        kern = self._block_kernels(w[0]).reshape(self.counts + (n2, n2))
        m = np.zeros((self.m, self.m))
        for x in range(self.k):
            for x2 in range(x, self.k):
                axes = tuple(i for i in range(self.k) if i not in (x, x2))
                part = kern.sum(axis=axes) if axes else kern
                rows = self._offsets[x]
                cols = self._offsets[x2]
                for ia, i in enumerate(rows):
                    if x == x2:
                        m[i * n2 : (i + 1) * n2, i * n2 : (i + 1) * n2] = part[ia]
                        continue
                    for ib, l in enumerate(cols):
                        blk = part[ia, ib]
                        m[i * n2 : (i + 1) * n2, l * n2 : (l + 1) * n2] = blk
                        m[l * n2 : (l + 1) * n2, i * n2 : (i + 1) * n2] = blk.T
        w0 = float(w[1][0, 0, 0].real)
        m += w0 * w0 * np.outer(self.f, self.f)
        return m


def _robustness_problem(m: MeasurementSet, tag: str, block_budget: int) -> SdpProblem:
    if m.n_tuples > block_budget:
        raise BudgetExceededError(f"{m.n_tuples} parent blocks exceeds the SDP budget of {block_budget}")
    amap = RobustnessMap(m)
    d = m.dim
    C = [np.zeros((m.n_tuples, d, d), dtype=complex), -np.ones((1, 1, 1), dtype=complex)]
    return SdpProblem(C, amap.target, amap, tag=tag, offset=1.0, meta={"d": d, "k": m.k, "reads": tag})


def build_primal(m: MeasurementSet, block_budget: int = SDP_BLOCK_BUDGET) -> SdpProblem:
    """Parent-measurement form: maximise eta over PSD blocks G_j with noisy marginals.

    The reported primal value is ``1 - z = eta``.
    """
    return _robustness_problem(m, "primal-robustness", block_budget)


def build_dual(m: MeasurementSet, block_budget: int = SDP_BLOCK_BUDGET) -> SdpProblem:
    """Operator form: minimise ``1 + sum tr(X A)`` with PSD tuple sums of X.

    Same standard-form pair as :func:`build_primal`; the dual value
    ``1 + b.y`` is the quantity of interest and ``y`` holds the coordinates
    of the X_{a|x}.
    """
    return _robustness_problem(m, "dual-robustness", block_budget)


def dual_operators_from(p: SdpProblem, sol: SdpSolution) -> list[np.ndarray]:
    return p.amap.dual_operators(sol.y)


# -- certificates ------------------------------------------------------------------


@dataclass
class DualCertificate:
    """Dual-feasible operators X_{a|x} and the upper bound they certify."""

    operators: list[np.ndarray]
    value: float
    scalar_slack: float
    min_tuple_eigenvalue: float
    lam: float
    tuples_scanned: int

    @property
    def feasible(self) -> bool:
        return self.scalar_slack >= -1e-9 and self.min_tuple_eigenvalue >= -1e-9


def min_tuple_eigenvalue(ops: Sequence[np.ndarray], fixed: int = 0) -> tuple[float, int]:
    """Smallest eigenvalue of ``sum_x ops[x][j_x]`` over all (or representative) tuples."""
    lo, n = math.inf, 0
    for blk in iter_blocks(ops, fixed=fixed):
        lo = min(lo, float(batched_eigvalsh(blk.sums)[:, 0].min()))
        n += len(blk.sums)
    return lo, n


def dual_ansatz(m: MeasurementSet, lam: LambdaResult | None = None, **kw) -> DualCertificate:
    """The operators ``X = (lambda/k 1 - A) / sum(tr A^2 - (tr A)^2/d)`` and their feasibility.

    Feasibility is re-checked by scanning the tuple sums of X directly.
    """
    _, denom = noise_weights(m)
    denom *= m.dim
    if denom <= 1e-12:
        raise ZeroDenominatorError("every effect is proportional to the identity; the ansatz is undefined")
    lr = lam if lam is not None else compute_lambda(m, **kw)
    d, k = m.dim, m.k
    xs = [(lr.lam / k * np.eye(d) - o) / denom for o in m.ops]
    value = 1 + sum(float(np.einsum("aij,aji->", x, o).real) for x, o in zip(xs, m.ops))
    rhs = sum(float(np.sum(t * np.trace(x, axis1=1, axis2=2).real)) for t, x in zip(m.traces, xs)) / d
    # the ansatz X shares every symmetry of A, so the same representatives suffice
    lo, n = min_tuple_eigenvalue(xs, fixed=lr.fixed)
    return DualCertificate(xs, value, value - rhs, lo, lr.lam, n)


# -- parent measurements -------------------------------------------------------------


@dataclass
class ParentPOVM:
    """Nonzero elements of a parent measurement, stored by outcome tuple.

    ``operators[i]`` is G at ``tuples[i]``; tuples not listed are zero.
    ``normalization`` is the constant the raw family was divided by.
    """

    dim: int
    counts: tuple[int, ...]
    tuples: np.ndarray
    operators: np.ndarray
    normalization: float = 1.0
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.tuples)

    def __getitem__(self, j) -> np.ndarray:
        hit = np.nonzero(np.all(self.tuples == np.asarray(j), axis=1))[0]
        return self.operators[hit[0]] if len(hit) else np.zeros((self.dim, self.dim), dtype=complex)

    def total(self) -> np.ndarray:
        return self.operators.sum(axis=0)

    def marginals(self) -> list[np.ndarray]:
        d = self.dim
        out = []
        for x, n in enumerate(self.counts):
            mx = np.zeros((n, d, d), dtype=complex)
            np.add.at(mx, self.tuples[:, x], self.operators)
            out.append(mx)
        return out

    def min_eigenvalue(self) -> float:
        return float(batched_eigvalsh(self.operators)[:, 0].min()) if len(self) else 0.0


def _normalise(tuples, ops, m: MeasurementSet, tol: float, meta: dict) -> ParentPOVM:
    d = m.dim
    total = ops.sum(axis=0)
    c = float(np.trace(total).real) / d
    if c <= 0:
        raise NotAParentError("the candidate family is zero", {"normalization": c})
    dev = float(np.max(np.abs(total / c - np.eye(d))))
    if dev > tol:
        raise NotAParentError(
            f"elements do not sum to a multiple of the identity (deviation {dev:.3e})",
            {"normalization": c, "deviation": dev},
        )
    return ParentPOVM(d, m.outcome_counts, np.asarray(tuples, dtype=int), ops / c, c, {**meta, "deviation": dev})


def maximising_tuples(m: MeasurementSet, lr: LambdaResult) -> np.ndarray:
    """All tuples attaining lambda, expanding symmetry representatives into full orbits."""
    if lr.fixed and m.covariance is not None:
        return orbit_tuples(m.covariance.perms, lr.argmax_tuples)
    return lr.argmax_tuples


def _tuple_sums(m: MeasurementSet, tuples: np.ndarray) -> np.ndarray:
    out = np.zeros((len(tuples), m.dim, m.dim), dtype=complex)
    for x, o in enumerate(m.ops):
        out += o[tuples[:, x]]
    return out


def parent_guess(m: MeasurementSet, tie_tol: float = TIE_TOL, lam: LambdaResult | None = None, **kw) -> ParentPOVM:
    """Projectors onto the top eigenspace of every S_j with ``||S_j|| = lambda``, normalised.

    Raises
    ------
    NotAParentError
        The projectors do not sum to a multiple of the identity.
    """
    lr = lam if lam is not None else compute_lambda(m, tie_tol=tie_tol, **kw)
    tuples = maximising_tuples(m, lr)
    sums = _tuple_sums(m, tuples)
    norms = batched_max_eig(sums)
    if np.any(np.abs(norms - lr.lam) > tie_tol):
        raise NotAParentError("a reported maximiser does not attain lambda", {"lambda": lr.lam})
    projs = batched_top_projectors(sums, tie_tol)
    idem = float(np.max(np.abs(projs @ projs - projs))) if len(projs) else 0.0
    return _normalise(tuples, projs, m, NORMALISATION_TOL, {"kind": "guess", "lambda": lr.lam, "idempotency": idem})


@dataclass
class ParentCheck:
    eta: float
    residual: float
    min_eigenvalue: float


def check_parent(g: ParentPOVM, m: MeasurementSet, tol: float = MARGINAL_TOL) -> ParentCheck:
    """Fit one eta to all marginals of ``g``.

    Each marginal must equal ``eta A + (1 - eta) tr(A) 1/d`` entrywise within
    ``tol``, and ``eta`` must lie in [0, 1].

    Raises
    ------
    NotAParentError
        Marginals are inconsistent with a single eta, or eta is out of range.
    """
    d = m.dim
    if g.counts != m.outcome_counts:
        raise InvalidInputError("parent and measurements have different outcome counts")
    margs = g.marginals()
    shift = [(t / d)[:, None, None] * np.eye(d) for t in m.traces]
    num = sum(float(np.sum((mg - s).conj() * (o - s)).real) for mg, s, o in zip(margs, shift, m.ops))
    den = sum(float(np.sum(np.abs(o - s) ** 2)) for s, o in zip(shift, m.ops))
    if den <= 1e-14:
        raise ZeroDenominatorError("every effect is proportional to the identity")
    eta = num / den
    resid = max(float(np.max(np.abs(mg - (eta * o + (1 - eta) * s)))) for mg, s, o in zip(margs, shift, m.ops))
    lo = g.min_eigenvalue()
    diag = {"eta": eta, "residual": resid, "min_eigenvalue": lo}
    if resid > tol:
        raise NotAParentError(f"marginals do not match a single noise level (residual {resid:.3e})", diag)
    if not -1e-9 <= eta <= 1 + 1e-9:
        raise NotAParentError(f"fitted noise level {eta} lies outside [0, 1]", diag)
    if lo < -1e-9:
        raise NotAParentError(f"parent has a negative element (min eigenvalue {lo:.3e})", diag)
    return ParentCheck(eta, resid, lo)


def white_noise_parent(m: MeasurementSet) -> ParentPOVM:
    """``G_j = prod_x tr(A_{j_x|x})/d * 1``, whose marginals are fully noisy."""
    d = m.dim
    tuples = np.stack(np.unravel_index(np.arange(m.n_tuples), m.outcome_counts), axis=-1)
    w = np.ones(len(tuples))
    for x, t in enumerate(m.traces):
        w *= t[tuples[:, x]] / d
    return ParentPOVM(d, m.outcome_counts, tuples, w[:, None, None] * np.eye(d), 1.0, {"kind": "white-noise"})


def parent_sequence(m: MeasurementSet, n: int, budget: int = TUPLE_BUDGET) -> ParentPOVM:
    """The family ``(S_j / lambda)^n`` over all tuples, normalised to sum to the identity."""
    if n < 1:
        raise InvalidInputError("n must be at least 1")
    if m.n_tuples > budget:
        raise BudgetExceededError(f"{m.n_tuples} tuples exceeds the budget of {budget}")
    tuples = np.stack(np.unravel_index(np.arange(m.n_tuples), m.outcome_counts), axis=-1)
    sums = partial_sums(m.ops)
    lam = float(batched_max_eig(sums).max())
    ops = np.linalg.matrix_power(sums / lam, n)
    ops = (ops + dagger(ops)) / 2
    return _normalise(tuples, ops, m, 1e-8 if n < 32 else SEQUENCE_TOL_LARGE_N, {"kind": "power", "n": n, "lambda": lam})


def sequence_eta(k: int, d: int, n: int) -> float:
    """Closed forms of the noise level reached by ``(S_j/lambda)^n`` for n = 1..4 on MUB."""
    if n == 1:
        return 1 / k
    if n == 2:
        return (d + 2 * (k - 1)) / (k * (d + k - 1))
    if n == 3:
        return (d * d + 5 * (k - 1) * d + 3 * (k - 1) * (k - 2)) / (
            k * (d * d + 3 * (k - 1) * d + (k - 1) * (k - 2))
        )
    if n == 4:
        num = d**3 + 9 * (k - 1) * d**2 + 2 * (k - 1) * (7 * k - 13) * d + 4 * (k - 1) * (k - 2) * (k - 3)
        den = d**3 + 6 * (k - 1) * d**2 + (k - 1) * (6 * k - 11) * d + (k - 1) * (k - 2) * (k - 3)
        return num / (k * den)
    raise InvalidInputError("closed forms are available for n = 1..4")


def basis_vectors(m: MeasurementSet) -> np.ndarray:
    """Unit vectors of rank-one projective measurements, shape (k, d, d) indexed [x, a, :]."""
    if not m.rank_one_projective:
        raise InvalidInputError("expected rank-one projective measurements")
    out = np.empty((m.k, m.dim, m.dim), dtype=complex)
    for x, o in enumerate(m.ops):
        for a, p in enumerate(o):
            col = int(np.argmax(np.linalg.norm(p, axis=0)))
            v = p[:, col]
            out[x, a] = v / np.linalg.norm(v)
    return out


def check_unbiased(m: MeasurementSet, tol: float = UNBIASED_TOL) -> float:
    """Max deviation of ``|<phi^x_a|phi^y_b>|^2`` from 1/d over distinct measurements."""
    v = basis_vectors(m)
    worst = 0.0
    for x in range(m.k):
        for y in range(x + 1, m.k):
            ov = np.abs(v[x].conj() @ v[y].T) ** 2
            worst = max(worst, float(np.max(np.abs(ov - 1 / m.dim))))
    if worst > tol:
        raise InvalidInputError(f"measurements are not mutually unbiased (deviation {worst:.3e})")
    return worst


def lower_bound_parent(mubs: MeasurementSet, alphas: Sequence[float], budget: int = TUPLE_BUDGET) -> ParentPOVM:
    """Parent built from chained vectors ``(1 + alpha sqrt(d) A) ... phi``.

    For every tuple j and every cyclic rotation y of the measurement order,
    start from the basis vector of the first measurement in the rotated order
    and apply ``1 + alpha_s sqrt(d) A_{j_x|x}`` for the following ones, the
    s-th step using ``alphas[s - 1]``.  G_j sums the k resulting rank-one
    operators.
    """
    k, d = mubs.k, mubs.dim
    alphas = [float(a) for a in alphas]
    if len(alphas) != k - 1:
        raise InvalidInputError(f"expected {k - 1} alphas, got {len(alphas)}")
    if any(a <= 0 for a in alphas):
        raise InvalidInputError("alphas must be positive")
    if mubs.n_tuples > budget:
        raise BudgetExceededError(f"{mubs.n_tuples} tuples exceeds the budget of {budget}")
    check_unbiased(mubs)
    vec = basis_vectors(mubs)
    tuples = np.stack(np.unravel_index(np.arange(mubs.n_tuples), mubs.outcome_counts), axis=-1)
    sd = math.sqrt(d)
    ops = np.zeros((len(tuples), d, d), dtype=complex)
    for y in range(k):
        order = [(y + s) % k for s in range(k)]
        chi = vec[order[0]][tuples[:, order[0]]].copy()
        for step, x in enumerate(order[1:], start=1):
            phi = vec[x][tuples[:, x]]
            chi = chi + alphas[step - 1] * sd * phi * np.sum(phi.conj() * chi, axis=1, keepdims=True)
        ops += chi[:, :, None] * chi.conj()[:, None, :]
    return _normalise(tuples, ops, mubs, 1e-8, {"kind": "chained", "alphas": alphas})


# -- orchestration -------------------------------------------------------------------


@dataclass
class RobustnessOptions:
    tie_tol: float = TIE_TOL
    gap_tol: float = GAP_TOL
    tuple_budget: int = TUPLE_BUDGET
    sdp_block_budget: int = SDP_BLOCK_BUDGET
    max_iter: int = 200
    use_certificate: bool = True
    use_sdp: bool = True
    symmetry: bool = True


@dataclass
class RobustnessReport:
    eta: float | None
    method: str  # certificate | sdp | sdp-bisection | bounds
    lower: float
    upper: float | None
    gap: float | None = None
    certificate: dict | None = None
    timings: dict = field(default_factory=dict)
    status: str = "ok"
    notes: list[str] = field(default_factory=list)
    d: int = 0
    k: int = 0

    def to_dict(self) -> dict:
        out = {
            "eta": self.eta,
            "method": self.method,
            "lower": self.lower,
            "upper": self.upper,
            "gap": self.gap,
            "timings": self.timings,
            "status": self.status,
            "d": self.d,
            "k": self.k,
        }
        if self.certificate is not None:
            out["certificate"] = self.certificate
        if self.notes:
            out["notes"] = self.notes
        return out


def trivial_lower_bound(m: MeasurementSet) -> float:
    """``1/k``: each outcome tuple picks one measurement uniformly at random."""
    return 1.0 / m.k


def _mub_lower_bound(m: MeasurementSet) -> float | None:
    try:
        if m.rank_one_projective and m.k <= m.dim + 1:
            check_unbiased(m)
            return eta_low_recursive(m.k, m.dim).value
    except InvalidInputError:
        return None
    return None


def bisect_robustness(m: MeasurementSet, lo: float, hi: float, tol: float = 1e-6, opts=None) -> tuple[float, float]:
    """Bracket eta* by testing joint measurability of the noisy set at fixed noise levels.

    A noisy set is declared jointly measurable when its own robustness
    problem reaches 1 (no extra noise needed).
    """
    opts = opts or RobustnessOptions()
    while hi - lo > tol:
        mid = (lo + hi) / 2
        sol = solve_sdp(build_primal(m.noisy(mid), opts.sdp_block_budget), gap_tol=1e-7, max_iter=opts.max_iter)
        if sol.dual_value >= 1 - 1e-7:
            lo = mid
        else:
            hi = mid
    return lo, hi


def robustness(m: MeasurementSet, opts: RobustnessOptions | None = None) -> RobustnessReport:
    """Best available value of eta* with both bounds.

    Tries, in order: a parent guess certified against the upper bound, the
    interior-point SDP (within the block budget), and finally bounds only.
    """
    opts = opts or RobustnessOptions()
    timings: dict[str, float] = {}
    notes: list[str] = []
    lower = trivial_lower_bound(m)
    mub_lower = _mub_lower_bound(m)
    if mub_lower is not None:
        lower = max(lower, mub_lower)
    upper = None
    lr = None
    t = time.perf_counter()
    try:
        lr = compute_lambda(m, tie_tol=opts.tie_tol, budget=opts.tuple_budget, symmetry=opts.symmetry)
        upper = eta_up_general(m, lam=lr).value
    except BudgetExceededError as exc:
        notes.append(f"upper bound skipped: {exc}")
    except ZeroDenominatorError:
        return RobustnessReport(1.0, "trivial", 1.0, 1.0, 0.0, d=m.dim, k=m.k, notes=["every effect is trivial"])
    timings["lambda"] = time.perf_counter() - t
    if m.k == 1:
        return RobustnessReport(1.0, "trivial", 1.0, 1.0, 0.0, timings=timings, d=m.dim, k=m.k)
    if lr is not None and opts.use_certificate:
        t = time.perf_counter()
        try:
            g = parent_guess(m, opts.tie_tol, lam=lr)
            chk = check_parent(g, m)
            timings["certificate"] = time.perf_counter() - t
            if abs(chk.eta - upper) <= MARGINAL_TOL:
                cert = {"lambda": lr.lam, "parent_elements": len(g), "marginal_residual": chk.residual,
                        "min_eigenvalue": chk.min_eigenvalue}
                return RobustnessReport(upper, "certificate", lower, upper, abs(chk.eta - upper), cert, timings,
                                        d=m.dim, k=m.k)
            notes.append(f"guessed parent reaches {chk.eta:.12g} below the upper bound")
        except NotAParentError as exc:
            timings["certificate"] = time.perf_counter() - t
            notes.append(f"guessed parent rejected: {exc}")
    if opts.use_sdp and m.n_tuples <= opts.sdp_block_budget:
        t = time.perf_counter()
        p = build_primal(m, opts.sdp_block_budget)
        try:
            sol = solve_sdp(p, gap_tol=opts.gap_tol, max_iter=opts.max_iter)
        except MubError as exc:
            sol = None
            notes.append(f"interior point failed: {exc}")
        timings["sdp"] = time.perf_counter() - t
        if sol is not None and sol.status == "optimal":
            eta = (sol.primal_value + sol.dual_value) / 2
            return RobustnessReport(eta, "sdp", lower, upper, sol.gap, None, timings, d=m.dim, k=m.k, notes=notes,
                                    status=f"optimal after {sol.iterations} iterations")
        t = time.perf_counter()
        lo, hi = bisect_robustness(m, lower, upper if upper is not None else 1.0, opts=opts)
        timings["bisection"] = time.perf_counter() - t
        return RobustnessReport((lo + hi) / 2, "sdp-bisection", lower, upper, hi - lo, None, timings,
                                d=m.dim, k=m.k, notes=notes)
    notes.append("exact value out of budget")
    return RobustnessReport(None, "bounds", lower, upper, None, None, timings, d=m.dim, k=m.k, notes=notes,
                            status="bounds-only")
