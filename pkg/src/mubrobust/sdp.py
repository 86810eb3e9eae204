"""Primal-dual interior-point solver for block-diagonal complex Hermitian SDPs.

Standard form, with real multipliers y and Hermitian blocks:

    (P)  max <C, Z>   s.t.  A(Z) = b,           Z >= 0
    (D)  min b.y      s.t.  S = A*(y) - C >= 0

where ``<U, V> = Re tr(U V)`` summed over blocks and ``A(Z)_i = <F_i, Z>``.
Blocks of equal size are stored together as ``(count, n, n)`` arrays so that
every scaling step is one batched LAPACK call.  Directions are
Nesterov-Todd, combined with Mehrotra's predictor-corrector rule.

The linear map is abstract (:class:`LinearMap`): :class:`DenseMap` stores
every F_i explicitly for small generic problems, and structured problems
supply their own ``apply``/``adjoint``/``schur``.
"""

from __future__ import annotations

import io
import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidInputError, NumericalError
from .linalg import dagger

GAP_TOL = 1e-8
FEAS_TOL = 1e-8
MAX_ITER = 200
STEP_FRACTION = 0.98


# -- Hermitian coordinates ----------------------------------------------------------


def hermitian_basis(d: int) -> np.ndarray:
    """Orthonormal basis of d x d Hermitian matrices, shape (d^2, d, d).

    Order: diagonal units, then ``(e_ab + e_ba)/sqrt2`` and
    ``i(e_ba - e_ab)/sqrt2`` for a < b in row-major order.
    """
    out = np.zeros((d * d, d, d), dtype=complex)
    for a in range(d):
        out[a, a, a] = 1.0
    s = 1 / math.sqrt(2)
    n = d
    for a in range(d):
        for b in range(a + 1, d):
            out[n, a, b] = out[n, b, a] = s
            n += 1
    for a in range(d):
        for b in range(a + 1, d):
            out[n, a, b] = -1j * s
            out[n, b, a] = 1j * s
            n += 1
    return out


def herm_coords(mats: np.ndarray) -> np.ndarray:
    """``tr(E_p M)`` for the basis of :func:`hermitian_basis`; works on stacks."""
    d = mats.shape[-1]
    iu = np.triu_indices(d, 1)
    diag = np.diagonal(mats, axis1=-2, axis2=-1).real
    up = mats[..., iu[0], iu[1]]
    return np.concatenate([diag, math.sqrt(2) * up.real, -math.sqrt(2) * up.imag], axis=-1)


def herm_from_coords(c: np.ndarray, d: int) -> np.ndarray:
    """Inverse of :func:`herm_coords`."""
    c = np.asarray(c, dtype=float)
    iu = np.triu_indices(d, 1)
    n_off = len(iu[0])
    out = np.zeros(c.shape[:-1] + (d, d), dtype=complex)
    idx = np.arange(d)
    out[..., idx, idx] = c[..., :d]
    up = (c[..., d : d + n_off] - 1j * c[..., d + n_off :]) / math.sqrt(2)
    out[..., iu[0], iu[1]] = up
    out[..., iu[1], iu[0]] = up.conj()
    return out


# -- block helpers -----------------------------------------------------------------


def _inner(u: list[np.ndarray], v: list[np.ndarray]) -> float:
    return float(sum(np.einsum("bij,bji->", a, c).real for a, c in zip(u, v)))


def _norm(u: list[np.ndarray]) -> float:
    return math.sqrt(sum(float(np.sum(np.abs(a) ** 2)) for a in u))


def _herm(a: np.ndarray) -> np.ndarray:
    return (a + dagger(a)) / 2


def _identity_blocks(shapes, scale=1.0) -> list[np.ndarray]:
    return [np.broadcast_to(scale * np.eye(n, dtype=complex), (nb, n, n)).copy() for nb, n in shapes]


class LinearMap:
    """``A: blocks -> R^m`` and its adjoint, plus the Schur matrix ``<F_i, W F_l W>``."""

    m: int
    shapes: list[tuple[int, int]]

    def apply(self, z: list[np.ndarray]) -> np.ndarray:
        raise NotImplementedError

    def adjoint(self, y: np.ndarray) -> list[np.ndarray]:
        raise NotImplementedError

    def schur(self, w: list[np.ndarray]) -> np.ndarray:
        raise NotImplementedError


class DenseMap(LinearMap):
    """Explicit constraint matrices; ``F[g]`` has shape (m, count_g, n_g, n_g)."""

    def __init__(self, F: Sequence[np.ndarray], tol: float = 1e-10):
        self.F = [np.asarray(f, dtype=complex) for f in F]
        self.m = self.F[0].shape[0]
        self.shapes = [(f.shape[1], f.shape[2]) for f in self.F]
        for f in self.F:
            if f.shape[0] != self.m or f.shape[2] != f.shape[3]:
                raise InvalidInputError("inconsistent constraint shapes")
            if np.max(np.abs(f - dagger(f)), initial=0.0) > tol:
                raise InvalidInputError("constraint matrices must be Hermitian")

    def apply(self, z):
        return sum(np.einsum("ibpq,bqp->i", f, zz).real for f, zz in zip(self.F, z))

    def adjoint(self, y):
        return [np.einsum("i,ibpq->bpq", y, f) for f in self.F]

    def schur(self, w):
        out = np.zeros((self.m, self.m))
        for f, ww in zip(self.F, w):
            fw = np.einsum("ibpq,bqr->ibpr", f, ww)
            out += np.einsum("ibpq,lbqp->il", fw, fw).real
        return out


@dataclass
class SdpProblem:
    """A standard-form block SDP.

    ``offset`` is added to both objective values when results are reported
    (constant terms of the modelled problem).
    """

    C: list[np.ndarray]
    b: np.ndarray
    amap: LinearMap
    tag: str = "generic"
    offset: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.b = np.asarray(self.b, dtype=float)
        if self.b.shape != (self.amap.m,):
            raise InvalidInputError(f"b has shape {self.b.shape}, expected ({self.amap.m},)")
        if [c.shape for c in self.C] != [(nb, n, n) for nb, n in self.amap.shapes]:
            raise InvalidInputError("C does not match the block structure")
        for c in self.C:
            if np.max(np.abs(c - dagger(c)), initial=0.0) > 1e-10:
                raise InvalidInputError("objective blocks must be Hermitian")

    @property
    def shapes(self) -> list[tuple[int, int]]:
        return self.amap.shapes

    @property
    def block_sizes(self) -> list[int]:
        return [n for nb, n in self.shapes for _ in range(nb)]

    def dump(self) -> str:
        """Plain-text listing of the problem for comparison with other solvers."""
        buf = io.StringIO()
        buf.write(f"# sdp {self.tag}\n# blocks {' '.join(f'{nb}x{n}' for nb, n in self.shapes)}\n")
        buf.write(f"# constraints {self.amap.m}\n# offset {self.offset:.17g}\n")
        buf.write("b " + " ".join(f"{v:.17g}" for v in self.b) + "\n")
        for g, c in enumerate(self.C):
            for blk in range(c.shape[0]):
                nz = np.argwhere(np.abs(c[blk]) > 0)
                for p, q in nz:
                    if p <= q:
                        v = c[blk, p, q]
                        buf.write(f"C {g} {blk} {p} {q} {v.real:.17g} {v.imag:.17g}\n")
        if isinstance(self.amap, DenseMap):
            for g, f in enumerate(self.amap.F):
                for i, blk, p, q in np.argwhere(np.abs(f) > 0):
                    if p <= q:
                        v = f[i, blk, p, q]
                        buf.write(f"F {i} {g} {blk} {p} {q} {v.real:.17g} {v.imag:.17g}\n")
        return buf.getvalue()


@dataclass
class SdpSolution:
    primal_value: float
    dual_value: float
    gap: float
    Z: list[np.ndarray]
    y: np.ndarray
    S: list[np.ndarray]
    status: str  # optimal | infeasible | max-iter
    iterations: int
    primal_residual: float
    dual_residual: float
    seconds: float = 0.0

    def min_eigenvalues(self) -> tuple[float, float]:
        zmin = min(float(np.linalg.eigvalsh(z).min()) for z in self.Z)
        smin = min(float(np.linalg.eigvalsh(s).min()) for s in self.S)
        return zmin, smin


# -- the algorithm -----------------------------------------------------------------


def _chol(blocks: list[np.ndarray]) -> list[np.ndarray]:
    try:
        return [np.linalg.cholesky(x) for x in blocks]
    except np.linalg.LinAlgError as exc:
        raise NumericalError("iterate lost positive definiteness") from exc


def _nt_scaling(z: list[np.ndarray], s: list[np.ndarray]):
    """Return (G, W, v) per group with ``G^H S G = G^-1 Z G^-H = diag(v)`` and ``W = G G^H``."""
    gs, ws, vs = [], [], []
    for lz, ls in zip(_chol(z), _chol(s)):
        u, d, vh = np.linalg.svd(dagger(ls) @ lz)
        g = lz @ dagger(vh) / np.sqrt(d)[:, None, :]
        gs.append(g)
        ws.append(g @ dagger(g))
        vs.append(d)
    return gs, ws, vs


def _lv_inverse(r: np.ndarray, v: np.ndarray) -> np.ndarray:
    return 2 * r / (v[:, :, None] + v[:, None, :])


def _max_step(v: np.ndarray, delta: np.ndarray) -> float:
    """Largest alpha with diag(v) + alpha*delta PSD."""
    isq = 1 / np.sqrt(v)
    scaled = _herm(delta * isq[:, :, None] * isq[:, None, :])
    lo = float(np.linalg.eigvalsh(scaled).min())
    return math.inf if lo >= 0 else -1.0 / lo


def _solve_schur(m: np.ndarray):
    scale = np.sqrt(np.maximum(np.diag(m), 1e-300))
    ms = m / scale[:, None] / scale[None, :]
    for reg in (0.0, 1e-14, 1e-12, 1e-10):
        try:
            chol = np.linalg.cholesky(ms + reg * np.eye(len(ms)))
            break
        except np.linalg.LinAlgError:
            continue
    else:
        raise NumericalError("Schur complement is not positive definite (ill-conditioned Newton system)")

    def solve(rhs):
        t = np.linalg.solve(chol, rhs / scale)
        return np.linalg.solve(chol.T, t) / scale

    return solve


def solve_sdp(
    p: SdpProblem,
    gap_tol: float = GAP_TOL,
    feas_tol: float = FEAS_TOL,
    max_iter: int = MAX_ITER,
    init: tuple | None = None,
    verbose: bool = False,
) -> SdpSolution:
    """Solve ``p`` by a primal-dual path-following method.

    Status ``optimal`` means ``|primal - dual| <= gap_tol`` and both relative
    residuals are ``<= feas_tol``; ``max-iter`` returns the last iterate.

    Raises
    ------
    NumericalError
        The Newton system or an iterate became numerically singular.
    """
    t0 = time.perf_counter()
    amap, b, C = p.amap, p.b, p.C
    shapes = amap.shapes
    n_total = sum(nb * n for nb, n in shapes)
    bnorm, cnorm = float(np.linalg.norm(b)), _norm(C)
    if init is None:
        xi = max(10.0, math.sqrt(max(n for _, n in shapes)), float(np.max(np.abs(b), initial=0.0)))
        z, s, y = _identity_blocks(shapes, xi), _identity_blocks(shapes, xi), np.zeros(amap.m)
    else:
        z, y, s = ([np.array(a, dtype=complex) for a in init[0]], np.array(init[1], float),
                   [np.array(a, dtype=complex) for a in init[2]])
    status, it = "max-iter", 0
    pobj = dobj = math.nan
    pres = dres = math.inf
    for it in range(max_iter + 1):
        rp = b - amap.apply(z)
        aty = amap.adjoint(y)
        rd = [c - a + ss for c, a, ss in zip(C, aty, s)]
        pobj, dobj = _inner(C, z), float(b @ y)
        mu = _inner(z, s) / n_total
        pres = float(np.linalg.norm(rp)) / (1 + bnorm)
        dres = _norm(rd) / (1 + cnorm)
        if verbose:
            print(f"{it:3d} p={pobj:+.10e} d={dobj:+.10e} mu={mu:.2e} pres={pres:.1e} dres={dres:.1e}")
        if pres <= feas_tol and dres <= feas_tol and abs(pobj - dobj) <= gap_tol and mu * n_total <= gap_tol:
            status = "optimal"
            break
        if max(_norm(z), float(np.linalg.norm(y))) > 1e12:
            status = "infeasible"
            break
        if it == max_iter:
            break
        gs, ws, vs = _nt_scaling(z, s)
        solve = _solve_schur(amap.schur(ws))
        wrdw = [w @ r @ w for w, r in zip(ws, rd)]
        base_rhs = amap.apply(wrdw) - rp

        def direction(rc):
            h = [_lv_inverse(r, v) for r, v in zip(rc, vs)]
            ghg = [g @ hh @ dagger(g) for g, hh in zip(gs, h)]
            dy = solve(amap.apply(ghg) + base_rhs)
            ds = [a - r for a, r in zip(amap.adjoint(dy), rd)]
            dst = [_herm(dagger(g) @ d_ @ g) for g, d_ in zip(gs, ds)]
            dzt = [_herm(hh - d_) for hh, d_ in zip(h, dst)]
            return dy, ds, dst, dzt

        vmat = [np.einsum("bi,ij->bij", v, np.eye(v.shape[1])) for v in vs]
        v2 = [vm * vm for vm in vmat]
        dy, ds, dst, dzt = direction([-a for a in v2])
        ap = min(1.0, min(_max_step(v, d_) for v, d_ in zip(vs, dzt)))
        ad = min(1.0, min(_max_step(v, d_) for v, d_ in zip(vs, dst)))
        zt = [vm + ap * d_ for vm, d_ in zip(vmat, dzt)]
        st = [vm + ad * d_ for vm, d_ in zip(vmat, dst)]
        mu_aff = _inner(zt, st) / n_total
        sigma = min(1.0, max(0.0, mu_aff / mu)) ** 3 if mu > 0 else 0.0
        eye = [np.broadcast_to(np.eye(n), (nb, n, n)) for nb, n in shapes]
        rc = [sigma * mu * e - a - (x @ y_ + y_ @ x) / 2 for e, a, x, y_ in zip(eye, v2, dzt, dst)]
        dy, ds, dst, dzt = direction(rc)
        ap = min(1.0, STEP_FRACTION * min(_max_step(v, d_) for v, d_ in zip(vs, dzt)))
        ad = min(1.0, STEP_FRACTION * min(_max_step(v, d_) for v, d_ in zip(vs, dst)))
        dz = [_herm(g @ d_ @ dagger(g)) for g, d_ in zip(gs, dzt)]
        z = [_herm(a + ap * d_) for a, d_ in zip(z, dz)]
        y = y + ad * dy
        s = [_herm(a + ad * d_) for a, d_ in zip(s, ds)]
    return SdpSolution(
        pobj + p.offset,
        dobj + p.offset,
        dobj - pobj,
        z,
        y,
        s,
        status,
        it,
        pres,
        dres,
        time.perf_counter() - t0,
    )
