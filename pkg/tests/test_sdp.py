import itertools
import math

import cvxpy as cp
import numpy as np
import pytest

from mubrobust.errors import BudgetExceededError, InvalidInputError
from mubrobust.jointmeas import RobustnessMap, build_dual, build_primal, dual_operators_from
from mubrobust.mub import build_mub, pauli_triple, to_measurements
from mubrobust.sdp import DenseMap, SdpProblem, herm_coords, herm_from_coords, hermitian_basis, solve_sdp


def rand_herm(rng, *shape):
    a = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    return (a + np.swapaxes(a, -1, -2).conj()) / 2


def rand_pd(rng, nb, n):
    a = rng.normal(size=(nb, n, n)) + 1j * rng.normal(size=(nb, n, n))
    return a @ np.swapaxes(a, -1, -2).conj() / n + 0.5 * np.eye(n)


def inner(u, v):
    return sum(float(np.einsum("bij,bji->", a, c).real) for a, c in zip(u, v))


def random_problem(seed, shapes=((2, 3), (1, 2), (3, 1)), m=6):
    """Strictly feasible on both sides by construction."""
    rng = np.random.default_rng(seed)
    F = [rand_herm(rng, m, nb, n, n) for nb, n in shapes]
    amap = DenseMap(F)
    z0 = [rand_pd(rng, nb, n) for nb, n in shapes]
    s0 = [rand_pd(rng, nb, n) for nb, n in shapes]
    y0 = rng.normal(size=m)
    C = [a - s for a, s in zip(amap.adjoint(y0), s0)]
    return SdpProblem(C, amap.apply(z0), amap, tag="random")


def cvxpy_value(p: SdpProblem) -> float:
    blocks, cons, obj = [], [], 0
    for (nb, n), c in zip(p.shapes, p.C):
        row = []
        for b in range(nb):
            z = cp.Variable((n, n), hermitian=True)
            cons.append(z >> 0)
            obj = obj + cp.real(cp.trace(c[b] @ z))
            row.append(z)
        blocks.append(row)
    for i in range(p.amap.m):
        expr = 0
        for f, row in zip(p.amap.F, blocks):
            for b, z in enumerate(row):
                expr = expr + cp.real(cp.trace(f[i, b] @ z))
        cons.append(expr == p.b[i])
    prob = cp.Problem(cp.Maximize(obj), cons)
    prob.solve(solver=cp.CLARABEL)
    return prob.value


def cvxpy_robustness(m) -> float:
    d = m.dim
    eta = cp.Variable()
    tuples = list(itertools.product(*[range(n) for n in m.outcome_counts]))
    G = {j: cp.Variable((d, d), hermitian=True) for j in tuples}
    cons = [g >> 0 for g in G.values()]
    for x, ops in enumerate(m.ops):
        for a, o in enumerate(ops):
            if x > 0 and a == len(ops) - 1:
                continue  # implied: every marginal sums to the same total
            target = eta * o + (1 - eta) * np.trace(o).real / d * np.eye(d)
            cons.append(sum(G[j] for j in tuples if j[x] == a) == target)
    prob = cp.Problem(cp.Maximize(eta), cons)
    prob.solve(solver=cp.CLARABEL)
    return float(eta.value)


@pytest.mark.parametrize("d", [1, 2, 3, 5])
def test_hermitian_coordinates(d):
    e = hermitian_basis(d)
    gram = np.einsum("pij,qji->pq", e, e)
    assert np.allclose(gram, np.eye(d * d))
    rng = np.random.default_rng(d)
    mats = rand_herm(rng, 4, d, d)
    c = herm_coords(mats)
    assert np.allclose(c, np.einsum("pij,nji->np", e, mats).real)
    assert np.allclose(herm_from_coords(c, d), mats)


def test_dense_map_adjoint_and_schur():
    p = random_problem(0)
    rng = np.random.default_rng(1)
    z = [rand_herm(rng, nb, n, n) for nb, n in p.shapes]
    y = rng.normal(size=p.amap.m)
    assert float(p.amap.apply(z) @ y) == pytest.approx(inner(z, p.amap.adjoint(y)), abs=1e-10)
    w = [rand_pd(rng, nb, n) for nb, n in p.shapes]
    F = p.amap.F
    explicit = np.array(
        [[inner([f[i] for f in F], [ww @ f[l] @ ww for f, ww in zip(F, w)]) for l in range(p.amap.m)]
         for i in range(p.amap.m)]
    )
    assert np.allclose(p.amap.schur(w), explicit)


@pytest.mark.parametrize("d,k", [(2, 2), (2, 3), (3, 2)])
def test_robustness_map_adjoint_and_schur(d, k):
    m = to_measurements(build_mub(d), range(k))
    amap = RobustnessMap(m)
    rng = np.random.default_rng(d * 10 + k)
    z = [rand_herm(rng, m.n_tuples, d, d), rand_herm(rng, 1, 1, 1)]
    y = rng.normal(size=amap.m)
    assert float(amap.apply(z) @ y) == pytest.approx(inner(z, amap.adjoint(y)), abs=1e-10)
    # Schur matrix column by column from apply/adjoint
    w = [rand_pd(rng, m.n_tuples, d), rand_pd(rng, 1, 1)]
    cols = []
    for l in range(amap.m):
        el = np.zeros(amap.m)
        el[l] = 1
        cols.append(amap.apply([ww @ a @ ww for ww, a in zip(w, amap.adjoint(el))]))
    assert np.allclose(amap.schur(w), np.array(cols).T, atol=1e-10)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_random_problems_match_cvxpy(seed):
    p = random_problem(seed)
    sol = solve_sdp(p)
    assert sol.status == "optimal"
    assert sol.primal_value == pytest.approx(cvxpy_value(p), abs=1e-6)
    assert sol.primal_value <= sol.dual_value + 1e-8
    zmin, smin = sol.min_eigenvalues()
    assert zmin >= -1e-9 and smin >= -1e-9
    assert abs(inner(sol.Z, sol.S)) <= 1e-7


@pytest.mark.parametrize("d,k", [(2, 3), (3, 2), (3, 3)])
def test_robustness_sdp_matches_cvxpy(d, k):
    m = to_measurements(build_mub(d), range(k))
    sol = solve_sdp(build_primal(m))
    assert sol.status == "optimal"
    assert sol.primal_value == pytest.approx(cvxpy_robustness(m), abs=1e-6)


def test_problem_shapes():
    p = build_primal(to_measurements(build_mub(2), [0, 1]))
    assert p.shapes[0] == (4, 2)
    p = build_primal(to_measurements(build_mub(3), [0, 1, 2]))
    assert p.shapes[0] == (27, 3)
    assert p.shapes[1] == (1, 1)
    with pytest.raises(BudgetExceededError):
        build_primal(to_measurements(build_mub(5), range(5)), block_budget=100)


def test_single_measurement_is_compatible():
    m = to_measurements(build_mub(3), [0])
    sol = solve_sdp(build_dual(m))
    assert sol.status == "optimal"
    assert sol.dual_value == pytest.approx(1, abs=1e-7)


def test_pair_dual_value_and_operators():
    m = to_measurements(build_mub(2), [0, 1])
    p = build_dual(m)
    sol = solve_sdp(p)
    assert sol.dual_value == pytest.approx(1 / math.sqrt(2), abs=1e-8)
    xs = dual_operators_from(p, sol)
    # the recovered operators reproduce the dual objective
    value = 1 + sum(float(np.einsum("aij,aji->", x, o).real) for x, o in zip(xs, m.ops))
    assert value == pytest.approx(sol.dual_value, abs=1e-7)


def test_identity_multiple_is_strictly_dual_feasible():
    m = to_measurements(build_mub(3), [0, 1, 2])
    p = build_dual(m)
    mu = 0.3
    y = np.concatenate([herm_coords(mu * np.eye(3)) for _ in p.amap.kept])
    slack = [a - c for a, c in zip(p.amap.adjoint(y), p.C)]
    assert min(np.linalg.eigvalsh(s).min() for s in slack) > 0


def test_known_values():
    sol = solve_sdp(build_primal(to_measurements(pauli_triple())))
    assert sol.primal_value == pytest.approx(1 / math.sqrt(3), abs=1e-6)
    sol = solve_sdp(build_primal(to_measurements(build_mub(4), range(3))))
    assert sol.primal_value == pytest.approx(0.5469, abs=5e-4)
    sol = solve_sdp(build_primal(to_measurements(build_mub(5), range(4))))
    assert sol.primal_value == pytest.approx(0.4615, abs=5e-4)


def test_infeasible_problem_is_flagged():
    F = [np.ones((1, 1, 1, 1), dtype=complex)]
    p = SdpProblem([np.zeros((1, 1, 1), dtype=complex)], [-1.0], DenseMap(F))
    assert solve_sdp(p).status == "infeasible"


def test_problem_validation_and_dump():
    F = [np.ones((1, 1, 2, 2), dtype=complex)]
    with pytest.raises(InvalidInputError):
        SdpProblem([np.zeros((1, 2, 2), dtype=complex)], [1.0, 2.0], DenseMap(F))
    with pytest.raises(InvalidInputError):
        SdpProblem([np.array([[[0, 1], [0, 0]]], dtype=complex)], [1.0], DenseMap(F))
    with pytest.raises(InvalidInputError):
        DenseMap([np.array([[[[0, 1], [0, 0]]]], dtype=complex)])
    text = random_problem(0).dump()
    assert text.startswith("# sdp random") and "\nb " in text
