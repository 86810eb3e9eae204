import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mubrobust.analysis import scan_subsets
from mubrobust.bounds import (
    charpoly_quartic,
    compute_lambda,
    eta_low_recursive,
    eta_low_sequence,
    eta_low_value,
    eta_up_charpoly_k4,
    eta_up_general,
    eta_up_rank1,
    eta_up_simple,
    newton_elementary,
    newton_traces,
    optimal_alpha,
)
from mubrobust.errors import BudgetExceededError, InvalidInputError, ZeroDenominatorError
from mubrobust.linalg import real_poly_roots
from mubrobust.mub import MeasurementSet, build_mub, to_measurements

SQ = math.sqrt


def brute_lambda(m: MeasurementSet) -> float:
    """Independent scan: one eigvalsh per tuple, no blocking, no symmetry."""
    best = -math.inf
    for j in itertools.product(*[range(n) for n in m.outcome_counts]):
        s = sum(m.ops[x][a] for x, a in enumerate(j))
        best = max(best, np.linalg.eigvalsh(s)[-1])
    return best


def test_lambda_single_measurement():
    m = to_measurements(build_mub(3), [0])
    assert compute_lambda(m).lam == pytest.approx(1)


@pytest.mark.parametrize("d", [2, 3, 4, 5, 7, 8, 9])
def test_lambda_pairs(d):
    lr = compute_lambda(to_measurements(build_mub(d), [0, 1]))
    assert lr.lam == pytest.approx(1 + 1 / SQ(d), abs=1e-12)


@pytest.mark.parametrize("d,k", [(2, 3), (3, 3), (3, 4), (4, 3), (4, 5), (5, 3), (5, 4), (7, 3)])
def test_lambda_symmetry_reduction_matches_brute_force(d, k):
    mubs = build_mub(d)
    for subset in list(itertools.combinations(range(d + 1), k))[:3]:
        m = to_measurements(mubs, subset)
        red = compute_lambda(m)
        full = compute_lambda(m, symmetry=False)
        assert red.method == "symmetry-reduced" and full.method == "exhaustive"
        assert red.lam == pytest.approx(full.lam, abs=1e-12)
        assert red.lam == pytest.approx(brute_lambda(m), abs=1e-12)
        for j in full.argmax_tuples:
            s = sum(m.ops[x][a] for x, a in enumerate(j))
            assert abs(np.linalg.eigvalsh(s)[-1] - full.lam) <= full.tie_tol


def test_lambda_budget():
    m = to_measurements(build_mub(5), range(5))
    with pytest.raises(BudgetExceededError):
        compute_lambda(m, budget=100, symmetry=False)
    lr = compute_lambda(m, budget=100, symmetry=False, truncate=True)
    assert lr.method == "budget-truncated" and not lr.complete
    assert lr.lam <= compute_lambda(m).lam + 1e-12
    rep = eta_up_rank1(m, lam=lr)
    assert not rep.certifying


def test_lambda_bound_for_mub():
    for d in (2, 3, 4, 5, 7):
        for k in range(2, d + 2):
            lam = compute_lambda(to_measurements(build_mub(d), range(k))).lam
            assert lam <= 1 + (k - 1) / SQ(d) + 1e-9


def test_general_bound_errors_and_specialisation():
    half = np.array([np.eye(2) / 2, np.eye(2) / 2])
    with pytest.raises(ZeroDenominatorError):
        eta_up_general(MeasurementSet([half, half]))
    m = to_measurements(build_mub(3), [0, 1])
    assert eta_up_general(m).value == pytest.approx(eta_up_rank1(m).value, abs=1e-14)
    assert eta_up_general(m).value == pytest.approx((1 + SQ(3)) / 4, abs=1e-12)


@pytest.mark.parametrize(
    "d,k,value",
    [
        (2, 2, 1 / SQ(2)),
        (3, 2, (1 + SQ(3)) / 4),
        (4, 2, 2 / 3),
        (5, 2, (3 + SQ(5)) / 8),
        (7, 2, (5 + SQ(7)) / 12),
        (2, 3, 1 / SQ(3)),
        (3, 3, math.cos(math.pi / 18) / SQ(3)),
        (3, 4, (1 + 3 * SQ(5)) / 16),
        (4, 4, 0.5),
        (4, 5, (3 + 2 * SQ(3)) / 15),
    ],
)
def test_rank1_closed_forms(d, k, value):
    rep = eta_up_rank1(to_measurements(build_mub(d), range(k)))
    assert rep.value == pytest.approx(value, abs=1e-9)
    assert rep.certifying


def test_rank1_invariant_under_relabelling():
    rng = np.random.default_rng(1)
    m = to_measurements(build_mub(5), [0, 1, 3])
    base = eta_up_rank1(m).value
    for _ in range(5):
        ops = [o[rng.permutation(5)] for o in m.ops]
        ops = [ops[i] for i in rng.permutation(3)]
        assert eta_up_rank1(MeasurementSet(ops)).value == pytest.approx(base, abs=1e-10)


def test_simple_bound():
    assert eta_up_simple(2, 2).value == pytest.approx(1 / SQ(2))
    assert eta_up_simple(1, 7).value == pytest.approx(1)
    assert eta_up_simple(3, 4).value == pytest.approx(5 / 9)
    with pytest.raises(InvalidInputError):
        eta_up_simple(0, 3)


def test_report_serialises():
    rep = eta_up_rank1(to_measurements(build_mub(3), [0, 1]))
    data = json.loads(rep.to_json())
    assert data["kind"] == "upper_rank1" and "lambda" in data


def test_charpoly_published_arithmetic():
    r6 = eta_up_charpoly_k4(6, traces="published")
    assert r6.lam == pytest.approx(2.183, abs=1e-3)
    assert r6.value == pytest.approx(0.4550, abs=1e-3)
    assert not r6.certifying
    assert eta_up_charpoly_k4(10, traces="published").value == pytest.approx(0.4213, abs=1e-3)
    with pytest.raises(InvalidInputError):
        eta_up_charpoly_k4(4)
    with pytest.raises(InvalidInputError):
        eta_up_charpoly_k4(6, traces="other")


@pytest.mark.parametrize("d", [5, 6, 7, 10, 11])
def test_exact_charpoly_equals_simple_bound(d):
    rep = eta_up_charpoly_k4(d)
    assert rep.certifying
    assert rep.lam == pytest.approx(1 + 3 / SQ(d), abs=1e-9)
    assert rep.value == pytest.approx(eta_up_simple(4, d).value, abs=1e-9)


def test_charpoly_soundness_for_d7():
    worst = max(r.eta_up for r in scan_subsets(7, 4).records)
    assert worst == pytest.approx(0.451586, abs=1e-6)
    assert eta_up_charpoly_k4(7).value >= worst - 1e-12
    # the shortened trace formula undercuts a real quadruple
    assert eta_up_charpoly_k4(7, traces="published").value < worst


def test_newton_elementary_against_numpy_poly():
    rng = np.random.default_rng(0)
    x = rng.normal(size=4)
    p = [float(np.sum(x**n)) for n in range(1, 5)]
    e = newton_elementary(p)
    want = np.poly(x)  # 1, -e1, e2, -e3, e4
    assert np.allclose([-want[1], want[2], -want[3], want[4]], e)


def test_quartic_roots_are_spectrum_of_actual_sums():
    m = to_measurements(build_mub(5), [0, 1, 2, 3])
    rng = np.random.default_rng(3)
    for _ in range(10):
        j = rng.integers(5, size=4)
        nt = newton_traces(m, j)
        assert abs(nt.sigma3.imag) <= 1e-12
        assert nt.closed_form_residual(4, 5) <= 1e-10
        s = sum(m.ops[x][a] for x, a in enumerate(j))
        top = np.sort(np.linalg.eigvalsh(s))[-4:]
        roots = np.sort(np.roots(charpoly_quartic(4, 5, nt.sigma3.real, nt.sigma4.real)).real)
        assert np.allclose(roots, top, atol=1e-8)


def test_newton_traces_pairs():
    for d in (2, 3, 5):
        nt = newton_traces(to_measurements(build_mub(d), [0, 1]), (0, 1))
        assert nt.traces[0] == pytest.approx(2)
        assert nt.traces[1] == pytest.approx(2 * (1 / d + 1))
        assert nt.sigma3 == 0


@pytest.mark.parametrize("published", [False, True])
def test_quartic_root_monotone_in_overlap_products(published):
    d, k = 6, 4
    grid3 = np.linspace(0, 24 / d**1.5, 9)
    grid4 = np.linspace(0, 24 / d**2, 9)
    top = np.array(
        [[real_poly_roots(charpoly_quartic(k, d, a, b, published))[-1] for b in grid4] for a in grid3]
    )
    assert np.all(np.diff(top, axis=0) >= -1e-12)
    assert np.all(np.diff(top, axis=1) >= -1e-12)


LOW_TABLE_SPOT = [(2, 4, 0.6667), (3, 5, 0.5113), (8, 7, 0.2634), (3, 4, 0.5263), (2, 2, 0.7071)]


@pytest.mark.parametrize("k,d,value", LOW_TABLE_SPOT)
def test_lower_bound_values(k, d, value):
    assert eta_low_recursive(k, d).value == pytest.approx(value, abs=1e-4)


def test_lower_bound_first_stages():
    for d in range(2, 10):
        assert eta_low_recursive(1, d).value == 1.0
        alphas, _ = eta_low_sequence(3, d)
        assert alphas[0] == pytest.approx(1, abs=1e-9)
        sd = SQ(d)
        closed = (SQ(5 * d + 12 * sd + 8) - sd) / (2 * (sd + 2))
        assert alphas[1] == pytest.approx(closed, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 8), st.integers(2, 9), st.integers(0, 2**31))
def test_greedy_alphas_beat_random_joint_choices(k, d, seed):
    rng = np.random.default_rng(seed)
    alphas, etas = eta_low_sequence(k, d)
    best = etas[-1]
    for _ in range(50):
        trial = np.array(alphas) * np.exp(rng.normal(scale=0.3, size=len(alphas)))
        assert eta_low_value(d, trial) <= best + 1e-13


def test_optimal_alpha_is_stationary():
    a = optimal_alpha(4, 5, 0.5)
    from mubrobust.bounds import stage_value

    h = 1e-6
    assert stage_value(4, 5, 0.5, a) >= stage_value(4, 5, 0.5, a + h)
    assert stage_value(4, 5, 0.5, a) >= stage_value(4, 5, 0.5, a - h)


@pytest.mark.parametrize("d,kmax", [(2, 3), (3, 4), (4, 5), (5, 6), (7, 8), (8, 5), (9, 5)])
def test_bound_ordering(d, kmax):
    mubs = build_mub(d)
    for k in range(2, kmax + 1):
        low = eta_low_recursive(k, d).value
        up = eta_up_rank1(to_measurements(mubs, range(k))).value
        assert low <= up + 1e-12
        assert up <= eta_up_simple(k, d).value + 1e-12
