import math

import numpy as np
import pytest

from mubrobust.bounds import eta_low_recursive, eta_low_sequence, eta_low_value, eta_up_rank1
from mubrobust.errors import BudgetExceededError, InvalidInputError, NotAParentError
from mubrobust.jointmeas import (
    RobustnessOptions,
    check_parent,
    dual_ansatz,
    lower_bound_parent,
    parent_guess,
    parent_sequence,
    robustness,
    sequence_eta,
    white_noise_parent,
)
from mubrobust.mub import MeasurementSet, build_mub, construct_mub, to_measurements
from mubrobust.sdp import solve_sdp
from mubrobust.jointmeas import build_primal

SQ = math.sqrt


def mub(d, subset):
    return to_measurements(build_mub(d), subset)


def test_dual_ansatz_pair_d5():
    cert = dual_ansatz(mub(5, [0, 1]))
    assert abs(cert.scalar_slack) <= 1e-10
    assert cert.feasible
    assert cert.value == pytest.approx((3 + SQ(5)) / 8, abs=1e-12)


@pytest.mark.parametrize("d,k", [(2, 3), (3, 3), (3, 4), (4, 3), (5, 3)])
def test_dual_ansatz_bounds_sdp(d, k):
    m = mub(d, range(k))
    cert = dual_ansatz(m)
    assert cert.min_tuple_eigenvalue >= -1e-9
    sol = solve_sdp(build_primal(m))
    assert cert.value >= sol.primal_value - 1e-7
    assert sol.primal_value <= sol.dual_value + 1e-8


def test_parent_guess_pair_qubit():
    m = mub(2, [0, 1])
    g = parent_guess(m)
    assert len(g) == 4
    assert np.allclose(np.trace(g.operators, axis1=1, axis2=2).real * g.normalization, 1)
    assert check_parent(g, m).eta == pytest.approx(1 / SQ(2), abs=1e-12)


@pytest.mark.parametrize(
    "d,subset,value",
    [
        (3, [0, 1, 2, 3], (1 + 3 * SQ(5)) / 16),
        (4, [0, 1, 2, 3, 4], (3 + 2 * SQ(3)) / 15),
        (5, [0, 1, 3], (1 + SQ(5)) / 6),
        (5, [0, 1, 2], (13 - SQ(5) + SQ(30 * (5 + SQ(5)))) / 48),
    ],
)
def test_parent_guess_closed_forms(d, subset, value):
    m = mub(d, subset)
    g = parent_guess(m)
    assert g.meta["idempotency"] <= 1e-9
    chk = check_parent(g, m)
    assert chk.eta == pytest.approx(value, abs=1e-9)
    assert chk.min_eigenvalue >= -1e-9


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_tightness_for_d_and_d_plus_one(d):
    mubs = build_mub(d)
    for k in (d, d + 1):
        m = to_measurements(mubs, range(k))
        chk = check_parent(parent_guess(m), m)
        assert chk.eta == pytest.approx(eta_up_rank1(m).value, abs=1e-7)


def test_guess_fails_where_sdp_reaches_bound_d9():
    m = mub(9, [0, 1, 2])
    up = eta_up_rank1(m).value
    with pytest.raises(NotAParentError):
        check_parent(parent_guess(m), m)
    sol = solve_sdp(build_primal(m))
    assert sol.primal_value == pytest.approx(up, abs=5e-4)


def test_white_noise_parent():
    m = mub(3, [0, 1, 2])
    chk = check_parent(white_noise_parent(m), m)
    assert chk.eta == pytest.approx(0, abs=1e-12)


def test_check_parent_rejects():
    m = mub(3, [0, 1])
    g = parent_sequence(m, 1)
    bad = type(g)(g.dim, g.counts, g.tuples, g.operators.copy(), g.normalization)
    bad.operators[0] = bad.operators[0] + 0.05 * np.diag([1, -1, 0])
    with pytest.raises(NotAParentError):
        check_parent(bad, m)
    with pytest.raises(InvalidInputError):
        check_parent(g, mub(3, [0, 1, 2]))


def test_sequence_closed_forms_random_instances():
    rng = np.random.default_rng(7)
    done = 0
    while done < 20:
        d = int(rng.choice([2, 3, 4, 5]))
        k = int(rng.integers(2, d + 2))
        subset = sorted(rng.choice(d + 1, size=k, replace=False))
        m = mub(d, subset)
        for n in range(1, 5):
            assert check_parent(parent_sequence(m, n), m).eta == pytest.approx(sequence_eta(k, d, n), abs=1e-8)
        done += 1


def test_sequence_examples():
    m = mub(3, [0, 1, 2])
    assert check_parent(parent_sequence(m, 2), m).eta == pytest.approx(7 / 15, abs=1e-12)
    full = mub(3, range(4))
    eta64 = check_parent(parent_sequence(full, 64), full).eta
    assert eta64 == pytest.approx((1 + 3 * SQ(5)) / 16, abs=1e-6)
    with pytest.raises(InvalidInputError):
        parent_sequence(m, 0)
    with pytest.raises(InvalidInputError):
        sequence_eta(3, 3, 5)
    with pytest.raises(BudgetExceededError):
        parent_sequence(m, 2, budget=10)


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_sequence_sums_to_identity(d):
    mubs = build_mub(d)
    for k in range(2, d + 2):
        m = to_measurements(mubs, range(k))
        for n in range(1, 7):
            assert parent_sequence(m, n).meta["deviation"] <= 1e-8


def test_operator_diagonal_in_two_mub_has_constant_diagonal():
    rng = np.random.default_rng(0)
    for d in (3, 4, 5, 7):
        mubs = build_mub(d)
        u, v = mubs.bases[0].vectors, mubs.bases[1].vectors
        # commutes with both bases' projectors: built from their joint commutant
        for _ in range(5):
            op = sum(c * np.outer(u[:, a], u[:, a].conj()) for a, c in enumerate(rng.normal(size=d)))
            # projecting onto operators diagonal in v as well
            pinched = sum(np.outer(v[:, b], v[:, b].conj()) @ op @ np.outer(v[:, b], v[:, b].conj()) for b in range(d))
            both = sum(np.outer(u[:, a], u[:, a].conj()) @ pinched @ np.outer(u[:, a], u[:, a].conj()) for a in range(d))
            diag_u = np.einsum("ia,ij,ja->a", u.conj(), both, u).real
            assert np.ptp(diag_u) <= 1e-9


def test_lower_bound_parent():
    m = mub(2, [0, 1])
    chk = check_parent(lower_bound_parent(m, [1.0]), m)
    assert chk.eta == pytest.approx(1 / SQ(2), abs=1e-12)
    m = mub(4, [0, 1, 2])
    alphas, _ = eta_low_sequence(3, 4)
    assert check_parent(lower_bound_parent(m, alphas), m).eta == pytest.approx(0.5263, abs=1e-4)
    small = [1.0, 1e-6]
    assert check_parent(lower_bound_parent(m, small), m).eta == pytest.approx(eta_low_value(4, small), abs=1e-10)


def test_lower_bound_parent_random_alphas():
    rng = np.random.default_rng(2)
    for d, k in [(3, 3), (3, 4), (5, 3), (4, 4)]:
        m = mub(d, range(k))
        alphas = list(rng.uniform(0.1, 3, size=k - 1))
        assert check_parent(lower_bound_parent(m, alphas), m).eta == pytest.approx(eta_low_value(d, alphas), abs=1e-10)
    with pytest.raises(InvalidInputError):
        lower_bound_parent(mub(3, [0, 1]), [1.0, 1.0])
    with pytest.raises(InvalidInputError):
        lower_bound_parent(mub(3, [0, 1]), [-1.0])


def test_lower_bound_parent_needs_unbiased_input():
    comp = np.array([np.diag([1.0, 0]), np.diag([0, 1.0])])
    with pytest.raises(InvalidInputError):
        lower_bound_parent(MeasurementSet([comp, comp]), [1.0])


@pytest.mark.parametrize(
    "d,subset,value,method",
    [
        (7, [0, 1], (5 + SQ(7)) / 12, "certificate"),
        (7, range(7), 0.3685, "certificate"),
        (7, range(8), 0.3318, "certificate"),
        (4, range(3), 0.5469, "sdp"),
    ],
)
def test_robustness_examples(d, subset, value, method):
    rep = robustness(mub(d, subset))
    assert rep.method == method
    assert rep.eta == pytest.approx(value, abs=5e-4)
    assert rep.lower <= rep.eta + 1e-9 and rep.eta <= rep.upper + 1e-9


def test_robustness_single_and_out_of_budget():
    rep = robustness(mub(3, [1]))
    assert rep.eta == 1.0
    rep = robustness(mub(7, range(5)), RobustnessOptions(use_certificate=False))
    assert rep.method == "bounds" and rep.eta is None
    assert rep.lower <= rep.upper


def test_robustness_sdp_only_agrees_with_certificate():
    m = mub(3, range(4))
    cert = robustness(m)
    sdp = robustness(m, RobustnessOptions(use_certificate=False))
    assert cert.method == "certificate" and sdp.method == "sdp"
    assert sdp.eta == pytest.approx(cert.eta, abs=1e-7)


def test_bisection_fallback_brackets_value():
    m = mub(2, range(3))
    rep = robustness(m, RobustnessOptions(use_certificate=False, max_iter=3))
    assert rep.method == "sdp-bisection"
    assert rep.eta == pytest.approx(1 / SQ(3), abs=1e-5)


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_sandwich(d):
    mubs = build_mub(d)
    for k in range(2, d + 2):
        m = to_measurements(mubs, range(k))
        if m.n_tuples > 4096:
            continue
        eta = robustness(m, RobustnessOptions(use_certificate=False)).eta
        assert eta_low_recursive(k, d).value <= eta + 1e-6
        assert eta <= eta_up_rank1(m).value + 1e-6


def test_product_set_d6():
    m = to_measurements(construct_mub(6))
    rep = robustness(m)
    assert rep.method == "sdp"
    assert rep.eta == pytest.approx(0.5204, abs=5e-4)
