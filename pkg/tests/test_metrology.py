import math

import numpy as np
import pytest

from causalqfi.channels import (
    depolarizing_family,
    pauli_family,
    random_family,
    rotation_damping_family,
    thermalizing_family,
)
from causalqfi.classes import (
    StrategyClass,
    n_choi_circuit,
    n_parallel_circuit,
    quantum_switch,
    sequential_circuit,
)
from causalqfi.hilbert import LabeledOperator, SystemLabel, partial_trace
from causalqfi.metrology import (
    crosscheck,
    hierarchy_report,
    optimize_qfi,
    output_state_family,
    purify,
    qfi_direct,
    reconstruct_optimal,
)


def thermal_population(theta, eps=1.0):
    p = 1.0 / (1.0 + math.exp(-eps / theta))
    dp = -eps / theta**2 * math.exp(-eps / theta) \
        / (1.0 + math.exp(-eps / theta)) ** 2
    return p, dp


# ---------------------------------------------------------------------------
# qfi_direct


def test_qfi_direct_thermal_qubit():
    theta = 0.8
    p, dp = thermal_population(theta)
    rho = np.diag([p, 1 - p]).astype(complex)
    drho = np.diag([dp, -dp]).astype(complex)
    want = (1 / p + 1 / (1 - p)) * dp**2
    assert qfi_direct(rho, drho) == pytest.approx(want, rel=1e-12)


def test_qfi_direct_zero_derivative():
    rho = np.diag([0.25, 0.75]).astype(complex)
    assert qfi_direct(rho, np.zeros((2, 2))) == 0.0


def test_qfi_direct_additive_on_tensor_square():
    theta = 0.6
    p, dp = thermal_population(theta)
    rho = np.diag([p, 1 - p]).astype(complex)
    drho = np.diag([dp, -dp]).astype(complex)
    j1 = qfi_direct(rho, drho)
    rho2 = np.kron(rho, rho)
    drho2 = np.kron(drho, rho) + np.kron(rho, drho)
    assert qfi_direct(rho2, drho2) == pytest.approx(2 * j1, rel=1e-12)


def test_qfi_direct_rejects_non_hermitian():
    with pytest.raises(ValueError):
        qfi_direct(np.array([[0.5, 1.0], [0.0, 0.5]]), np.zeros((2, 2)))
    with pytest.raises(ValueError):
        qfi_direct(np.eye(2) / 2, np.array([[0.0, 1.0], [0.0, 0.0]]))


# ---------------------------------------------------------------------------
# output_state_family


def test_sequential_depolarizing_output_closed_form():
    theta = 0.35
    fam = depolarizing_family(theta=theta)
    rho, _ = output_state_family(sequential_circuit(2), fam, 2)
    psi = np.zeros((2, 2), dtype=complex)
    psi[0, 0] = 1.0
    want = theta**2 * psi + (1 - theta**2) * np.eye(2) / 2
    assert np.allclose(rho.data, want, atol=1e-12)


@pytest.mark.parametrize("build,n", [
    (lambda: quantum_switch(), 2),
    (lambda: sequential_circuit(2), 2),
    (lambda: n_parallel_circuit(2), 2),
])
def test_output_derivative_matches_finite_difference(build, n):
    u = 0.35
    step = 1e-6
    w = build()
    fam = rotation_damping_family(theta=0.9, u=u)
    rho, drho = output_state_family(w, fam, n)
    hi, _ = output_state_family(w, fam.at(0.9 + step), n)
    lo, _ = output_state_family(w, fam.at(0.9 - step), n)
    fd = (hi.data - lo.data) / (2 * step)
    scale = max(1.0, np.abs(fd).max())
    assert np.abs(drho.data - fd).max() <= 1e-6 * scale


def test_operator_strategy_path_matches_pure_path():
    w = quantum_switch()
    fam = depolarizing_family(theta=0.45)
    rho_p, drho_p = output_state_family(w, fam, 2)
    rho_o, drho_o = output_state_family(w.projector(), fam, 2)
    assert rho_o.allclose(rho_p, atol=1e-10)
    assert drho_o.allclose(drho_p, atol=1e-10)


def test_output_state_family_rejects_missing_wires():
    fam = depolarizing_family(theta=0.5)
    with pytest.raises(ValueError):
        output_state_family(sequential_circuit(2), fam, 3)


# ---------------------------------------------------------------------------
# optimize_qfi


def test_pauli_invariance_single_copy():
    theta = 0.3
    fam = pauli_family(theta=theta, alpha=0.2, beta=0.5, gamma=0.3)
    want = 1.0 / (theta * (1 - theta))
    for cls in (StrategyClass.PARALLEL, StrategyClass.GENERAL):
        res = optimize_qfi(fam, 1, cls)
        assert res.qfi == pytest.approx(want, rel=1e-6)
        assert res.qfi >= 0
        assert res.gap <= 1e-6 * max(1.0, res.qfi)


def test_parallel_rot_damping_closed_form_small_u():
    """For weak damping the two-copy parallel optimum has a closed form."""
    for u in (0.1, 0.3):
        fam = rotation_damping_family(theta=1.0, u=u)
        res = optimize_qfi(fam, 2, StrategyClass.PARALLEL)
        want = 4 * (1 - u) ** 2 / (1 - u / 2) ** 2
        assert res.qfi == pytest.approx(want, abs=1e-4)


def test_optimality_dominates_hand_built_strategies():
    fam = rotation_damping_family(theta=1.0, u=0.4)
    cases = [
        (StrategyClass.PARALLEL, [n_parallel_circuit(2), n_choi_circuit(2)]),
        (StrategyClass.FIXED_ORDER, [sequential_circuit(2)]),
        (StrategyClass.SUPERPOSITION, [quantum_switch()]),
    ]
    for cls, strategies in cases:
        res = optimize_qfi(fam, 2, cls)
        for w in strategies:
            j = qfi_direct(*output_state_family(w, fam, 2))
            assert res.qfi >= j - 1e-6


# ---------------------------------------------------------------------------
# reconstruction and crosscheck


def test_reconstruct_single_copy_depolarizing_maximally_mixed():
    fam = depolarizing_family(theta=0.5)
    res = optimize_qfi(fam, 1, StrategyClass.GENERAL)
    wt, pure = reconstruct_optimal(fam, 1, StrategyClass.GENERAL, res.h_opt)
    rin = partial_trace(wt, ["A1O"]).data
    rin = rin / np.trace(rin)
    assert np.allclose(rin, np.eye(2) / 2, atol=1e-6)
    report = crosscheck(res, pure, fam)
    assert report.passed


def test_reconstruct_depolarizing_n2_general_is_flat():
    """The unrestricted two-copy optimum is the fully mixed process."""
    fam = depolarizing_family(theta=0.5)
    res = optimize_qfi(fam, 2, StrategyClass.GENERAL)
    wt, _ = reconstruct_optimal(fam, 2, StrategyClass.GENERAL, res.h_opt)
    flat = np.eye(16) / 4.0
    assert np.allclose(wt.data, flat, atol=1e-5)


def test_crosscheck_thermalizing_n2():
    fam = thermalizing_family(theta=1.0, epsilon=1.0)
    res = optimize_qfi(fam, 2, StrategyClass.PARALLEL)
    _, pure = reconstruct_optimal(fam, 2, StrategyClass.PARALLEL, res.h_opt)
    report = crosscheck(res, pure, fam)
    assert report.passed
    # the thermal optimum is achieved in parallel: compare with the oracle
    p, dp = thermal_population(1.0)
    want = 2 * dp**2 / (p * (1 - p))
    assert res.qfi == pytest.approx(want, rel=1e-6)


def test_purify_roundtrip():
    rng = np.random.default_rng(3)
    m = rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3))
    op = LabeledOperator([SystemLabel("A1I", 2), SystemLabel("A1O", 2)],
                         m @ m.conj().T)
    pure = purify(op)
    assert pure.label("F").dim == 3
    back = partial_trace(pure.projector(), ["F"])
    assert back.allclose(op, atol=1e-10)


# ---------------------------------------------------------------------------
# hierarchy


def test_hierarchy_rot_damping_n2():
    rep = hierarchy_report(rotation_damping_family(theta=1.0, u=0.5), 2)
    assert rep.pattern() == \
        "QC-Par < QC-FO < QC-Sup = QC-CC = QC-QC = Gen"
    assert not rep.all_equal()


def test_hierarchy_depolarizing_n2_collapses():
    rep = hierarchy_report(depolarizing_family(theta=0.5), 2)
    assert rep.all_equal()
    assert rep.results[0].qfi == pytest.approx(4.8, rel=1e-6)


def test_n2_super_classes_coincide_on_random_channel():
    fam = random_family(theta=0.5, seed=12)
    values = {
        cls: optimize_qfi(fam, 2, cls).qfi
        for cls in (StrategyClass.SUPERPOSITION,
                    StrategyClass.CLASSICAL_CONTROL,
                    StrategyClass.QUANTUM_CONTROL)
    }
    vals = list(values.values())
    assert max(vals) - min(vals) <= 1e-6
