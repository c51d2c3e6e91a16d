"""Quick self-contained invariant suite backing ``qfi validate``.

Each check returns (name, passed, detail); the CLI renders the matrix.
These are smoke-level versions of the full test suite, fast enough to run
on every install.
"""

from __future__ import annotations

import numpy as np

from .channels import depolarizing_family, random_family
from .classes import (
    StrategyClass,
    is_member,
    n_parallel_circuit,
    quantum_switch,
    sequential_circuit,
    strip_future,
)
from .decomposition import performance_operator, reference_decomposition
from .hilbert import LabeledOperator, SystemLabel, link_product, partial_trace
from .metrology import (
    crosscheck,
    optimize_qfi,
    output_state_family,
    qfi_direct,
    reconstruct_optimal,
)


def _rand_op(systems, rng, psd=False):
    d = int(np.prod([s.dim for s in systems]))
    m = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    if psd:
        m = m @ m.conj().T
    else:
        m = (m + m.conj().T) / 2
    return LabeledOperator(systems, m)


def _check_link_laws():
    rng = np.random.default_rng(7)
    a_sys = [SystemLabel("X", 2), SystemLabel("Y", 3)]
    b_sys = [SystemLabel("Y", 3), SystemLabel("Z", 2)]
    a = _rand_op(a_sys, rng)
    b = _rand_op(b_sys, rng)
    comm = link_product(a, b).allclose(link_product(b, a), atol=1e-10)
    c = _rand_op([SystemLabel("Z", 2), SystemLabel("W", 2)], rng)
    assoc = link_product(link_product(a, b), c).allclose(
        link_product(a, link_product(b, c)), atol=1e-9)
    ok = comm and assoc
    return ("link product laws", ok,
            f"commutative={comm} associative={assoc}")


def _check_schur_lemma():
    rng = np.random.default_rng(11)
    ok = True
    for _ in range(5):
        c = rng.standard_normal((3, 5)) + 1j * rng.standard_normal((3, 5))
        s = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        s = s @ s.conj().T + rng.uniform(-2, 2) * np.eye(3)
        block = np.block([[np.eye(5), c.conj().T], [c, s]])
        lhs = np.linalg.eigvalsh(block).min() >= -1e-10
        rhs = np.linalg.eigvalsh(s - c @ c.conj().T).min() >= -1e-10
        ok = ok and (lhs == rhs)
    return ("Schur complement equivalence", ok, "5 random instances")


def _check_omega_psd():
    fam = random_family(theta=0.4, seed=3)
    ref = reference_decomposition(fam, 2)
    rng = np.random.default_rng(5)
    h = rng.standard_normal((ref.q, ref.q)) \
        + 1j * rng.standard_normal((ref.q, ref.q))
    h = (h + h.conj().T) / 2
    omega = performance_operator(ref, h)
    lo = np.linalg.eigvalsh(omega.data).min()
    return ("performance operator PSD", lo >= -1e-8, f"min eig {lo:.1e}")


def _check_qfi_additivity():
    fam = depolarizing_family(theta=0.3)
    w1 = n_parallel_circuit(1)
    rho_op, drho_op = output_state_family(w1, fam, 1)
    rho, drho = rho_op.data, drho_op.data
    j1 = qfi_direct(rho, drho)
    rho2 = np.kron(rho, rho)
    drho2 = np.kron(drho, rho) + np.kron(rho, drho)
    j2 = qfi_direct(rho2, drho2)
    ok = abs(j2 - 2 * j1) <= 1e-8 * max(1.0, j2)
    return ("direct QFI additivity", ok, f"J2={j2:.6f} 2*J1={2 * j1:.6f}")


def _check_closed_form():
    theta = 0.5
    fam = depolarizing_family(theta=theta)
    res = optimize_qfi(fam, 1, StrategyClass.GENERAL)
    want = 3.0 / ((1 - theta) * (1 + 3 * theta))
    ok = abs(res.qfi - want) <= 1e-6 * want
    return ("depolarizing N=1 closed form", ok,
            f"J={res.qfi:.8f} want {want:.8f}")


def _check_membership():
    seq = sequential_circuit(2).projector()
    sw = strip_future(quantum_switch().projector())
    ok_seq = is_member(strip_future(seq), StrategyClass.FIXED_ORDER)
    ok_sw = is_member(sw, StrategyClass.SUPERPOSITION)
    ok = ok_seq and ok_sw
    return ("class membership", ok,
            f"sequential in QC-FO={ok_seq}, traced switch in QC-Sup={ok_sw}")


def _check_reconstruction():
    fam = depolarizing_family(theta=0.5)
    res = optimize_qfi(fam, 1, StrategyClass.GENERAL)
    wt, pure = reconstruct_optimal(fam, 1, StrategyClass.GENERAL, res.h_opt)
    rin = partial_trace(wt, ["A1O"]).data
    rin = rin / np.trace(rin)
    mixed = np.linalg.norm(rin - np.eye(2) / 2) <= 1e-6
    report = crosscheck(res, pure, fam)
    ok = mixed and report.passed
    return ("saddle reconstruction", ok,
            f"input maximally mixed={mixed}, crosscheck={report.passed}")


def run_validation():
    checks = [
        _check_link_laws,
        _check_schur_lemma,
        _check_omega_psd,
        _check_qfi_additivity,
        _check_closed_form,
        _check_membership,
        _check_reconstruction,
    ]
    results = []
    for check in checks:
        try:
            results.append(check())
        except Exception as exc:  # surface, don't crash the matrix
            results.append((check.__name__, False, f"error: {exc}"))
    return results
