import numpy as np
import pytest

from causalqfi.channels import (
    depolarizing_family,
    rotation_damping_family,
    thermalizing_family,
)
from causalqfi.decomposition import (
    HermitianH,
    g_expr,
    performance_operator,
    reference_decomposition,
    schur_block,
    wire_labels,
)
from causalqfi.hilbert import LabeledOperator, partial_trace, tensor_product
from causalqfi.sdp.ir import AffineExpr, ConicProgram


def rand_herm(d, rng):
    m = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (m + m.conj().T) / 2


def test_reference_matches_tensor_power_choi():
    fam = rotation_damping_family(theta=0.4, u=0.3)
    ref = reference_decomposition(fam, 2)
    assert ref.q == 4 and ref.dim == 16
    c1, _ = fam.choi("A1I", "A1O")
    c2, _ = fam.choi("A2I", "A2O")
    assert ref.choi().allclose(tensor_product(c1, c2))


def test_reference_dchoi_matches_derivative():
    fam = thermalizing_family(theta=1.2, epsilon=0.7)
    ref = reference_decomposition(fam, 2)
    h = 1e-6
    lo = reference_decomposition(fam.at(1.2 - h), 2).choi()
    hi = reference_decomposition(fam.at(1.2 + h), 2).choi()
    fd = (hi.data - lo.data) / (2 * h)
    assert np.allclose(ref.dchoi().data, fd, atol=1e-6)


def test_gauge_invariance_of_choi_derivative_pair():
    # Replacing G = dC0 by dC0 - i C0 h preserves d(C0 C0^dag)/dtheta when
    # h is Hermitian: the correction contributes C0 (-ih) C0^dag + h.c. = 0
    # only in the skew part; the full pair (C0, G) still reproduces dC via
    # G C0^dag + C0 G^dag = dC - i C0 h C0^dag + i C0 h C0^dag.
    fam = rotation_damping_family(theta=0.4, u=0.2)
    ref = reference_decomposition(fam, 1)
    rng = np.random.default_rng(0)
    h = rand_herm(ref.q, rng)
    g = ref.dc0 - 1j * ref.c0 @ h
    lhs = g @ ref.c0.conj().T + ref.c0 @ g.conj().T
    assert np.allclose(lhs, ref.dchoi().data, atol=1e-10)


def test_performance_operator_value():
    fam = depolarizing_family(theta=0.5)
    ref = reference_decomposition(fam, 1)
    omega = performance_operator(ref, None)
    assert omega.is_psd()
    g = ref.dc0
    assert np.allclose(omega.data, 4 * np.conj(g @ g.conj().T))
    rng = np.random.default_rng(1)
    h = HermitianH(rand_herm(ref.q, rng))
    omega_h = performance_operator(ref, h)
    gh = ref.dc0 - 1j * ref.c0 @ h.data
    assert np.allclose(omega_h.data, 4 * np.conj(gh @ gh.conj().T))


def test_parallel_payoff_matches_closed_form():
    # For one copy of the depolarizing channel at h = 0 the parallel payoff
    # with the maximally mixed probe is 3 / ((1-theta)(1+3theta)).
    theta = 0.35
    ref = reference_decomposition(depolarizing_family(theta=theta), 1)
    omega = performance_operator(ref, None)
    w = LabeledOperator(ref.wires, np.kron(np.eye(2) / 2, np.eye(2)))
    payoff = np.trace(omega.data @ w.data).real
    assert np.isclose(payoff, 3 / ((1 - theta) * (1 + 3 * theta)), atol=1e-10)


def test_hermitian_h_validation():
    with pytest.raises(ValueError):
        HermitianH(np.array([[0.0, 1.0], [0.0, 0.0]]))
    h = HermitianH(np.eye(3))
    assert h.dim == 3


@pytest.mark.parametrize("last_wire", ["A1O", "A2O", "all", None])
def test_schur_block_tracks_omega(last_wire):
    # Evaluating the Schur block at a numeric assignment, the off-diagonal
    # factor satisfies C C^dag = Tr_sel Omega(h), so the block is PSD
    # exactly when S >= Tr_sel Omega(h).
    fam = rotation_damping_family(theta=0.3, u=0.4)
    ref = reference_decomposition(fam, 2)
    rng = np.random.default_rng(2)
    hval = rand_herm(ref.q, rng)

    prog = ConicProgram()
    h = prog.add_variable("h", ref.q)
    omega = performance_operator(ref, hval).data

    if last_wire == "all":
        s = prog.add_variable("s", 1)
        target = np.trace(omega.reshape(2, 2, 2, 2, 2, 2, 2, 2),
                          axis1=1, axis2=5)
        target = np.trace(target.reshape(2, 2, 2, 2, 2, 2),
                          axis1=2, axis2=5).reshape(4, 4)
        m_dim = 4 * ref.q
        sval = np.array([[np.linalg.eigvalsh(target).max() + 0.5]])
        s_eff = sval[0, 0] * np.eye(4)
    elif last_wire is None:
        s = prog.add_variable("s", ref.dim)
        target = omega
        m_dim = ref.q
        sval = target + 0.5 * np.eye(ref.dim)
        s_eff = sval
    else:
        s = prog.add_variable("s", ref.dim // 4)
        wires = ref.wire_dims
        op = LabeledOperator(ref.wires, omega)
        target = partial_trace(op, [last_wire]).data
        m_dim = 2 * ref.q
        sub = rand_herm(ref.dim // 4, rng)
        sub = sub @ sub.conj().T + np.eye(ref.dim // 4)
        sval = sub
        in_wire = last_wire[:-1] + "I"
        rest = [w for w in ref.wires if w.name != last_wire]
        s_eff = tensor_product(
            LabeledOperator([w for w in rest if w.name != in_wire], sub),
            LabeledOperator([w for w in rest if w.name == in_wire], np.eye(2)),
        ).data

    blk = schur_block(ref, s, h, last_wire)
    val = blk.value({"h": hval, "s": sval})
    assert np.allclose(val, val.conj().T, atol=1e-9)
    c = val[m_dim:, :m_dim]
    if last_wire is not None and last_wire != "all":
        assert np.allclose(c @ c.conj().T, target, atol=1e-8)
    elif last_wire == "all":
        assert np.allclose(c @ c.conj().T, target, atol=1e-8)
    else:
        assert np.allclose(c @ c.conj().T, target, atol=1e-8)
    # Schur complement: block PSD iff S_eff - C C^dag >= 0
    comp = s_eff - c @ c.conj().T
    block_psd = np.linalg.eigvalsh(val).min() > -1e-9
    comp_psd = np.linalg.eigvalsh(comp).min() > -1e-9
    assert block_psd == comp_psd


def test_wire_labels_sorted():
    labels = wire_labels(3, 2)
    names = [s.name for s in labels]
    assert names == sorted(names)
    assert names == ["A1I", "A1O", "A2I", "A2O", "A3I", "A3O"]
