import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from causalqfi.hilbert import (
    LabeledOperator,
    PureVector,
    SystemLabel,
    link_product,
    partial_trace,
    partial_transpose,
    pure_link_product,
    tensor_product,
    tensor_pure,
    traceout_replace,
)

A = SystemLabel("A", 2)
B = SystemLabel("B", 3)
C = SystemLabel("C", 2)


def rand_op(systems, rng, herm=False):
    d = int(np.prod([s.dim for s in systems]))
    m = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    if herm:
        m = (m + m.conj().T) / 2
    return LabeledOperator(systems, m)


def test_canonical_reorder():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    y = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    ab = LabeledOperator([A, B], np.kron(x, y))
    ba = LabeledOperator([B, A], np.kron(y, x))
    assert ab.systems == ba.systems == (A, B)
    assert ab.allclose(ba)


def test_duplicate_labels_rejected():
    with pytest.raises(ValueError):
        LabeledOperator([A, A], np.eye(4))


def test_immutability():
    op = LabeledOperator([A], np.eye(2))
    with pytest.raises(AttributeError):
        op.data = np.zeros((2, 2))
    with pytest.raises(ValueError):
        op.data[0, 0] = 5.0


def test_partial_trace_factorized():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    y = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    op = LabeledOperator([A, B], np.kron(x, y))
    red = partial_trace(op, ["B"])
    assert red.systems == (A,)
    assert np.allclose(red.data, x * np.trace(y))
    assert np.isclose(partial_trace(op, ["A", "B"]).data[0, 0], np.trace(x) * np.trace(y))


def test_partial_trace_preserves_full_trace():
    rng = np.random.default_rng(2)
    op = rand_op([A, B, C], rng)
    for names in (["A"], ["B"], ["A", "C"]):
        assert np.isclose(partial_trace(op, names).trace(), op.trace())


def test_partial_transpose_factorized_and_involutive():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    y = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    op = LabeledOperator([A, B], np.kron(x, y))
    pt = partial_transpose(op, ["B"])
    assert np.allclose(pt.data, np.kron(x, y.T))
    assert partial_transpose(pt, ["B"]).allclose(op)


def test_partial_transpose_bell_witness():
    # PT over one half of a maximally entangled pair has eigenvalue -1/2.
    bell = np.zeros(4, dtype=complex)
    bell[0] = bell[3] = 1 / np.sqrt(2)
    op = LabeledOperator([A, C], np.outer(bell, bell.conj()))
    w = np.linalg.eigvalsh(partial_transpose(op, ["C"]).data)
    assert np.isclose(w.min(), -0.5)


def test_link_product_choi_action():
    # Linking a Choi matrix with an input state over the input wire applies
    # the channel; checked against direct Kraus application for a unitary.
    theta = 0.7
    u = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    a_in = SystemLabel("in", 2)
    a_out = SystemLabel("out", 2)
    kk = u.T.reshape(-1)  # |U>> on (in, out), row-major
    choi = LabeledOperator([a_in, a_out], np.outer(kk, kk.conj()))
    rng = np.random.default_rng(4)
    m = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    rho = m @ m.conj().T
    rho /= np.trace(rho)
    out = link_product(LabeledOperator([a_in], rho), choi)
    assert out.systems == (a_out,)
    assert np.allclose(out.data, u @ rho @ u.conj().T)


def test_link_product_disjoint_is_tensor():
    rng = np.random.default_rng(5)
    x = rand_op([A], rng)
    y = rand_op([B], rng)
    assert link_product(x, y).allclose(tensor_product(x, y))


def test_link_product_full_overlap_is_transposed_trace():
    rng = np.random.default_rng(6)
    x = rand_op([A, B], rng)
    y = rand_op([A, B], rng)
    res = link_product(x, y)
    assert res.systems == ()
    assert np.isclose(res.data[0, 0], np.trace(x.data.T @ y.data))


def test_link_product_commutes():
    rng = np.random.default_rng(7)
    x = rand_op([A, B], rng)
    y = rand_op([B, C], rng)
    assert link_product(x, y).allclose(link_product(y, x))


def test_link_product_associative():
    rng = np.random.default_rng(8)
    d_w = SystemLabel("D", 2)
    x = rand_op([A, B], rng)
    y = rand_op([B, C], rng)
    z = rand_op([C, d_w], rng)
    lhs = link_product(link_product(x, y), z)
    rhs = link_product(x, link_product(y, z))
    assert lhs.allclose(rhs, atol=1e-9)


def test_pure_link_matches_operator_link():
    rng = np.random.default_rng(9)
    va = PureVector([A, B], rng.standard_normal(6) + 1j * rng.standard_normal(6))
    vb = PureVector([B, C], rng.standard_normal(6) + 1j * rng.standard_normal(6))
    pure = pure_link_product(va, vb)
    assert pure.systems == (A, C)
    full = link_product(va.projector(), vb.projector())
    assert full.allclose(pure.projector(), atol=1e-9)


def test_tensor_pure_and_projector():
    rng = np.random.default_rng(10)
    va = PureVector([A], rng.standard_normal(2) + 1j * rng.standard_normal(2))
    vb = PureVector([B], rng.standard_normal(3) + 1j * rng.standard_normal(3))
    vab = tensor_pure(va, vb)
    assert vab.projector().allclose(tensor_product(va.projector(), vb.projector()))


def test_traceout_replace_keep():
    rng = np.random.default_rng(11)
    op = rand_op([A, B], rng, herm=True)
    rep = traceout_replace(op, ["B"], keep=True)
    expected = tensor_product(partial_trace(op, ["B"]), LabeledOperator([B], np.eye(3) / 3))
    assert rep.allclose(expected)


def test_traceout_replace_complement_expansion():
    # _[1-X] _[1-Y] W = W - _X W - _Y W + _XY W, and single-wire
    # complements commute.
    rng = np.random.default_rng(12)
    op = rand_op([A, B, C], rng, herm=True)
    lhs = traceout_replace(op, ["A", "B"], keep=False)
    expansion = (
        op
        - traceout_replace(op, ["A"], keep=True)
        - traceout_replace(op, ["B"], keep=True)
        + traceout_replace(op, ["A", "B"], keep=True)
    )
    assert lhs.allclose(expansion, atol=1e-9)
    swapped = traceout_replace(traceout_replace(op, ["B"], keep=False), ["A"], keep=False)
    assert lhs.allclose(swapped, atol=1e-9)


def test_traceout_replace_is_projection():
    rng = np.random.default_rng(13)
    op = rand_op([A, B], rng, herm=True)
    once = traceout_replace(op, ["A"], keep=False)
    twice = traceout_replace(once, ["A"], keep=False)
    assert once.allclose(twice, atol=1e-9)


@st.composite
def three_chain(draw):
    d1 = draw(st.integers(2, 3))
    d2 = draw(st.integers(2, 3))
    d3 = draw(st.integers(2, 3))
    seed = draw(st.integers(0, 2**31 - 1))
    return d1, d2, d3, seed


@settings(max_examples=25, deadline=None)
@given(three_chain())
def test_link_product_properties(args):
    d1, d2, d3, seed = args
    rng = np.random.default_rng(seed)
    s1 = SystemLabel("X", d1)
    s2 = SystemLabel("Y", d2)
    s3 = SystemLabel("Z", d3)
    a = rand_op([s1, s2], rng, herm=True)
    b = rand_op([s2, s3], rng, herm=True)
    res = link_product(a, b)
    # Hermiticity is preserved and the link commutes.
    assert res.is_hermitian(atol=1e-9)
    assert res.allclose(link_product(b, a), atol=1e-9)
    # Linking with the identity over all remaining wires yields Tr[res^T].
    full = link_product(res, LabeledOperator([s1, s3], np.eye(d1 * d3)))
    assert np.isclose(complex(full.data[0, 0]), res.trace())
