import numpy as np
import pytest

from causalqfi.channels import (
    ChannelFamily,
    KrausRepresentation,
    choi_from_kraus,
    depolarizing_family,
    parse_channel_spec,
    pauli_family,
    random_family,
    rotation_damping_family,
    thermalizing_family,
)
from causalqfi.hilbert import LabeledOperator, SystemLabel, link_product

ALL_FAMILIES = [
    depolarizing_family(theta=0.3),
    depolarizing_family(theta=0.3, d=3),
    pauli_family(theta=0.4, alpha=0.5, beta=0.3, gamma=0.2),
    thermalizing_family(theta=1.3, epsilon=0.8),
    rotation_damping_family(theta=0.7, u=0.25),
    random_family(theta=0.9, seed=7),
]


@pytest.mark.parametrize("fam", ALL_FAMILIES, ids=lambda f: f"{f.name}-{f.params}")
def test_trace_preserving(fam):
    assert fam.kraus().is_trace_preserving()


@pytest.mark.parametrize("fam", ALL_FAMILIES, ids=lambda f: f"{f.name}-{f.params}")
def test_analytic_derivatives_match_finite_difference(fam):
    assert fam.check_derivatives()


def test_depolarizing_action():
    fam = depolarizing_family(theta=0.3)
    rng = np.random.default_rng(0)
    m = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    rho = m @ m.conj().T
    rho /= np.trace(rho)
    out = fam.kraus().apply(rho)
    assert np.allclose(out, 0.3 * rho + 0.7 * np.eye(2) / 2)


def test_pauli_action():
    fam = pauli_family(theta=0.4, alpha=0.5, beta=0.3, gamma=0.2)
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    rng = np.random.default_rng(1)
    m = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    rho = m @ m.conj().T
    expected = 0.4 * rho + 0.6 * (0.5 * sx @ rho @ sx + 0.3 * sy @ rho @ sy
                                  + 0.2 * sz @ rho @ sz)
    assert np.allclose(fam.kraus().apply(rho), expected)


def test_thermalizing_action():
    eps, th = 0.8, 1.3
    fam = thermalizing_family(theta=th, epsilon=eps)
    p = 1 / (1 + np.exp(-eps / th))
    rng = np.random.default_rng(2)
    m = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    rho = m @ m.conj().T
    rho /= np.trace(rho)
    assert np.allclose(fam.kraus().apply(rho), np.diag([p, 1 - p]))


def test_rotation_damping_limits():
    # u = 0 is the pure rotation; u = 1 maps everything to |0>.
    rho = np.array([[0.25, 0.1j], [-0.1j, 0.75]], dtype=complex)
    fam0 = rotation_damping_family(theta=0.6, u=0.0)
    uz = np.diag([np.exp(-0.3j), np.exp(0.3j)])
    assert np.allclose(fam0.kraus().apply(rho), uz @ rho @ uz.conj().T)
    fam1 = rotation_damping_family(theta=0.6, u=1.0)
    assert np.allclose(fam1.kraus().apply(rho), np.diag([1.0, 0.0]))


def test_random_family_reproducible_and_cptp():
    a = random_family(theta=0.3, seed=11).kraus()
    b = random_family(theta=0.3, seed=11).kraus()
    c = random_family(theta=0.3, seed=12).kraus()
    assert all(np.allclose(x, y) for x, y in zip(a.kraus, b.kraus))
    assert not all(np.allclose(x, y) for x, y in zip(a.kraus, c.kraus))
    assert a.is_trace_preserving()


def test_choi_matches_channel_action():
    for fam in ALL_FAMILIES:
        d = fam.dim
        choi, _ = fam.choi("in", "out")
        rng = np.random.default_rng(3)
        m = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        rho = m @ m.conj().T
        rho /= np.trace(rho)
        out = link_product(LabeledOperator([SystemLabel("in", d)], rho), choi)
        assert np.allclose(out.data, fam.kraus().apply(rho), atol=1e-10)


def test_choi_derivative_matches_finite_difference():
    fam = rotation_damping_family(theta=0.5, u=0.3)
    h = 1e-6
    _, dc = fam.choi()
    lo, _ = fam.at(0.5 - h).choi()
    hi, _ = fam.at(0.5 + h).choi()
    fd = (hi.data - lo.data) / (2 * h)
    assert np.allclose(dc.data, fd, atol=1e-6)


def test_choi_trace_and_marginal():
    # Tr C = d and Tr_out C = 1^in for a CPTP channel.
    from causalqfi.hilbert import partial_trace

    fam = depolarizing_family(theta=0.6, d=3)
    choi, _ = fam.choi()
    assert np.isclose(choi.trace(), 3.0)
    marg = partial_trace(choi, ["out"])
    assert np.allclose(marg.data, np.eye(3))


def test_parse_channel_spec():
    fam = parse_channel_spec({"family": "pauli", "theta": 0.2,
                              "alpha": 0.5, "beta": 0.25, "gamma": 0.25})
    assert fam.name == "pauli" and fam.theta == 0.2
    with pytest.raises(ValueError):
        parse_channel_spec({"family": "pauli", "bogus": 1})
    with pytest.raises(ValueError):
        parse_channel_spec({"family": "does-not-exist"})
    with pytest.raises(ValueError):
        parse_channel_spec({"theta": 0.5})
