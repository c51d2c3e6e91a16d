"""Parameterized channel families in Kraus form and their Choi matrices.

Each family maps a scalar parameter theta to a Kraus representation
together with the entrywise derivatives of the Kraus operators with
respect to theta.  The Choi matrix convention is

    C = sum_i |K_i>> <<K_i|,    |K>> = sum_j |j>^in (x) K|j>^out,

on the wire pair (in, out), with the input wire sorting before the output
wire so that |K>> is the row-major flattening of K^T.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .hilbert import LabeledOperator, SystemLabel

FD_STEP = 1e-6
FD_RTOL = 1e-6

_SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
_SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True)
class KrausRepresentation:
    """Kraus operators of a channel and their parameter derivatives."""

    kraus: tuple[np.ndarray, ...]
    dkraus: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.kraus) != len(self.dkraus):
            raise ValueError("kraus and dkraus must have equal length")
        shape = self.kraus[0].shape
        for k in self.kraus + self.dkraus:
            if k.shape != shape:
                raise ValueError("all Kraus operators must share one shape")

    @property
    def dim_out(self) -> int:
        return self.kraus[0].shape[0]

    @property
    def dim_in(self) -> int:
        return self.kraus[0].shape[1]

    @property
    def rank(self) -> int:
        return len(self.kraus)

    def is_trace_preserving(self, atol: float = 1e-9) -> bool:
        acc = sum(k.conj().T @ k for k in self.kraus)
        return bool(np.allclose(acc, np.eye(self.dim_in), atol=atol))

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return sum(k @ rho @ k.conj().T for k in self.kraus)


@dataclass(frozen=True)
class ChannelFamily:
    """A theta-parameterized channel family with analytic Kraus derivatives."""

    name: str
    theta: float
    kraus_fn: Callable[[float], KrausRepresentation]
    domain: tuple[float, float] = (0.0, 1.0)
    params: dict = field(default_factory=dict)

    def at(self, theta: float) -> "ChannelFamily":
        return replace(self, theta=theta)

    def kraus(self) -> KrausRepresentation:
        return self.kraus_fn(self.theta)

    @property
    def dim(self) -> int:
        return self.kraus().dim_in

    def choi(self, in_name: str = "in", out_name: str = "out"):
        return choi_from_kraus(self.kraus(), in_name, out_name)

    def check_derivatives(self, step: float = FD_STEP, rtol: float = FD_RTOL) -> bool:
        """Compare dkraus against a central finite difference of kraus."""
        lo = self.kraus_fn(self.theta - step)
        hi = self.kraus_fn(self.theta + step)
        rep = self.kraus()
        for k_lo, k_hi, dk in zip(lo.kraus, hi.kraus, rep.dkraus):
            fd = (k_hi - k_lo) / (2 * step)
            scale = max(np.abs(dk).max(), 1.0)
            if not np.allclose(fd, dk, atol=rtol * scale, rtol=rtol):
                return False
        return True


def kraus_vec(k: np.ndarray) -> np.ndarray:
    """|K>> on (in, out), entry (j, i) = <i|K|j>."""
    return np.ascontiguousarray(k.T).reshape(-1)


def choi_from_kraus(rep: KrausRepresentation, in_name: str = "in",
                    out_name: str = "out") -> tuple[LabeledOperator, LabeledOperator]:
    """Choi matrix and its theta derivative as labeled operators.

    The wires are SystemLabel(in_name, dim_in) and SystemLabel(out_name,
    dim_out).  Names must sort with the input wire first so the stored
    basis matches the |K>> convention.
    """
    if not in_name < out_name:
        raise ValueError("input wire name must sort before output wire name")
    d_in, d_out = rep.dim_in, rep.dim_out
    sys = [SystemLabel(in_name, d_in), SystemLabel(out_name, d_out)]
    dim = d_in * d_out
    c = np.zeros((dim, dim), dtype=complex)
    dc = np.zeros((dim, dim), dtype=complex)
    for k, dk in zip(rep.kraus, rep.dkraus):
        v = kraus_vec(k)
        dv = kraus_vec(dk)
        c += np.outer(v, v.conj())
        dc += np.outer(dv, v.conj()) + np.outer(v, dv.conj())
    return LabeledOperator(sys, c), LabeledOperator(sys, dc)


def _heisenberg_weyl(d: int) -> list[np.ndarray]:
    """The d^2 unitaries W_jk = X^j Z^k with X|m> = |m+1 mod d>."""
    omega = np.exp(2j * np.pi / d)
    x = np.roll(np.eye(d, dtype=complex), 1, axis=0)
    z = np.diag(omega ** np.arange(d))
    ops = []
    for j in range(d):
        for k in range(d):
            ops.append(np.linalg.matrix_power(x, j) @ np.linalg.matrix_power(z, k))
    return ops


def depolarizing_family(theta: float = 0.5, d: int = 2) -> ChannelFamily:
    """rho -> theta * rho + (1 - theta) * 1/d, with d^2 Kraus operators
    proportional to the Heisenberg-Weyl unitaries."""
    ops = _heisenberg_weyl(d)

    def fn(th: float) -> KrausRepresentation:
        a = math.sqrt(th + (1 - th) / d**2)
        b = math.sqrt(max(1 - th, 0.0) / d**2)
        da = (1 - 1 / d**2) / (2 * a)
        db = -1 / (d**2 * 2 * b) if b > 0 else 0.0
        kraus = [a * ops[0]] + [b * w for w in ops[1:]]
        dkraus = [da * ops[0]] + [db * w for w in ops[1:]]
        return KrausRepresentation(tuple(kraus), tuple(dkraus))

    return ChannelFamily("depolarizing", theta, fn, domain=(0.0, 1.0), params={"d": d})


def pauli_family(theta: float = 0.5, alpha: float = 1 / 3, beta: float = 1 / 3,
                 gamma: float = 1 / 3) -> ChannelFamily:
    """rho -> theta * rho + (1-theta)(alpha X rho X + beta Y rho Y + gamma Z rho Z)."""
    if abs(alpha + beta + gamma - 1.0) > 1e-12:
        raise ValueError("alpha + beta + gamma must equal 1")

    def fn(th: float) -> KrausRepresentation:
        eye = np.eye(2, dtype=complex)
        weights = [(1.0, eye), (alpha, _SIGMA_X), (beta, _SIGMA_Y), (gamma, _SIGMA_Z)]
        kraus, dkraus = [], []
        for i, (w, sig) in enumerate(weights):
            p = th * w if i == 0 else (1 - th) * w
            dp = w if i == 0 else -w
            amp = math.sqrt(max(p, 0.0))
            damp = dp / (2 * amp) if amp > 0 else 0.0
            kraus.append(amp * sig)
            dkraus.append(damp * sig)
        return KrausRepresentation(tuple(kraus), tuple(dkraus))

    return ChannelFamily("pauli", theta, fn, domain=(0.0, 1.0),
                         params={"alpha": alpha, "beta": beta, "gamma": gamma})


def thermalizing_family(theta: float = 1.0, epsilon: float = 1.0) -> ChannelFamily:
    """Full thermalization of a qubit with energy gap epsilon to the Gibbs
    state at temperature theta.

    Every input is mapped to diag(p, 1 - p) with ground-state weight
    p = 1 / (1 + exp(-epsilon / theta)); the parameter enters only through
    p, so dp/dtheta = -(epsilon / theta^2) p (1 - p).
    """

    def fn(th: float) -> KrausRepresentation:
        e = math.exp(-epsilon / th)
        p = 1.0 / (1.0 + e)
        dp = -(epsilon / th**2) * p * (1.0 - p)
        sp, s1p = math.sqrt(p), math.sqrt(1.0 - p)
        dsp, ds1p = dp / (2 * sp), -dp / (2 * s1p)
        k = [
            sp * np.array([[1, 0], [0, 0]], dtype=complex),
            sp * np.array([[0, 1], [0, 0]], dtype=complex),
            s1p * np.array([[0, 0], [1, 0]], dtype=complex),
            s1p * np.array([[0, 0], [0, 1]], dtype=complex),
        ]
        dk = [
            dsp * np.array([[1, 0], [0, 0]], dtype=complex),
            dsp * np.array([[0, 1], [0, 0]], dtype=complex),
            ds1p * np.array([[0, 0], [1, 0]], dtype=complex),
            ds1p * np.array([[0, 0], [0, 1]], dtype=complex),
        ]
        return KrausRepresentation(tuple(k), tuple(dk))

    return ChannelFamily("thermalizing", theta, fn, domain=(1e-6, np.inf),
                         params={"epsilon": epsilon})


def _uz(theta: float) -> tuple[np.ndarray, np.ndarray]:
    """exp(-i theta sigma_z / 2) and its theta derivative."""
    u = np.diag([np.exp(-1j * theta / 2), np.exp(1j * theta / 2)])
    du = np.diag([-0.5j * np.exp(-1j * theta / 2), 0.5j * np.exp(1j * theta / 2)])
    return u, du


def rotation_damping_family(theta: float = 0.5, u: float = 0.0) -> ChannelFamily:
    """Phase rotation exp(-i theta Z / 2) followed by amplitude damping
    with decay probability u."""
    e0 = np.array([[1, 0], [0, math.sqrt(1 - u)]], dtype=complex)
    e1 = np.array([[0, math.sqrt(u)], [0, 0]], dtype=complex)

    def fn(th: float) -> KrausRepresentation:
        uz, duz = _uz(th)
        return KrausRepresentation(
            (e0 @ uz, e1 @ uz),
            (e0 @ duz, e1 @ duz),
        )

    return ChannelFamily("rotation_damping", theta, fn,
                         domain=(-np.inf, np.inf), params={"u": u})


def random_family(theta: float = 0.5, seed: int = 0) -> ChannelFamily:
    """Phase rotation exp(-i theta Z / 2) followed by a fixed Haar-random
    qubit channel with two Kraus operators drawn from the given seed."""
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
    q, r = np.linalg.qr(g)
    ph = np.diag(r).copy()
    ph /= np.abs(ph)
    v = q * ph  # columns rescaled so the R factor has positive diagonal
    # Row multi-index of v is (out, env) with env varying fastest.
    k_fixed = [v[i::2, :] for i in range(2)]

    def fn(th: float) -> KrausRepresentation:
        uz, duz = _uz(th)
        return KrausRepresentation(
            tuple(k @ uz for k in k_fixed),
            tuple(k @ duz for k in k_fixed),
        )

    return ChannelFamily("random", theta, fn,
                         domain=(-np.inf, np.inf), params={"seed": seed})


_FAMILY_BUILDERS = {
    "depolarizing": (depolarizing_family, {"d"}),
    "pauli": (pauli_family, {"alpha", "beta", "gamma"}),
    "thermalizing": (thermalizing_family, {"epsilon"}),
    "rotation_damping": (rotation_damping_family, {"u"}),
    "random": (random_family, {"seed"}),
}


def parse_channel_spec(spec: dict) -> ChannelFamily:
    """Build a channel family from a JSON-style mapping.

    Expected keys: "family" (one of the registered names), "theta", and
    the family's own parameters.  Unknown keys are rejected.
    """
    if not isinstance(spec, dict):
        raise ValueError("channel spec must be a mapping")
    spec = dict(spec)
    family = spec.pop("family", None)
    if family not in _FAMILY_BUILDERS:
        raise ValueError(f"unknown channel family: {family!r}")
    builder, allowed = _FAMILY_BUILDERS[family]
    theta = spec.pop("theta", None)
    unknown = set(spec) - allowed
    if unknown:
        raise ValueError(f"unknown keys in channel spec: {sorted(unknown)}")
    fam = builder(**spec)
    if theta is not None:
        fam = fam.at(float(theta))
    return fam
