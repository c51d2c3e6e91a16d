"""Labeled tensor-product operators and the link product.

Operators and vectors carry explicit wire labels.  Every object is stored
with its wires sorted by label name, so two objects built with the same
wires in different orders compare equal entry for entry.  All operations
that combine two objects align wires by name, never by position.

Conventions
-----------
* Matrices are dense complex numpy arrays in row-major multi-index order
  over the sorted wires.
* ``vec`` of a matrix is row-major: ``vec(A)[i * n + j] = A[i, j]``.
* The link product is
  ``A * B = Tr_Y[(A^{T_Y} (x) 1^Z)(1^X (x) B)]``
  where Y is the set of wires shared by A and B.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

ATOL = 1e-10


@dataclass(frozen=True, order=True)
class SystemLabel:
    """A named wire with a fixed dimension."""

    name: str
    dim: int

    def __post_init__(self):
        if not self.name:
            raise ValueError("wire name must be non-empty")
        if self.dim < 1:
            raise ValueError(f"wire {self.name!r} has dimension {self.dim} < 1")


def _canonical(systems: Sequence[SystemLabel]) -> tuple[SystemLabel, ...]:
    names = [s.name for s in systems]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate wire names in {names}")
    return tuple(sorted(systems, key=lambda s: s.name))


def _permutation(src: Sequence[SystemLabel], dst: Sequence[SystemLabel]) -> list[int]:
    """Index of each dst wire within src."""
    pos = {s.name: i for i, s in enumerate(src)}
    return [pos[s.name] for s in dst]


class LabeledOperator:
    """A linear operator on a tensor product of labeled wires.

    The constructor accepts the wires in any order together with a square
    matrix in the matching row-major multi-index basis; the data is
    permuted to the canonical (name-sorted) wire order and frozen.
    """

    __slots__ = ("systems", "data")

    def __init__(self, systems: Sequence[SystemLabel], data: np.ndarray):
        systems = tuple(systems)
        canon = _canonical(systems)
        dims = [s.dim for s in systems]
        dim = int(np.prod(dims)) if dims else 1
        data = np.asarray(data, dtype=complex)
        if data.shape != (dim, dim):
            raise ValueError(f"data shape {data.shape} does not match wires (dim {dim})")
        if canon != systems:
            perm = _permutation(systems, canon)
            n = len(systems)
            tens = data.reshape(dims + dims)
            tens = tens.transpose(perm + [p + n for p in perm])
            data = tens.reshape(dim, dim)
        data = np.ascontiguousarray(data)
        data.setflags(write=False)
        object.__setattr__(self, "systems", canon)
        object.__setattr__(self, "data", data)

    def __setattr__(self, name, value):
        raise AttributeError("LabeledOperator is immutable")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.systems)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(s.dim for s in self.systems)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def label(self, name: str) -> SystemLabel:
        for s in self.systems:
            if s.name == name:
                return s
        raise KeyError(name)

    def trace(self) -> complex:
        return complex(np.trace(self.data))

    def is_hermitian(self, atol: float = ATOL) -> bool:
        return bool(np.allclose(self.data, self.data.conj().T, atol=atol))

    def is_psd(self, atol: float = ATOL) -> bool:
        if not self.is_hermitian(atol):
            return False
        w = np.linalg.eigvalsh((self.data + self.data.conj().T) / 2)
        return bool(w.min() >= -atol)

    def allclose(self, other: "LabeledOperator", atol: float = ATOL) -> bool:
        return self.systems == other.systems and np.allclose(
            self.data, other.data, atol=atol
        )

    def __add__(self, other: "LabeledOperator") -> "LabeledOperator":
        if self.systems != other.systems:
            raise ValueError("wire mismatch in operator sum")
        return LabeledOperator(self.systems, self.data + other.data)

    def __sub__(self, other: "LabeledOperator") -> "LabeledOperator":
        if self.systems != other.systems:
            raise ValueError("wire mismatch in operator difference")
        return LabeledOperator(self.systems, self.data - other.data)

    def __mul__(self, scalar: complex) -> "LabeledOperator":
        return LabeledOperator(self.systems, self.data * scalar)

    __rmul__ = __mul__

    def __repr__(self):
        wires = ", ".join(f"{s.name}:{s.dim}" for s in self.systems)
        return f"LabeledOperator([{wires}], dim={self.dim})"


class PureVector:
    """A vector on a tensor product of labeled wires, stored canonically."""

    __slots__ = ("systems", "data")

    def __init__(self, systems: Sequence[SystemLabel], data: np.ndarray):
        systems = tuple(systems)
        canon = _canonical(systems)
        dims = [s.dim for s in systems]
        dim = int(np.prod(dims)) if dims else 1
        data = np.asarray(data, dtype=complex).reshape(-1)
        if data.shape != (dim,):
            raise ValueError(f"data shape {data.shape} does not match wires (dim {dim})")
        if canon != systems:
            perm = _permutation(systems, canon)
            data = data.reshape(dims).transpose(perm).reshape(dim)
        data = np.ascontiguousarray(data)
        data.setflags(write=False)
        object.__setattr__(self, "systems", canon)
        object.__setattr__(self, "data", data)

    def __setattr__(self, name, value):
        raise AttributeError("PureVector is immutable")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.systems)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(s.dim for s in self.systems)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def label(self, name: str) -> SystemLabel:
        for s in self.systems:
            if s.name == name:
                return s
        raise KeyError(name)

    def norm(self) -> float:
        return float(np.linalg.norm(self.data))

    def projector(self) -> LabeledOperator:
        return LabeledOperator(self.systems, np.outer(self.data, self.data.conj()))

    def allclose(self, other: "PureVector", atol: float = ATOL) -> bool:
        return self.systems == other.systems and np.allclose(
            self.data, other.data, atol=atol
        )

    def __repr__(self):
        wires = ", ".join(f"{s.name}:{s.dim}" for s in self.systems)
        return f"PureVector([{wires}], dim={self.dim})"


def tensor_product(a: LabeledOperator, b: LabeledOperator) -> LabeledOperator:
    """Tensor product of operators on disjoint wire sets."""
    overlap = set(a.names) & set(b.names)
    if overlap:
        raise ValueError(f"tensor product wires must be disjoint, shared: {overlap}")
    return LabeledOperator(a.systems + b.systems, np.kron(a.data, b.data))


def tensor_pure(a: PureVector, b: PureVector) -> PureVector:
    overlap = set(a.names) & set(b.names)
    if overlap:
        raise ValueError(f"tensor product wires must be disjoint, shared: {overlap}")
    return PureVector(a.systems + b.systems, np.kron(a.data, b.data))


def _split(op: LabeledOperator, names: Iterable[str]):
    names = set(names)
    missing = names - set(op.names)
    if missing:
        raise KeyError(f"wires not present: {sorted(missing)}")
    sel = [s for s in op.systems if s.name in names]
    rest = [s for s in op.systems if s.name not in names]
    return sel, rest


def partial_trace(op: LabeledOperator, names: Iterable[str]) -> LabeledOperator:
    """Trace out the wires with the given names."""
    sel, _ = _split(op, names)
    out = op
    for s in sel:
        syst = out.systems
        i = [x.name for x in syst].index(s.name)
        n = len(syst)
        tens = out.data.reshape(out.dims + out.dims)
        tens = np.trace(tens, axis1=i, axis2=i + n)
        new_sys = syst[:i] + syst[i + 1 :]
        d = int(np.prod([x.dim for x in new_sys])) if new_sys else 1
        out = LabeledOperator(new_sys, tens.reshape(d, d))
    return out


def partial_transpose(op: LabeledOperator, names: Iterable[str]) -> LabeledOperator:
    """Transpose the given wires in the computational basis."""
    sel, _ = _split(op, names)
    if not sel:
        return op
    dims = op.dims
    n = len(dims)
    tens = op.data.reshape(dims + dims)
    perm = list(range(2 * n))
    sel_names = {s.name for s in sel}
    for i, s in enumerate(op.systems):
        if s.name in sel_names:
            perm[i], perm[i + n] = perm[i + n], perm[i]
    tens = tens.transpose(perm)
    return LabeledOperator(op.systems, tens.reshape(op.dim, op.dim))


def link_product(a: LabeledOperator, b: LabeledOperator) -> LabeledOperator:
    """Link product of a and b over their shared wires.

    With a on wires (X, Y), b on wires (Y, Z) and Y the shared wires,
    returns Tr_Y[(a^{T_Y} (x) 1^Z)(1^X (x) b)] on wires (X, Z).  Shared
    wires must agree in dimension.  Disjoint wire sets reduce to the
    tensor product; identical wire sets reduce to Tr[a^T b] on no wires.
    """
    shared = sorted(set(a.names) & set(b.names))
    for nm in shared:
        if a.label(nm).dim != b.label(nm).dim:
            raise ValueError(f"shared wire {nm!r} has mismatched dimensions")
    if not shared:
        return tensor_product(a, b)
    x_sys = [s for s in a.systems if s.name not in shared]
    z_sys = [s for s in b.systems if s.name not in shared]
    y_sys_a = [a.label(nm) for nm in shared]
    dx = int(np.prod([s.dim for s in x_sys])) if x_sys else 1
    dz = int(np.prod([s.dim for s in z_sys])) if z_sys else 1
    dy = int(np.prod([s.dim for s in y_sys_a]))

    def grouped(op, first_sys, second_sys, d1, d2):
        """Reorder op's wires to (first, second) and reshape to (d1,d2,d1,d2)."""
        ordered = LabeledOperator(op.systems, op.data)
        perm = _permutation(ordered.systems, list(first_sys) + list(second_sys))
        n = len(ordered.systems)
        tens = ordered.data.reshape(ordered.dims + ordered.dims)
        tens = tens.transpose(perm + [p + n for p in perm])
        return tens.reshape(d1, d2, d1, d2)

    at = grouped(a, x_sys, y_sys_a, dx, dy)  # [x, y'', x', y]
    bt = grouped(b, y_sys_a, z_sys, dy, dz)  # [y'', z, y, z']
    res = np.einsum("abcd,bedf->aecf", at, bt, optimize=True)
    out_sys = x_sys + z_sys
    dout = dx * dz
    return LabeledOperator(out_sys, res.reshape(dout, dout))


def pure_link_product(a: PureVector, b: PureVector) -> PureVector:
    """Vector-level link product (1^X (x) <<1|^Y (x) 1^Z)(|a> (x) |b>).

    Contracts the shared wires of the two vectors without the complex
    conjugation of the operator-level link product, so that
    pure_link(a, b).projector() == link_product(conj-free | see tests).
    """
    shared = sorted(set(a.names) & set(b.names))
    for nm in shared:
        if a.label(nm).dim != b.label(nm).dim:
            raise ValueError(f"shared wire {nm!r} has mismatched dimensions")
    x_sys = [s for s in a.systems if s.name not in shared]
    z_sys = [s for s in b.systems if s.name not in shared]
    y_sys = [a.label(nm) for nm in shared]
    dx = int(np.prod([s.dim for s in x_sys])) if x_sys else 1
    dz = int(np.prod([s.dim for s in z_sys])) if z_sys else 1
    dy = int(np.prod([s.dim for s in y_sys])) if y_sys else 1

    def grouped_vec(v, first_sys, second_sys, d1, d2):
        perm = _permutation(v.systems, list(first_sys) + list(second_sys))
        return v.data.reshape(v.dims).transpose(perm).reshape(d1, d2)

    av = grouped_vec(a, x_sys, y_sys, dx, dy)
    bv = grouped_vec(b, y_sys, z_sys, dy, dz)
    res = av @ bv
    return PureVector(x_sys + z_sys, res.reshape(dx * dz))


def traceout_replace(op: LabeledOperator, names: Iterable[str], keep: bool = True
                     ) -> LabeledOperator:
    """Trace-out-and-replace map and its complement.

    With keep=True returns ``_X op = Tr_X(op) (x) 1^X / d_X`` for the wire
    set X given by names.  With keep=False returns the composition of the
    complements ``prod_x (_[1-x]) op`` applied one wire at a time, where
    ``_[1-x] op = op - _x op``; the single-wire complements commute.
    """
    sel, _ = _split(op, names)
    if keep:
        return _replace(op, [s.name for s in sel])
    out = op
    for s in sel:
        out = out - _replace(out, [s.name])
    return out


def _replace(op: LabeledOperator, names: list[str]) -> LabeledOperator:
    if not names:
        return op
    sel = [op.label(nm) for nm in names]
    d_x = int(np.prod([s.dim for s in sel]))
    traced = partial_trace(op, names)
    eye = LabeledOperator(sel, np.eye(d_x))
    return tensor_product(traced, eye) * (1.0 / d_x)
