"""Reference Kraus decompositions of N channel copies and the performance
operator.

For a channel with Kraus operators K_1..K_r, the N-copy Choi matrix
factorizes as C0 C0^dag where C0 is the D x q matrix (D = (d_in d_out)^N,
q = r^N) whose columns are tensor products of the vectorized Kraus
operators |K_i>>.  The gauge freedom of the decomposition is a Hermitian
q x q generator h, and the performance operator

    Omega(h) = 4 [ (dC0 - i C0 h)(dC0 - i C0 h)^dag ]^T

upper-bounds the Fisher information payoff Tr[Omega(h) W] for every
strategy W; minimizing over h makes the bound tight.

``schur_block`` turns the quadratic dependence on h into an affine PSD
block [[1, C(h)^dag], [C(h), S]] suitable for the conic solver.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np
import scipy.sparse as sp

from .channels import ChannelFamily, kraus_vec
from .hilbert import LabeledOperator, SystemLabel
from .sdp.ir import AffineExpr
from .sdp import linmaps


def wire_labels(n_copies: int, d_in: int, d_out: int | None = None
                ) -> list[SystemLabel]:
    """Canonical wires A1I, A1O, .., ANI, ANO (name-sorted order)."""
    if d_out is None:
        d_out = d_in
    out = []
    for k in range(1, n_copies + 1):
        out.append(SystemLabel(f"A{k}I", d_in))
        out.append(SystemLabel(f"A{k}O", d_out))
    return out


@dataclass(frozen=True)
class HermitianH:
    """A Hermitian generator acting on the Kraus multi-index space."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        if data.ndim != 2 or data.shape[0] != data.shape[1]:
            raise ValueError("h must be square")
        if not np.allclose(data, data.conj().T, atol=1e-10):
            raise ValueError("h must be Hermitian")
        object.__setattr__(self, "data", data)

    @property
    def dim(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class ReferenceDecomposition:
    """C0 and its theta derivative for N copies of a channel family."""

    family: ChannelFamily
    n_copies: int
    wires: tuple[SystemLabel, ...]
    c0: np.ndarray
    dc0: np.ndarray

    @property
    def q(self) -> int:
        return self.c0.shape[1]

    @property
    def dim(self) -> int:
        return self.c0.shape[0]

    @property
    def wire_dims(self) -> list[tuple[str, int]]:
        return [(s.name, s.dim) for s in self.wires]

    def choi(self) -> LabeledOperator:
        return LabeledOperator(self.wires, self.c0 @ self.c0.conj().T)

    def dchoi(self) -> LabeledOperator:
        m = self.dc0 @ self.c0.conj().T
        return LabeledOperator(self.wires, m + m.conj().T)

    def column_vector(self, index: int, derivative: bool = False):
        """The index-th column as a labeled pure vector."""
        from .hilbert import PureVector

        mat = self.dc0 if derivative else self.c0
        return PureVector(self.wires, mat[:, index])


def reference_decomposition(family: ChannelFamily, n_copies: int
                            ) -> ReferenceDecomposition:
    """Tensor-power reference decomposition with columns ordered by the
    row-major Kraus multi-index (i_1, .., i_N)."""
    if n_copies < 1:
        raise ValueError("n_copies must be >= 1")
    rep = family.kraus()
    v1 = np.column_stack([kraus_vec(k) for k in rep.kraus])
    dv1 = np.column_stack([kraus_vec(dk) for dk in rep.dkraus])
    c0 = reduce(np.kron, [v1] * n_copies)
    dc0 = np.zeros_like(c0)
    for m in range(n_copies):
        factors = [dv1 if i == m else v1 for i in range(n_copies)]
        dc0 += reduce(np.kron, factors)
    wires = wire_labels(n_copies, rep.dim_in, rep.dim_out)
    return ReferenceDecomposition(family, n_copies, tuple(sorted(wires)),
                                  c0, dc0)


def performance_operator(ref: ReferenceDecomposition,
                         h: HermitianH | np.ndarray | None = None
                         ) -> LabeledOperator:
    """Omega(h) = 4 [(dC0 - i C0 h)(dC0 - i C0 h)^dag]^T as a labeled
    operator on the N-copy wires."""
    if h is None:
        g = ref.dc0
    else:
        hm = h.data if isinstance(h, HermitianH) else np.asarray(h, dtype=complex)
        g = ref.dc0 - 1j * (ref.c0 @ hm)
    return LabeledOperator(ref.wires, 4.0 * np.conj(g @ g.conj().T))


def g_expr(ref: ReferenceDecomposition, h_expr: AffineExpr) -> AffineExpr:
    """Affine expression for G(h) = dC0 - i C0 h, shape (D, q)."""
    return AffineExpr.constant(ref.dc0) - 1j * h_expr.left_mul(ref.c0)


def _scalar_times_identity(s_expr: AffineExpr, dim: int) -> AffineExpr:
    if s_expr.shape != (1, 1):
        raise ValueError("expected a scalar expression")
    vec_eye = sp.csr_matrix(np.eye(dim).reshape(dim * dim, 1))
    return s_expr.apply(vec_eye, (dim, dim))


def schur_block(ref: ReferenceDecomposition, s_expr: AffineExpr,
                h_expr: AffineExpr, last_wire: str | None) -> AffineExpr:
    """Affine PSD block certifying S >= (partial trace of) Omega(h).

    last_wire selects which output wires of G(h) are moved into the
    columns of the off-diagonal factor C(h) = 2 conj(G(h)) grouped:

    * a wire name "AkO": the single-wire grouping used by ordered
      strategies; s_expr lives on all wires except A_k^{IO} and is
      tensored with the identity on A_k^I.
    * "all": every output wire is grouped; s_expr is a scalar multiplying
      the identity on all input wires (parallel strategies).
    * None: no grouping; s_expr lives on all wires and the block certifies
      S >= Omega(h) directly (general strategies).
    """
    g = g_expr(ref, h_expr)
    q = ref.q
    wires = ref.wire_dims
    if last_wire is None:
        c = 2.0 * g.conj()
        s_full = s_expr
    elif last_wire == "all":
        sel = [n for n, _ in wires if n.endswith("O")]
        grouping = linmaps.group_columns_map(wires, sel, q)
        d_sel = int(np.prod([d for n, d in wires if n in set(sel)]))
        d_rest = ref.dim // d_sel
        c = 2.0 * g.apply(grouping, (d_rest, d_sel * q)).conj()
        s_full = _scalar_times_identity(s_expr, d_rest)
    else:
        if not last_wire.endswith("O"):
            raise ValueError("last_wire must be an output wire name")
        grouping = linmaps.group_columns_map(wires, [last_wire], q)
        d_sel = dict(wires)[last_wire]
        d_rest = ref.dim // d_sel
        c = 2.0 * g.apply(grouping, (d_rest, d_sel * q)).conj()
        rest_wires = [w for w in wires if w[0] != last_wire]
        in_wire = last_wire[:-1] + "I"
        sub = [n for n, _ in rest_wires if n != in_wire]
        lift = linmaps.lift_map(rest_wires, sub)
        s_full = s_expr.apply(lift, (d_rest, d_rest))
    return _arrow_block(c, s_full)


def _arrow_block(c: AffineExpr, s_full: AffineExpr) -> AffineExpr:
    p, m = c.shape
    block_dim = m + p
    eye = AffineExpr.constant(np.eye(m)).scatter(block_dim, 0, 0)
    return (eye
            + c.scatter(block_dim, m, 0)
            + c.adjoint().scatter(block_dim, 0, m)
            + s_full.scatter(block_dim, m, m))


def _grouped_factor(ref: ReferenceDecomposition, h_expr: AffineExpr,
                    sel: list[str]) -> tuple[AffineExpr, int, int]:
    """The off-diagonal factor C(h) = 2 conj(G(h)) with the selected row
    wires grouped into the columns; returns (C, d_rest, d_sel)."""
    g = g_expr(ref, h_expr)
    q = ref.q
    wires = ref.wire_dims
    grouping = linmaps.group_columns_map(wires, sel, q)
    d_sel = int(np.prod([d for n, d in wires if n in set(sel)]))
    d_rest = ref.dim // d_sel
    c = 2.0 * g.apply(grouping, (d_rest, d_sel * q)).conj()
    return c, d_rest, d_sel


def add_schur_certificate(prog, ref: ReferenceDecomposition,
                          s_expr: AffineExpr, h_expr: AffineExpr,
                          last_wire: str | None, tag: str = "",
                          max_cols: int = 128) -> None:
    """Add PSD blocks certifying S >= (partial trace of) Omega(h) to a
    program.

    Equivalent to ``prog.add_psd(schur_block(...))``, but when the grouped
    factor C(h) has more than max_cols columns it is split per selected
    output basis index j: slack blocks T_j >= C_j C_j^dag (each an arrow
    block of q + d_rest) are summed against S in one small LMI.  This is
    an exact reformulation that keeps every cone dimension moderate.
    """
    q = ref.q
    if last_wire is None:
        prog.add_psd(schur_block(ref, s_expr, h_expr, None))
        return
    wires = ref.wire_dims
    if last_wire == "all":
        sel = [n for n, _ in wires if n.endswith("O")]
    else:
        sel = [last_wire]
    c, d_rest, d_sel = _grouped_factor(ref, h_expr, sel)
    if last_wire == "all":
        s_full = _scalar_times_identity(s_expr, d_rest)
    else:
        rest_wires = [w for w in wires if w[0] != last_wire]
        in_wire = last_wire[:-1] + "I"
        sub = [n for n, _ in rest_wires if n != in_wire]
        s_full = s_expr.apply(linmaps.lift_map(rest_wires, sub),
                              (d_rest, d_rest))
    if d_sel * q <= max_cols:
        prog.add_psd(_arrow_block(c, s_full))
        return
    residual = s_full
    for j in range(d_sel):
        rows = np.arange(d_rest * q)
        r, cc = np.divmod(rows, q)
        src = r * (d_sel * q) + j * q + cc
        sel_mat = sp.csr_matrix((np.ones(rows.shape[0]), (rows, src)),
                                shape=(d_rest * q, d_rest * d_sel * q))
        c_j = c.apply(sel_mat, (d_rest, q))
        t_j = prog.add_variable(f"t{tag}_{j}", d_rest)
        prog.add_psd(_arrow_block(c_j, t_j))
        residual = residual - t_j
    prog.add_psd(residual)
