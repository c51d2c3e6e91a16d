"""Sparse linear maps on row-major vectorized labeled operators.

All maps act on ``vec`` of matrices whose row and column multi-indices run
over an ordered list of named wires.  Wire orderings are given explicitly
as (name, dim) sequences; callers keep them sorted canonically.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp


def _digits(n_states: int, dims: list[int]) -> tuple:
    if not dims:
        return (np.zeros(n_states, dtype=np.int64),) * 0
    return np.unravel_index(np.arange(n_states), dims)


def _ravel(digit_arrays, dims):
    if not dims:
        return np.zeros(1, dtype=np.int64)
    return np.ravel_multi_index(digit_arrays, dims)


def _interleave(full_wires, sub_names, sub_idx, rest_idx):
    """Row indices over full_wires with the sub wires set from sub_idx and
    the remaining wires from rest_idx; broadcast over both index arrays."""
    full_names = [n for n, _ in full_wires]
    full_dims = [d for _, d in full_wires]
    sub_set = set(sub_names)
    sub_dims = [d for n, d in full_wires if n in sub_set]
    rest_dims = [d for n, d in full_wires if n not in sub_set]
    sub_dig = _digits(int(np.prod(sub_dims)) if sub_dims else 1, sub_dims)
    rest_dig = _digits(int(np.prod(rest_dims)) if rest_dims else 1, rest_dims)
    # order sub digit arrays to match the order of appearance in full_wires
    sub_order = [n for n in full_names if n in sub_set]
    sub_map = {n: sub_dig[i] for i, n in enumerate(sub_order)}
    rest_order = [n for n in full_names if n not in sub_set]
    rest_map = {n: rest_dig[i] for i, n in enumerate(rest_order)}
    out = []
    for n in full_names:
        if n in sub_set:
            out.append(sub_map[n][sub_idx])
        else:
            out.append(rest_map[n][rest_idx])
    return _ravel(tuple(out), full_dims)


def lift_map(full_wires, sub_names) -> sp.csr_matrix:
    """vec(S on sub wires) -> vec(S (x) 1 on full wires), canonical order.

    sub_names must appear (in any order) within full_wires; wires of
    full_wires not in sub_names carry the identity.
    """
    full_dims = [d for _, d in full_wires]
    sub_set = set(sub_names)
    missing = sub_set - {n for n, _ in full_wires}
    if missing:
        raise KeyError(f"wires not present: {sorted(missing)}")
    df = int(np.prod(full_dims)) if full_dims else 1
    ds = int(np.prod([d for n, d in full_wires if n in sub_set])) if sub_set else 1
    de = df // ds

    rs = np.repeat(np.repeat(np.arange(ds), ds), de)
    cs = np.repeat(np.tile(np.arange(ds), ds), de)
    e = np.tile(np.arange(de), ds * ds)
    full_rows = _interleave(full_wires, sub_set, rs, e)
    full_cols = _interleave(full_wires, sub_set, cs, e)
    rows = full_rows * df + full_cols
    cols = rs * ds + cs
    return sp.csr_matrix((np.ones(rows.shape[0]), (rows, cols)),
                         shape=(df * df, ds * ds))


def ptrace_map(full_wires, traced_names) -> sp.csr_matrix:
    """vec(W on full wires) -> vec(Tr_traced W) on the remaining wires."""
    rest = [n for n, _ in full_wires if n not in set(traced_names)]
    return sp.csr_matrix(lift_map(full_wires, rest).T)


def replace_map(full_wires, names) -> sp.csr_matrix:
    """vec(W) -> vec(Tr_X W (x) 1^X / d_X) on the same full wires."""
    sel = set(names)
    d_x = int(np.prod([d for n, d in full_wires if n in sel])) if sel else 1
    rest = [n for n, _ in full_wires if n not in sel]
    return sp.csr_matrix(lift_map(full_wires, rest)
                         @ ptrace_map(full_wires, sel)) / d_x


def complement_map(full_wires, names) -> sp.csr_matrix:
    """vec(W) -> vec(prod_x (1 - _x) W) applied one wire at a time."""
    df = int(np.prod([d for _, d in full_wires]))
    out = sp.eye(df * df, format="csr")
    for n in names:
        out = (sp.eye(df * df, format="csr") - replace_map(full_wires, [n])) @ out
    return sp.csr_matrix(out)


def group_columns_map(full_wires, sel_names, ncols: int) -> sp.csr_matrix:
    """Move selected row wires of a (D x ncols) matrix into the columns.

    Maps vec(G), G of shape (D, ncols) with D the dimension of full_wires,
    to vec(C), C of shape (D / d_sel, d_sel * ncols), where
    C[r_rest, (j_sel, c)] = G[interleave(r_rest, j_sel), c].
    """
    sel_set = set(sel_names)
    df = int(np.prod([d for _, d in full_wires]))
    d_sel = int(np.prod([d for n, d in full_wires if n in sel_set])) if sel_set else 1
    d_rest = df // d_sel

    r = np.repeat(np.repeat(np.arange(d_rest), d_sel), ncols)
    j = np.repeat(np.tile(np.arange(d_sel), d_rest), ncols)
    c = np.tile(np.arange(ncols), d_rest * d_sel)
    g_rows = _interleave(full_wires, sel_set, j, r)
    src = g_rows * ncols + c
    dst = r * (d_sel * ncols) + j * ncols + c
    return sp.csr_matrix((np.ones(dst.shape[0]), (dst, src)),
                         shape=(d_rest * d_sel * ncols, df * ncols))
