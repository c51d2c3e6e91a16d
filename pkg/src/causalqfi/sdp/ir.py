"""Solver-agnostic conic program representation over Hermitian variables.

A program holds named Hermitian matrix variables (scalars are 1x1 blocks),
a real affine objective to minimize, affine equality constraints, and
affine positive-semidefiniteness constraints.  Affine expressions are kept
as complex sparse coefficient matrices acting on the real parameter
vectors of the variables, using the row-major ``vec`` convention.

A Hermitian n x n variable has n^2 real parameters: the n diagonal entries
followed by (real, imag) pairs for each off-diagonal entry i < j in
lexicographic order.  Complex conjugation is therefore a real-linear
operation on expressions.

``embed_complex`` lowers a program to real symmetric cone data in the form
``minimize q.x  s.t.  A x + s = b,  s in K`` with zero cones for the
equalities and scaled-triangle PSD cones for the real embeddings
``[[Re E, -Im E], [Im E, Re E]]`` of the complex PSD constraints.
``solve`` feeds that data to an interior-point solver.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True)
class HermitianVariable:
    """A Hermitian matrix decision variable."""

    name: str
    dim: int

    @property
    def nparams(self) -> int:
        return self.dim * self.dim


def _param_basis(dim: int) -> sp.csr_matrix:
    """Complex map from real parameters to vec(H), row-major."""
    rows, cols, data = [], [], []
    pair = {}
    idx = dim
    for i in range(dim):
        for j in range(i + 1, dim):
            pair[(i, j)] = idx
            idx += 2
    for i in range(dim):
        for j in range(dim):
            v = i * dim + j
            if i == j:
                rows.append(v); cols.append(i); data.append(1.0)
            elif i < j:
                p = pair[(i, j)]
                rows.append(v); cols.append(p); data.append(1.0)
                rows.append(v); cols.append(p + 1); data.append(1.0j)
            else:
                p = pair[(j, i)]
                rows.append(v); cols.append(p); data.append(1.0)
                rows.append(v); cols.append(p + 1); data.append(-1.0j)
    return sp.csr_matrix((data, (rows, cols)),
                         shape=(dim * dim, dim * dim), dtype=complex)


def matrix_from_params(dim: int, params: np.ndarray) -> np.ndarray:
    """Rebuild the Hermitian matrix from its real parameter vector."""
    vec = _param_basis(dim) @ params
    return vec.reshape(dim, dim)


class AffineExpr:
    """A complex matrix-valued affine function of the program variables."""

    __slots__ = ("shape", "coeffs", "const", "vars")

    def __init__(self, shape, coeffs, const, variables):
        self.shape = tuple(shape)
        self.coeffs = coeffs  # name -> sparse (m*n, nparams) complex
        self.const = np.asarray(const, dtype=complex).reshape(-1)
        self.vars = variables  # name -> HermitianVariable
        m, n = self.shape
        if self.const.shape != (m * n,):
            raise ValueError("constant size does not match shape")

    # -- constructors ------------------------------------------------------

    @staticmethod
    def constant(mat: np.ndarray) -> "AffineExpr":
        mat = np.atleast_2d(np.asarray(mat, dtype=complex))
        return AffineExpr(mat.shape, {}, mat.reshape(-1), {})

    @staticmethod
    def scalar(value: complex) -> "AffineExpr":
        return AffineExpr.constant(np.array([[value]]))

    @staticmethod
    def from_variable(var: HermitianVariable) -> "AffineExpr":
        d = var.dim
        return AffineExpr((d, d), {var.name: _param_basis(d)},
                          np.zeros(d * d), {var.name: var})

    # -- ring operations ---------------------------------------------------

    def _merged_vars(self, other):
        merged = dict(self.vars)
        for k, v in other.vars.items():
            if k in merged and merged[k] != v:
                raise ValueError(f"conflicting variables named {k!r}")
            merged[k] = v
        return merged

    def __add__(self, other: "AffineExpr") -> "AffineExpr":
        if self.shape != other.shape:
            raise ValueError("shape mismatch in sum")
        coeffs = dict(self.coeffs)
        for k, m in other.coeffs.items():
            coeffs[k] = coeffs[k] + m if k in coeffs else m
        return AffineExpr(self.shape, coeffs, self.const + other.const,
                          self._merged_vars(other))

    def __sub__(self, other: "AffineExpr") -> "AffineExpr":
        return self + (other * (-1.0))

    def __mul__(self, scalar: complex) -> "AffineExpr":
        coeffs = {k: m * scalar for k, m in self.coeffs.items()}
        return AffineExpr(self.shape, coeffs, self.const * scalar, dict(self.vars))

    __rmul__ = __mul__

    # -- linear maps -------------------------------------------------------

    def apply(self, mat: sp.spmatrix, shape) -> "AffineExpr":
        """Apply a linear map given on vec'd entries."""
        coeffs = {k: sp.csr_matrix(mat @ m) for k, m in self.coeffs.items()}
        return AffineExpr(shape, coeffs, mat @ self.const, dict(self.vars))

    def left_mul(self, a: np.ndarray) -> "AffineExpr":
        a = np.asarray(a, dtype=complex)
        m, n = self.shape
        if a.shape[1] != m:
            raise ValueError("left factor shape mismatch")
        mat = sp.kron(sp.csr_matrix(a), sp.eye(n), format="csr")
        return self.apply(mat, (a.shape[0], n))

    def right_mul(self, b: np.ndarray) -> "AffineExpr":
        b = np.asarray(b, dtype=complex)
        m, n = self.shape
        if b.shape[0] != n:
            raise ValueError("right factor shape mismatch")
        mat = sp.kron(sp.eye(m), sp.csr_matrix(b.T), format="csr")
        return self.apply(mat, (m, b.shape[1]))

    def conj(self) -> "AffineExpr":
        coeffs = {k: m.conj() for k, m in self.coeffs.items()}
        return AffineExpr(self.shape, coeffs, self.const.conj(), dict(self.vars))

    def transpose(self) -> "AffineExpr":
        m, n = self.shape
        src = np.arange(m * n).reshape(m, n).T.reshape(-1)
        perm = sp.csr_matrix((np.ones(m * n), (np.arange(m * n), src)),
                             shape=(m * n, m * n))
        return self.apply(perm, (n, m))

    def adjoint(self) -> "AffineExpr":
        return self.transpose().conj()

    def trace(self) -> "AffineExpr":
        m, n = self.shape
        if m != n:
            raise ValueError("trace of non-square expression")
        diag = np.arange(m) * n + np.arange(m)
        mat = sp.csr_matrix((np.ones(m), (np.zeros(m, int), diag)),
                            shape=(1, m * n))
        return self.apply(mat, (1, 1))

    def scatter(self, block_dim: int, row_off: int, col_off: int) -> "AffineExpr":
        """Embed this expression as a sub-block of a block_dim^2 matrix."""
        m, n = self.shape
        ii, jj = np.divmod(np.arange(m * n), n)
        rows = (ii + row_off) * block_dim + (jj + col_off)
        mat = sp.csr_matrix((np.ones(m * n), (rows, np.arange(m * n))),
                            shape=(block_dim * block_dim, m * n))
        return self.apply(mat, (block_dim, block_dim))

    # -- evaluation --------------------------------------------------------

    def value(self, assignment: dict[str, np.ndarray]) -> np.ndarray:
        """Evaluate at an assignment of variable names to Hermitian matrices."""
        out = self.const.copy()
        for name, mat in self.coeffs.items():
            var = self.vars[name]
            h = np.asarray(assignment[name], dtype=complex)
            params = _params_from_matrix(var.dim, h)
            out = out + mat @ params
        return out.reshape(self.shape)


def _params_from_matrix(dim: int, h: np.ndarray) -> np.ndarray:
    params = np.empty(dim * dim)
    params[:dim] = np.real(np.diag(h))
    idx = dim
    for i in range(dim):
        for j in range(i + 1, dim):
            params[idx] = h[i, j].real
            params[idx + 1] = h[i, j].imag
            idx += 2
    return params


@dataclass
class ConicProgram:
    """minimize objective  s.t.  each eq == 0 and each psd >= 0."""

    variables: dict[str, HermitianVariable] = field(default_factory=dict)
    objective: AffineExpr | None = None
    eq_constraints: list[AffineExpr] = field(default_factory=list)
    psd_constraints: list[AffineExpr] = field(default_factory=list)
    # reduce the equality rows to an independent subset before solving
    presolve_equalities: bool = False

    def add_variable(self, name: str, dim: int) -> AffineExpr:
        if name in self.variables:
            raise ValueError(f"variable {name!r} already exists")
        var = HermitianVariable(name, dim)
        self.variables[name] = var
        return AffineExpr.from_variable(var)

    def set_objective(self, expr: AffineExpr):
        if expr.shape != (1, 1):
            raise ValueError("objective must be scalar")
        self.objective = expr

    def add_eq(self, expr: AffineExpr):
        self.eq_constraints.append(expr)

    def add_psd(self, expr: AffineExpr):
        m, n = expr.shape
        if m != n:
            raise ValueError("PSD constraint must be square")
        self.psd_constraints.append(expr)

    @property
    def nparams(self) -> int:
        return sum(v.nparams for v in self.variables.values())


def embed_hermitian(mat: np.ndarray) -> np.ndarray:
    """Real symmetric embedding [[Re M, -Im M], [Im M, Re M]] of a
    Hermitian matrix; PSD iff the input is PSD, with doubled spectrum."""
    re, im = np.real(mat), np.imag(mat)
    return np.block([[re, -im], [im, re]])


def _svec_map(d: int) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Maps from (Re vecE, Im vecE) of a Hermitian d x d matrix E to the
    scaled upper-triangle column-major vectorization of its real embedding.

    Returns (t_re, t_im) with svec(R(E)) = t_re @ Re(vecE) + t_im @ Im(vecE).
    The embedding is symmetrized, so slightly non-Hermitian numerics are
    projected onto the Hermitian part.
    """
    n = 2 * d
    rows_re, cols_re, data_re = [], [], []
    rows_im, cols_im, data_im = [], [], []
    r = 0
    sq2 = np.sqrt(2.0)
    for jj in range(n):
        for ii in range(jj + 1):
            w = 1.0 if ii == jj else sq2
            # R[ii, jj] averaged with R[jj, ii]; quadrants of R:
            # R[a, b] (a,b < d)        =  Re E[a, b]
            # R[a, b+d]                = -Im E[a, b]
            # R[a+d, b]                =  Im E[a, b]
            # R[a+d, b+d]              =  Re E[a, b]
            for (i2, j2, sgn) in ((ii, jj, 0.5), (jj, ii, 0.5)):
                a, b = i2 % d, j2 % d
                v = a * d + b
                if i2 < d and j2 < d:
                    rows_re.append(r); cols_re.append(v); data_re.append(sgn * w)
                elif i2 < d <= j2:
                    rows_im.append(r); cols_im.append(v); data_im.append(-sgn * w)
                elif i2 >= d > j2:
                    rows_im.append(r); cols_im.append(v); data_im.append(sgn * w)
                else:
                    rows_re.append(r); cols_re.append(v); data_re.append(sgn * w)
            r += 1
    nsv = n * (n + 1) // 2
    t_re = sp.csr_matrix((data_re, (rows_re, cols_re)), shape=(nsv, d * d))
    t_im = sp.csr_matrix((data_im, (rows_im, cols_im)), shape=(nsv, d * d))
    return t_re, t_im


@dataclass
class RealConicProgram:
    """Lowered real cone data: minimize q.x s.t. A x + s = b, s in cones."""

    q: np.ndarray
    a_mat: sp.csc_matrix
    b: np.ndarray
    cone_dims: list[tuple[str, int]]  # ("zero", m) or ("psd", n)
    var_offsets: dict[str, tuple[int, int]]  # name -> (offset, dim)
    obj_offset: float


def _stack_coeffs(expr: AffineExpr, var_order: dict[str, tuple[int, int]],
                  nparams: int) -> sp.csr_matrix:
    m = expr.shape[0] * expr.shape[1]
    blocks = []
    mat = sp.csr_matrix((m, nparams), dtype=complex)
    for name, c in expr.coeffs.items():
        off, dim = var_order[name]
        pad_left = sp.csr_matrix((m, off), dtype=complex)
        pad_right = sp.csr_matrix((m, nparams - off - dim * dim), dtype=complex)
        mat = mat + sp.hstack([pad_left, c, pad_right], format="csr")
    return mat


def embed_complex(program: ConicProgram) -> RealConicProgram:
    """Lower a complex Hermitian program to real symmetric cone data."""
    var_order = {}
    off = 0
    for name, var in program.variables.items():
        var_order[name] = (off, var.dim)
        off += var.nparams
    nparams = off

    if program.objective is None:
        raise ValueError("program has no objective")
    f_obj = _stack_coeffs(program.objective, var_order, nparams)
    q = np.asarray(f_obj.todense()).reshape(-1)
    if np.abs(q.imag).max(initial=0.0) > 1e-9:
        raise ValueError("objective is not real-valued")
    q = q.real.copy()
    obj_offset = float(program.objective.const.real[0])

    a_blocks, b_blocks, cones = [], [], []
    for expr in program.eq_constraints:
        f = _stack_coeffs(expr, var_order, nparams)
        a_blocks.append(sp.vstack([f.real, f.imag], format="csr"))
        b_blocks.append(-np.concatenate([expr.const.real, expr.const.imag]))
        cones.append(("zero", 2 * expr.shape[0] * expr.shape[1]))
    for expr in program.psd_constraints:
        d = expr.shape[0]
        t_re, t_im = _svec_map(d)
        f = _stack_coeffs(expr, var_order, nparams)
        m = t_re @ f.real + t_im @ f.imag
        c = t_re @ expr.const.real + t_im @ expr.const.imag
        a_blocks.append(sp.csr_matrix(-m))
        b_blocks.append(c)
        cones.append(("psd", 2 * d))

    a_mat = sp.vstack(a_blocks, format="csc") if a_blocks else sp.csc_matrix((0, nparams))
    b = np.concatenate(b_blocks) if b_blocks else np.zeros(0)
    return RealConicProgram(q, a_mat, b, cones, var_order, obj_offset)


class SolverError(RuntimeError):
    pass


def _reduce_equalities(real: RealConicProgram) -> RealConicProgram:
    """Replace the zero-cone rows by a maximal linearly independent subset.

    Programs whose equality constraints come from projector compositions
    carry redundant rows that can stall the interior-point KKT solves;
    a pivoted QR of the stacked [A_eq | b_eq] selects independent rows.
    """
    import scipy.linalg

    nz = sum(d for k, d in real.cone_dims if k == "zero")
    if nz == 0:
        return real
    a = real.a_mat.tocsr()
    a_eq = a[:nz].toarray()
    b_eq = real.b[:nz]
    stacked = np.hstack([a_eq, b_eq[:, None]])
    _, r, piv = scipy.linalg.qr(stacked.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    rank = int((diag > 1e-12 * max(diag[0], 1.0)).sum()) if diag.size else 0
    rows = np.sort(piv[:rank])
    a_new = sp.vstack([sp.csr_matrix(a_eq[rows]), a[nz:]], format="csc")
    b_new = np.concatenate([b_eq[rows], real.b[nz:]])
    cones = [("zero", rank)] + [c for c in real.cone_dims if c[0] == "psd"]
    return RealConicProgram(real.q, a_new, b_new, cones,
                            real.var_offsets, real.obj_offset)


@dataclass
class Solution:
    """Result of an interior-point solve of a ConicProgram."""

    status: str
    objective: float
    dual_objective: float
    gap: float
    values: dict[str, np.ndarray]
    iterations: int
    solve_time: float

    @property
    def relative_gap(self) -> float:
        scale = max(abs(self.objective), abs(self.dual_objective), 1.0)
        return self.gap / scale


_STATUS_MAP = {
    "Solved": "optimal",
    "AlmostSolved": "inaccurate",
    "PrimalInfeasible": "infeasible",
    "DualInfeasible": "unbounded",
    "AlmostPrimalInfeasible": "infeasible",
    "AlmostDualInfeasible": "unbounded",
}


def _psd_svec_total(real: RealConicProgram) -> int:
    return sum(n * (n + 1) // 2 for kind, n in real.cone_dims if kind == "psd")


def _scs_data(real: RealConicProgram):
    """Reorder rows for SCS: zero cone first, PSD svec in lower-column-major."""
    zero_rows, psd_rows, psd_sides = [], [], []
    zero_total = 0
    offset = 0
    for kind, d in real.cone_dims:
        if kind == "zero":
            zero_rows.append(np.arange(offset, offset + d))
            zero_total += d
            offset += d
        else:
            m = d * (d + 1) // 2
            # our svec enumerates the upper triangle column-major; SCS wants
            # the lower triangle column-major (same sqrt(2) scaling)
            perm = np.empty(m, dtype=np.int64)
            k = 0
            for j in range(d):
                for i in range(j + 1):
                    perm[i * d - i * (i - 1) // 2 + (j - i)] = offset + k
                    k += 1
            psd_rows.append(perm)
            psd_sides.append(d)
            offset += m
    order = np.concatenate(zero_rows + psd_rows)
    a_mat = sp.csc_matrix(real.a_mat.tocsr()[order])
    data = {"A": a_mat, "b": real.b[order], "c": real.q}
    return data, {"z": zero_total, "s": psd_sides}


def _run_clarabel(real: RealConicProgram, tol: float, max_iter: int,
                  verbose: bool):
    import clarabel

    n = real.q.shape[0]
    cones = []
    for kind, d in real.cone_dims:
        if kind == "zero":
            cones.append(clarabel.ZeroConeT(d))
        else:
            cones.append(clarabel.PSDTriangleConeT(d))
    settings = clarabel.DefaultSettings()
    settings.verbose = verbose
    settings.max_iter = max_iter
    for attr in ("tol_gap_abs", "tol_gap_rel", "tol_feas"):
        setattr(settings, attr, tol)
    solver = clarabel.DefaultSolver(sp.csc_matrix((n, n)), real.q,
                                    sp.csc_matrix(real.a_mat), real.b,
                                    cones, settings)
    res = solver.solve()
    return (str(res.status), float(res.obj_val), float(res.obj_val_dual),
            np.asarray(res.x), int(res.iterations))


_SCS_MAX_ITERS = 400_000


def _run_scs(real: RealConicProgram, tol: float, verbose: bool):
    import scs

    data, cone = _scs_data(real)
    eps = max(tol, 1e-9)
    solver = scs.SCS(data, cone, eps_abs=eps, eps_rel=eps,
                     max_iters=_SCS_MAX_ITERS, verbose=verbose)
    out = solver.solve()
    info = out["info"]
    raw = str(info["status"])
    if raw == "solved":
        status = "Solved"
    elif raw.startswith("solved"):  # "solved (inaccurate ...)"
        status = "AlmostSolved"
    elif "infeasible" in raw:
        status = "PrimalInfeasible"
    elif "unbounded" in raw:
        status = "DualInfeasible"
    else:
        status = raw
    return (status, float(info["pobj"]), float(info["dobj"]),
            np.asarray(out["x"]), int(info["iter"]))


def solve(program: ConicProgram, tol: float = 1e-9, max_iter: int = 500,
          verbose: bool | None = None, backend: str = "auto") -> Solution:
    """Solve a complex conic program.

    Small programs go to the Clarabel interior-point solver; large ones to
    the SCS operator-splitting solver, whose memory footprint stays linear
    in the cone sizes.  ``backend`` (or the QFI_SOLVER environment variable)
    forces "clarabel" or "scs".  Raises SolverError on numerical failure;
    infeasible and unbounded outcomes are reported through Solution.status.
    """
    real = embed_complex(program)
    reduced = bool(getattr(program, "presolve_equalities", False))
    if reduced:
        real = _reduce_equalities(real)

    if verbose is None:
        verbose = os.environ.get("QFI_SOLVER_VERBOSE", "") == "1"
    backend = os.environ.get("QFI_SOLVER", backend)
    if backend == "auto":
        # Clarabel's per-cone cost grows quadratically in the svec size;
        # beyond a few thousand rows the first-order solver wins.
        backend = "scs" if _psd_svec_total(real) >= 3000 else "clarabel"
    if backend not in ("clarabel", "scs"):
        raise ValueError(f"unknown solver backend {backend!r}")

    t0 = time.perf_counter()
    if backend == "scs":
        raw, obj_raw, dobj_raw, x, iters = _run_scs(real, tol, verbose)
        if raw not in _STATUS_MAP and _psd_svec_total(real) < 20_000:
            raw, obj_raw, dobj_raw, x, iters = _run_clarabel(
                real, tol, max_iter, verbose)
    else:
        raw, obj_raw, dobj_raw, x, iters = _run_clarabel(
            real, tol, max_iter, verbose)
        if raw in ("NumericalError", "InsufficientProgress") and not reduced:
            # redundant equality rows can stall the KKT solves; retry with
            # a maximal independent subset
            real = _reduce_equalities(real)
            reduced = True
            raw, obj_raw, dobj_raw, x, iters = _run_clarabel(
                real, tol, max_iter, verbose)
        if raw in ("NumericalError", "InsufficientProgress", "MaxIterations"):
            raw, obj_raw, dobj_raw, x, iters = _run_scs(real, tol, verbose)
    elapsed = time.perf_counter() - t0

    status = _STATUS_MAP.get(raw)
    if status is None:
        raise SolverError(f"solver failed with status {raw}")

    values = {}
    for name, (off, dim) in real.var_offsets.items():
        values[name] = matrix_from_params(dim, x[off:off + dim * dim])
    obj = obj_raw + real.obj_offset
    dobj = dobj_raw + real.obj_offset
    return Solution(
        status=status,
        objective=obj,
        dual_objective=dobj,
        gap=abs(obj - dobj),
        values=values,
        iterations=iters,
        solve_time=elapsed,
    )
