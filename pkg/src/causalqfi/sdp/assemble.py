"""Assembly of the per-class Fisher-information programs.

``assemble_qfi_dual`` builds, for a reference decomposition of N channel
copies and a strategy class, the minimization over the gauge generator h
and the class's dual certificate blocks whose optimum equals the optimal
Fisher information over that class.  ``assemble_reconstruction_primal``
builds the complementary maximization over strategies at a fixed optimal
h, whose solution recovers an optimal strategy operator.
"""

from __future__ import annotations

import itertools

import numpy as np
import scipy.sparse as sp

from ..classes import StrategyClass, constraint_blocks
from ..decomposition import ReferenceDecomposition, add_schur_certificate
from . import linmaps
from .ir import AffineExpr, ConicProgram


def _scalar_identity(expr: AffineExpr, dim: int) -> AffineExpr:
    return expr.apply(sp.csr_matrix(np.eye(dim).reshape(dim * dim, 1)), (dim, dim))


def assemble_qfi_dual(ref: ReferenceDecomposition,
                      strategy_class: StrategyClass) -> ConicProgram:
    """Dual program: minimize the certificate value over h and the class's
    S blocks subject to Schur-linearized payoff domination."""
    strategy_class = StrategyClass.coerce(strategy_class)
    prog = ConicProgram()
    n = ref.n_copies
    wires = ref.wire_dims
    d = dict(wires)["A1I"]
    h = prog.add_variable("h", ref.q)

    def wsub(names):
        return [w for w in wires if w[0] in set(names)]

    def names_io(slots):
        return [f"A{k}{x}" for k in slots for x in "IO"]

    if strategy_class is StrategyClass.PARALLEL:
        s0 = prog.add_variable("s0", 1)
        prog.set_objective(s0.trace())
        add_schur_certificate(prog, ref, s0, h, "all")
        return prog

    if strategy_class is StrategyClass.FIXED_ORDER:
        s0 = prog.add_variable("s0", 1)
        prog.set_objective(s0.trace())
        _dual_chain_eq(prog, ref, tuple(range(1, n + 1)), s0, h, "s")
        return prog

    if strategy_class is StrategyClass.SUPERPOSITION:
        s0 = prog.add_variable("s0", 1)
        prog.set_objective(s0.trace())
        for perm in itertools.permutations(range(1, n + 1)):
            tag = "".join(map(str, perm))
            _dual_chain_eq(prog, ref, perm, s0, h, f"s_{tag}")
        return prog

    if strategy_class is StrategyClass.CLASSICAL_CONTROL:
        s0 = prog.add_variable("s0", 1)
        prog.set_objective(s0.trace())
        svars = {}
        for length in range(1, n):
            for tup in itertools.permutations(range(1, n + 1), length):
                names = names_io(tup)
                dim = int(np.prod([dict(wires)[nm] for nm in names]))
                svars[tup] = prog.add_variable("s_" + "".join(map(str, tup)), dim)
        # chain inequalities
        for tup, s in svars.items():
            k = tup[-1]
            cur = wsub(names_io(tup))
            traced = s.apply(linmaps.ptrace_map(cur, [f"A{k}O"]),
                             (s.shape[0] // d,) * 2)
            if len(tup) == 1:
                lhs = _scalar_identity(s0, d)
            else:
                prev = svars[tup[:-1]]
                tgt = [w for w in cur if w[0] != f"A{k}O"]
                lhs = prev.apply(linmaps.lift_map(tgt, names_io(tup[:-1])),
                                 (s.shape[0] // d,) * 2)
            prog.add_psd(lhs - traced)
        # terminal blocks, one per complete order
        for perm in itertools.permutations(range(1, n + 1)):
            s_last = s0 if n == 1 else svars[perm[:-1]]
            add_schur_certificate(prog, ref, s_last, h, f"A{perm[-1]}O",
                                  tag="".join(map(str, perm)))
        return prog

    if strategy_class is StrategyClass.QUANTUM_CONTROL:
        s0 = prog.add_variable("s0", 1)
        prog.set_objective(s0.trace())
        svars = {}
        slots = list(range(1, n + 1))
        for size in range(1, n):
            for ks in itertools.combinations(slots, size):
                names = names_io(ks)
                dim = int(np.prod([dict(wires)[nm] for nm in names]))
                svars[ks] = prog.add_variable("s_" + "".join(map(str, ks)), dim)
        # chain inequalities over (past set, next slot) pairs
        for size in range(0, n - 1):
            for ks in itertools.combinations(slots, size):
                for k in slots:
                    if k in ks:
                        continue
                    nxt = tuple(sorted(ks + (k,)))
                    s_next = svars[nxt]
                    cur = wsub(names_io(nxt))
                    traced = s_next.apply(
                        linmaps.ptrace_map(cur, [f"A{k}O"]),
                        (s_next.shape[0] // d,) * 2)
                    if not ks:
                        lhs = _scalar_identity(s0, d)
                    else:
                        tgt = [w for w in cur if w[0] != f"A{k}O"]
                        lhs = svars[ks].apply(
                            linmaps.lift_map(tgt, names_io(ks)),
                            (s_next.shape[0] // d,) * 2)
                    prog.add_psd(lhs - traced)
        for k in slots:
            rest = tuple(j for j in slots if j != k)
            s_last = s0 if n == 1 else svars[rest]
            add_schur_certificate(prog, ref, s_last, h, f"A{k}O", tag=f"q{k}")
        return prog

    if strategy_class is StrategyClass.GENERAL:
        s = prog.add_variable("s", ref.dim)
        prog.presolve_equalities = True
        prog.set_objective(s.trace() * (1.0 / d**n))
        for k in range(1, n + 1):
            rest = [w for w in wires if w[0] != f"A{k}O"]
            m = (linmaps.complement_map(rest, [f"A{k}I"])
                 @ linmaps.ptrace_map(wires, [f"A{k}O"]))
            dim_rest = ref.dim // d
            prog.add_eq(s.apply(m, (dim_rest, dim_rest)))
        add_schur_certificate(prog, ref, s, h, None)
        return prog

    raise ValueError(f"unsupported class {strategy_class}")


def _dual_chain_eq(prog: ConicProgram, ref: ReferenceDecomposition, order,
                   s0: AffineExpr, h: AffineExpr, prefix: str):
    """Equality-tightened dual chain along a fixed slot order, ending in
    the terminal Schur block of the order's last slot."""
    wires = ref.wire_dims
    d = dict(wires)["A1I"]
    n = len(order)
    prev = s0
    prev_names: list[str] = []
    for idx in range(1, n):
        k = order[idx - 1]
        names = prev_names + [f"A{k}I", f"A{k}O"]
        dim = int(np.prod([dict(wires)[nm] for nm in names]))
        s = prog.add_variable(f"{prefix}_{idx}", dim)
        cur = [w for w in wires if w[0] in set(names)]
        traced = s.apply(linmaps.ptrace_map(cur, [f"A{k}O"]), (dim // d, dim // d))
        if idx == 1:
            lhs = _scalar_identity(prev, d)
        else:
            tgt = [w for w in cur if w[0] != f"A{k}O"]
            lhs = prev.apply(linmaps.lift_map(tgt, prev_names), (dim // d, dim // d))
        prog.add_eq(lhs - traced)
        prev = s
        prev_names = names
    add_schur_certificate(prog, ref, prev, h, f"A{order[-1]}O",
                          tag=prefix)


def assemble_reconstruction_primal(ref: ReferenceDecomposition,
                                   strategy_class: StrategyClass,
                                   h_opt: np.ndarray,
                                   include_saddle: bool = True):
    """Primal program at the optimal gauge h: maximize Tr[Omega(h) W] over
    the class, subject to the saddle-point stationarity of h.

    The program is posed as a minimization of -Tr[Omega(h) W]; the saddle
    condition requires C0^dag W^T (dC0 - i C0 h) to be Hermitian, which
    pins down strategies that are optimal for every gauge direction.
    Dropping it (``include_saddle=False``) leaves the maximizer degenerate.
    """
    from ..decomposition import performance_operator

    strategy_class = StrategyClass.coerce(strategy_class)
    prog = ConicProgram()
    n = ref.n_copies
    d = dict(ref.wire_dims)["A1I"]
    wt = constraint_blocks(prog, strategy_class, n, d)

    omega = performance_operator(ref, h_opt).data
    payoff = wt.left_mul(omega).trace()
    prog.set_objective(-1.0 * payoff)

    if include_saddle:
        g = ref.dc0 - 1j * ref.c0 @ h_opt
        m_expr = wt.transpose().left_mul(ref.c0.conj().T).right_mul(g)
        prog.add_eq(m_expr - m_expr.adjoint())
        # the saddle rows are nearly dependent on the class equalities and
        # only consistent up to the accuracy of h_opt, so reduce them by QR
        # before handing the system to the solver
        prog.presolve_equalities = True
    return prog, wt
