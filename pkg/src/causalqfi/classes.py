"""Strategy classes over N channel slots: canonical circuits, membership
tests, and the affine constraint blocks characterizing each class.

A strategy for N slots is a positive operator on the wires A1I, A1O, ...,
ANI, ANO (plus optional future wires, which membership traces out).  The
classes, ordered by inclusion:

* ``QC-Par``    parallel circuits: all slots applied side by side.
* ``QC-FO``     fixed-order circuits (slot 1, then 2, ...); ``convQC-FO``
                is accepted as an alias since convex mixtures do not
                change the optimal value here.
* ``QC-Sup``    convex mixtures of fixed-order circuits over all orders.
* ``QC-CC``     circuits with classical control of causal order (the
                traced-out characterization; the optimizer for this class
                additionally keeps a purifying future wire, which does not
                change the constraint set on the slot wires).
* ``QC-QC``     circuits with quantum control of causal order.
* ``Gen``       all process matrices (general, possibly causally
                indefinite strategies).
"""

from __future__ import annotations

import itertools
import json
from enum import Enum

import numpy as np

from .hilbert import (
    LabeledOperator,
    PureVector,
    SystemLabel,
    partial_trace,
    tensor_pure,
    traceout_replace,
)
from .sdp.ir import AffineExpr, ConicProgram
from .sdp import linmaps

MEMBERSHIP_TOL = 1e-8


class StrategyClass(str, Enum):
    PARALLEL = "QC-Par"
    FIXED_ORDER = "QC-FO"
    CONV_FIXED_ORDER = "convQC-FO"
    SUPERPOSITION = "QC-Sup"
    CLASSICAL_CONTROL = "QC-CC"
    QUANTUM_CONTROL = "QC-QC"
    GENERAL = "Gen"

    @classmethod
    def coerce(cls, value) -> "StrategyClass":
        sc = cls(value)
        if sc is cls.CONV_FIXED_ORDER:
            return cls.FIXED_ORDER
        return sc


ORDERED_CLASSES = [
    StrategyClass.PARALLEL,
    StrategyClass.FIXED_ORDER,
    StrategyClass.SUPERPOSITION,
    StrategyClass.CLASSICAL_CONTROL,
    StrategyClass.QUANTUM_CONTROL,
    StrategyClass.GENERAL,
]


def _maxent(name_a: str, name_b: str, d: int, normalized: bool = False) -> PureVector:
    data = np.eye(d, dtype=complex).reshape(-1)
    if normalized:
        data = data / np.sqrt(d)
    return PureVector([SystemLabel(name_a, d), SystemLabel(name_b, d)], data)


def _state_vector(psi, name: str, d: int) -> PureVector:
    if psi is None:
        data = np.zeros(d, dtype=complex)
        data[0] = 1.0
    else:
        data = np.asarray(psi, dtype=complex).reshape(-1)
        if data.shape != (d,):
            raise ValueError(f"probe state must have dimension {d}")
    return PureVector([SystemLabel(name, d)], data)


def quantum_switch(psi=None) -> PureVector:
    """The two-slot quantum switch with control in the future wire Fc and
    target output in Ft, probing with |psi> (default |0>)."""
    d = 2
    t0 = tensor_pure(
        tensor_pure(_state_vector(psi, "A1I", d), _maxent("A1O", "A2I", d)),
        tensor_pure(_maxent("A2O", "Ft", d),
                    _state_vector(np.array([1.0, 0.0]), "Fc", d)),
    )
    t1 = tensor_pure(
        tensor_pure(_state_vector(psi, "A2I", d), _maxent("A1I", "A2O", d)),
        tensor_pure(_maxent("A1O", "Ft", d),
                    _state_vector(np.array([0.0, 1.0]), "Fc", d)),
    )
    data = (t0.data + t1.data) / np.sqrt(2)
    return PureVector(t0.systems, data)


def sequential_circuit(n_copies: int = 2, d: int = 2, psi=None) -> PureVector:
    """Identity-wired sequential strategy: probe into slot 1, each slot
    output into the next input, last output into the future wire F."""
    parts = [_state_vector(psi, "A1I", d)]
    for k in range(1, n_copies):
        parts.append(_maxent(f"A{k}O", f"A{k + 1}I", d))
    parts.append(_maxent(f"A{n_copies}O", "F", d))
    out = parts[0]
    for p in parts[1:]:
        out = tensor_pure(out, p)
    return out


def n_choi_circuit(n_copies: int, d: int = 2) -> PureVector:
    """Parallel strategy teleporting each slot's Choi matrix to the future:
    each input is half of a normalized maximally entangled pair and each
    output is identity-wired to the future."""
    out = None
    for k in range(1, n_copies + 1):
        p = tensor_pure(_maxent(f"A{k}I", f"F{k}a", d, normalized=True),
                        _maxent(f"A{k}O", f"F{k}b", d))
        out = p if out is None else tensor_pure(out, p)
    return out


def n_parallel_circuit(n_copies: int, d: int = 2, psi=None) -> PureVector:
    """Parallel strategy feeding a joint probe state into all inputs and
    wiring every output to the future."""
    if psi is None:
        psi = np.zeros(d**n_copies, dtype=complex)
        psi[0] = 1.0
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    if psi.shape != (d**n_copies,):
        raise ValueError("probe state must live on all N inputs")
    probe = PureVector([SystemLabel(f"A{k}I", d) for k in range(1, n_copies + 1)], psi)
    out = probe
    for k in range(1, n_copies + 1):
        out = tensor_pure(out, _maxent(f"A{k}O", f"F{k}", d))
    return out


# ---------------------------------------------------------------------------
# wire bookkeeping


def slot_wires(w: LabeledOperator) -> tuple[int, int]:
    """Infer (N, d) from the slot wires A1I..ANO of an operator."""
    ks = set()
    d = None
    for s in w.systems:
        if len(s.name) >= 3 and s.name[0] == "A" and s.name[-1] in "IO":
            ks.add(int(s.name[1:-1]))
            if d is None:
                d = s.dim
    n = max(ks)
    expected = {f"A{k}{x}" for k in range(1, n + 1) for x in "IO"}
    present = {s.name for s in w.systems}
    if not expected <= present:
        raise ValueError("operator is missing slot wires")
    return n, d


def strip_future(w: LabeledOperator) -> LabeledOperator:
    n, _ = slot_wires(w)
    slot_names = {f"A{k}{x}" for k in range(1, n + 1) for x in "IO"}
    extra = [s.name for s in w.systems if s.name not in slot_names]
    return partial_trace(w, extra) if extra else w


def _wire_dims(n: int, d: int) -> list[tuple[str, int]]:
    out = []
    for k in range(1, n + 1):
        out.append((f"A{k}I", d))
        out.append((f"A{k}O", d))
    return out


# ---------------------------------------------------------------------------
# constraint blocks (primal characterizations)


def constraint_blocks(prog: ConicProgram, strategy_class: StrategyClass,
                      n: int, d: int, prefix: str = "w") -> AffineExpr:
    """Add the characterizing variables and constraints of a class to a
    program and return the affine expression for the full strategy
    operator on all slot wires.

    Every added matrix variable is constrained PSD; equality constraints
    encode the wiring conditions of the class.  ``QC-CC`` covers the
    purified classical-control class as well, since tracing the purifying
    wire lands exactly on this constraint set.
    """
    strategy_class = StrategyClass.coerce(strategy_class)
    wires = _wire_dims(n, d)
    all_names = [nm for nm, _ in wires]

    def sub_wires(names):
        names = set(names)
        return [(nm, dd) for nm, dd in wires if nm in names]

    def lift(expr, from_names):
        return expr.apply(linmaps.lift_map(wires, from_names), (d**(2 * n),) * 2)

    if strategy_class is StrategyClass.PARALLEL:
        in_names = [f"A{k}I" for k in range(1, n + 1)]
        w_in = prog.add_variable(f"{prefix}_in", d**n)
        prog.add_psd(w_in)
        prog.add_eq(w_in.trace() - AffineExpr.scalar(1.0))
        return lift(w_in, in_names)

    if strategy_class is StrategyClass.FIXED_ORDER:
        return _chain_blocks(prog, wires, tuple(range(1, n + 1)), d,
                             prefix, root_weight=1.0)

    if strategy_class is StrategyClass.SUPERPOSITION:
        terms = []
        roots = []
        for perm in itertools.permutations(range(1, n + 1)):
            tag = "".join(map(str, perm))
            term, root = _chain_blocks(prog, wires, perm, d,
                                       f"{prefix}_{tag}", root_weight=None)
            terms.append(term)
            roots.append(root)
        total = roots[0]
        for r in roots[1:]:
            total = total + r
        prog.add_eq(total - AffineExpr.scalar(1.0))
        out = terms[0]
        for t in terms[1:]:
            out = out + t
        return out

    if strategy_class is StrategyClass.CLASSICAL_CONTROL:
        return _cc_blocks(prog, wires, n, d, prefix)

    if strategy_class is StrategyClass.QUANTUM_CONTROL:
        return _qcqc_blocks(prog, wires, n, d, prefix)

    if strategy_class is StrategyClass.GENERAL:
        dim = d**(2 * n)
        wt = prog.add_variable(f"{prefix}_gen", dim)
        prog.add_psd(wt)
        prog.add_eq(wt.trace() - AffineExpr.scalar(float(d**n)))
        for size in range(1, n + 1):
            for ks in itertools.combinations(range(1, n + 1), size):
                rest = [f"A{k}{x}" for k in range(1, n + 1)
                        for x in "IO" if k not in ks]
                sub = [w for w in wires if w[0] not in set(rest)]
                m = (linmaps.complement_map(sub, [f"A{k}O" for k in ks])
                     @ linmaps.ptrace_map(wires, rest))
                dim_sub = int(np.prod([dd for _, dd in sub]))
                prog.add_eq(wt.apply(m, (dim_sub, dim_sub)))
        return wt
    raise ValueError(f"unsupported class {strategy_class}")


def _chain_blocks(prog, wires, order, d, prefix, root_weight):
    """Fixed-order chain along the given slot order.  Returns the lifted
    terminal operator; if root_weight is None the root trace is left free
    and returned alongside."""
    n = len(order)
    all_dim = int(np.prod([dd for _, dd in wires]))
    prev = None
    prev_names = []
    root_trace = None
    for idx, k in enumerate(order, start=1):
        names = prev_names + ([f"A{order[idx - 2]}O"] if idx > 1 else []) + [f"A{k}I"]
        dim = int(np.prod([dict(wires)[nm] for nm in names]))
        w = prog.add_variable(f"{prefix}_{idx}", dim)
        prog.add_psd(w)
        cur_wires = [x for x in wires if x[0] in set(names)]
        traced = w.apply(linmaps.ptrace_map(cur_wires, [f"A{k}I"]),
                         (dim // d, dim // d))
        if idx == 1:
            root_trace = traced
            if root_weight is not None:
                prog.add_eq(traced - AffineExpr.scalar(root_weight))
        else:
            prev_wires = [x for x in wires
                          if x[0] in set(names) and x[0] != f"A{k}I"]
            lifted_prev = prev.apply(
                linmaps.lift_map(prev_wires, prev_names), (dim // d, dim // d))
            prog.add_eq(traced - lifted_prev)
        prev = w
        prev_names = names
    terminal = prev.apply(linmaps.lift_map(wires, prev_names), (all_dim, all_dim))
    if root_weight is None:
        return terminal, root_trace
    return terminal


def _cc_blocks(prog, wires, n, d, prefix):
    """Classical control of causal order: one operator per ordered tuple
    of distinct slots, coupled by summed wiring conditions."""
    all_dim = int(np.prod([dd for _, dd in wires]))
    exprs = {}
    for length in range(1, n + 1):
        for tup in itertools.permutations(range(1, n + 1), length):
            names = [f"A{k}{x}" for k in tup[:-1] for x in "IO"] + [f"A{tup[-1]}I"]
            dim = int(np.prod([dict(wires)[nm] for nm in names]))
            tag = "".join(map(str, tup))
            w = prog.add_variable(f"{prefix}_{tag}", dim)
            prog.add_psd(w)
            exprs[tup] = (w, names, dim)

    # root normalization: sum over first slots of fully traced roots
    total = None
    for k in range(1, n + 1):
        w, names, dim = exprs[(k,)]
        t = w.trace()
        total = t if total is None else total + t
    prog.add_eq(total - AffineExpr.scalar(1.0))

    # wiring conditions for each non-terminal tuple
    for length in range(1, n):
        for tup in itertools.permutations(range(1, n + 1), length):
            w, names, dim = exprs[tup]
            target_names = [f"A{k}{x}" for k in tup for x in "IO"]
            tdim = int(np.prod([dict(wires)[nm] for nm in target_names]))
            target_wires = [x for x in wires if x[0] in set(target_names)]
            lifted = w.apply(linmaps.lift_map(target_wires, names), (tdim, tdim))
            acc = None
            for k2 in range(1, n + 1):
                if k2 in tup:
                    continue
                w2, names2, dim2 = exprs[tup + (k2,)]
                cur_wires = [x for x in wires if x[0] in set(names2)]
                traced = w2.apply(linmaps.ptrace_map(cur_wires, [f"A{k2}I"]),
                                  (tdim, tdim))
                acc = traced if acc is None else acc + traced
            prog.add_eq(acc - lifted)

    out = None
    for tup in itertools.permutations(range(1, n + 1), n):
        w, names, dim = exprs[tup]
        lifted = w.apply(linmaps.lift_map(wires, names), (all_dim, all_dim))
        out = lifted if out is None else out + lifted
    return out


def _qcqc_blocks(prog, wires, n, d, prefix):
    """Quantum control of causal order: one operator per (past set, next
    slot) pair, coupled by subset-wise wiring conditions."""
    all_dim = int(np.prod([dd for _, dd in wires]))
    exprs = {}
    slots = list(range(1, n + 1))
    for size in range(n):
        for ks in itertools.combinations(slots, size):
            for k in slots:
                if k in ks:
                    continue
                names = [f"A{j}{x}" for j in ks for x in "IO"] + [f"A{k}I"]
                dim = int(np.prod([dict(wires)[nm] for nm in names]))
                tag = "".join(map(str, ks)) + "_" + str(k)
                w = prog.add_variable(f"{prefix}_{tag}", dim)
                prog.add_psd(w)
                exprs[(ks, k)] = (w, names, dim)

    total = None
    for k in slots:
        t = exprs[((), k)][0].trace()
        total = t if total is None else total + t
    prog.add_eq(total - AffineExpr.scalar(1.0))

    for size in range(1, n):
        for ks in itertools.combinations(slots, size):
            target_names = [f"A{j}{x}" for j in ks for x in "IO"]
            tdim = int(np.prod([dict(wires)[nm] for nm in target_names]))
            # LHS: sum over next slots k'' not in ks
            acc = None
            for k2 in slots:
                if k2 in ks:
                    continue
                w2, names2, _ = exprs[(ks, k2)]
                cur_wires = [x for x in wires if x[0] in set(names2)]
                traced = w2.apply(linmaps.ptrace_map(cur_wires, [f"A{k2}I"]),
                                  (tdim, tdim))
                acc = traced if acc is None else acc + traced
            # RHS: sum over last slots k in ks of lifted predecessors
            rhs = None
            target_wires = [x for x in wires if x[0] in set(target_names)]
            for k in ks:
                prev = tuple(j for j in ks if j != k)
                w1, names1, _ = exprs[(prev, k)]
                lifted = w1.apply(linmaps.lift_map(target_wires, names1),
                                  (tdim, tdim))
                rhs = lifted if rhs is None else rhs + lifted
            prog.add_eq(acc - rhs)

    out = None
    for k in slots:
        rest = tuple(j for j in slots if j != k)
        w, names, _ = exprs[(rest, k)]
        lifted = w.apply(linmaps.lift_map(wires, names), (all_dim, all_dim))
        out = lifted if out is None else out + lifted
    return out


# ---------------------------------------------------------------------------
# membership


def is_member(w, strategy_class, tol: float = MEMBERSHIP_TOL) -> bool:
    """Test whether a strategy operator (future wires are traced out)
    belongs to the given class.

    Parallel, fixed-order, and general membership are decided by direct
    linear conditions; the remaining classes require a small feasibility
    optimization: the distance of w from the class constraint set is
    minimized and compared against tol.
    """
    strategy_class = StrategyClass.coerce(strategy_class)
    if isinstance(w, PureVector):
        w = w.projector()
    w = strip_future(w)
    n, d = slot_wires(w)
    if not w.is_psd(atol=max(tol, 1e-9)):
        return False

    if strategy_class is StrategyClass.PARALLEL:
        out_names = [f"A{k}O" for k in range(1, n + 1)]
        if not w.allclose(traceout_replace(w, out_names, keep=True), atol=tol):
            return False
        return abs(w.trace() - d**n) <= tol * d**n

    if strategy_class is StrategyClass.FIXED_ORDER:
        cur = w
        if abs(cur.trace() - d**n) > tol * d**n:
            return False
        for k in range(n, 0, -1):
            if not cur.allclose(traceout_replace(cur, [f"A{k}O"], keep=True),
                                atol=tol):
                return False
            cur = partial_trace(cur, [f"A{k}I", f"A{k}O"]) * (1.0 / d)
        return True

    if strategy_class is StrategyClass.GENERAL:
        if abs(w.trace() - d**n) > tol * d**n:
            return False
        for size in range(1, n + 1):
            for ks in itertools.combinations(range(1, n + 1), size):
                rest = [f"A{k}{x}" for k in range(1, n + 1)
                        for x in "IO" if k not in ks]
                sub = partial_trace(w, rest)
                cond = traceout_replace(sub, [f"A{k}O" for k in ks], keep=False)
                if np.abs(cond.data).max() > tol * max(1.0, np.abs(w.data).max()):
                    return False
        return True

    # decomposition-based classes: minimize the operator-norm distance of w
    # from the constraint set
    prog = ConicProgram()
    wt = constraint_blocks(prog, strategy_class, n, d)
    t = prog.add_variable("t_slack", 1)
    dim = d**(2 * n)
    diff = wt - AffineExpr.constant(w.data)
    t_eye = t.apply(_vec_eye(dim), (dim, dim))
    prog.add_psd(t_eye - diff)
    prog.add_psd(t_eye + diff)
    prog.set_objective(t.trace())
    from .sdp.ir import solve

    sol = solve(prog, tol=1e-9)
    if sol.status not in ("optimal", "inaccurate"):
        return False
    # the achievable slack is limited by solver accuracy, so floor the
    # acceptance threshold; true violations give distances orders of
    # magnitude larger
    threshold = max(tol, 1e-6) * max(1.0, float(np.abs(w.data).max()))
    return sol.objective <= threshold


def _vec_eye(dim: int):
    import scipy.sparse as sp

    return sp.csr_matrix(np.eye(dim).reshape(dim * dim, 1))


# ---------------------------------------------------------------------------
# serialization


def process_to_json(w: LabeledOperator) -> str:
    payload = {
        "wires": [{"name": s.name, "dim": s.dim} for s in w.systems],
        "data_re": np.real(w.data).reshape(-1).tolist(),
        "data_im": np.imag(w.data).reshape(-1).tolist(),
    }
    return json.dumps(payload)


def process_from_json(text: str) -> LabeledOperator:
    payload = json.loads(text)
    systems = [SystemLabel(x["name"], int(x["dim"])) for x in payload["wires"]]
    dim = int(np.prod([s.dim for s in systems]))
    data = (np.array(payload["data_re"]) + 1j * np.array(payload["data_im"]))
    return LabeledOperator(systems, data.reshape(dim, dim))
