"""End-to-end estimation pipeline.

Direct quantum Fisher information of a state family, optimal QFI over a
strategy class via the dual conic program, reconstruction of an optimal
strategy from the saddle point, purification, and cross-checks closing the
loop between the optimizer and the direct oracle.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .channels import ChannelFamily, parse_channel_spec
from .classes import (
    ORDERED_CLASSES,
    StrategyClass,
    strip_future,
)
from .decomposition import (
    HermitianH,
    ReferenceDecomposition,
    reference_decomposition,
)
from .hilbert import (
    LabeledOperator,
    PureVector,
    SystemLabel,
    link_product,
    partial_trace,
    pure_link_product,
)
from .sdp.assemble import assemble_qfi_dual, assemble_reconstruction_primal
from .sdp.ir import SolverError, solve

EIG_CUTOFF = 1e-10
GAP_TOL = 1e-6
EQUALITY_TOL = 1e-6
DEFAULT_TOL = 1e-8


# ---------------------------------------------------------------------------
# direct QFI


def _as_matrix(op) -> np.ndarray:
    if isinstance(op, LabeledOperator):
        return op.data
    return np.asarray(op, dtype=complex)


def qfi_direct(rho, drho, cutoff: float = EIG_CUTOFF) -> float:
    """QFI of a differentiable state family from one point (rho, drho).

    Uses the eigendecomposition formula
    J = 2 sum_{i,j: l_i + l_j > cutoff} |<j|drho|i>|^2 / (l_i + l_j).
    """
    r = _as_matrix(rho)
    dr = _as_matrix(drho)
    if (isinstance(rho, LabeledOperator) and isinstance(drho, LabeledOperator)
            and rho.names != drho.names):
        raise ValueError("rho and drho carry different wires")
    if not np.allclose(r, r.conj().T, atol=1e-8):
        raise ValueError("rho is not Hermitian")
    if not np.allclose(dr, dr.conj().T, atol=1e-8):
        raise ValueError("drho is not Hermitian")
    lam, vecs = np.linalg.eigh(r)
    m = vecs.conj().T @ dr @ vecs
    denom = lam[:, None] + lam[None, :]
    mask = denom > cutoff
    return float(2.0 * np.sum(np.abs(m[mask]) ** 2 / denom[mask]))


# ---------------------------------------------------------------------------
# output state of a strategy


def _require_slot_wires(names, n_copies: int):
    expected = {f"A{k}{x}" for k in range(1, n_copies + 1) for x in "IO"}
    missing = expected - set(names)
    if missing:
        raise ValueError(f"strategy is missing slot wires {sorted(missing)}")


def output_state_family(w, family: ChannelFamily, n_copies: int
                        ) -> tuple[LabeledOperator, LabeledOperator]:
    """Output state and its theta-derivative for N channel uses on w.

    ``w`` is a strategy carrying the slot wires A1I..ANO plus any future
    wires; the returned pair lives on the future wires.  Pure strategies
    take a fast path through the channel's Kraus columns.
    """
    ref = reference_decomposition(family, n_copies)
    _require_slot_wires(w.names, n_copies)
    if isinstance(w, PureVector):
        cols = [pure_link_product(ref.column_vector(j), w)
                for j in range(ref.q)]
        dcols = [pure_link_product(ref.column_vector(j, derivative=True), w)
                 for j in range(ref.q)]
        systems = cols[0].systems
        v = np.stack([c.data for c in cols])
        dv = np.stack([c.data for c in dcols])
        rho = v.T @ v.conj()
        drho = dv.T @ v.conj() + v.T @ dv.conj()
        return (LabeledOperator(systems, rho), LabeledOperator(systems, drho))
    rho = link_product(ref.choi(), w)
    drho = link_product(ref.dchoi(), w)
    return rho, drho


# ---------------------------------------------------------------------------
# optimal QFI per class


@dataclass
class QfiResult:
    """Optimal QFI of a strategy class for N uses of a channel family."""

    strategy_class: StrategyClass
    n_copies: int
    channel: dict
    qfi: float
    h_opt: HermitianH
    primal_value: float
    dual_value: float
    gap: float
    runtime: float
    status: str
    iterations: int = 0

    @property
    def relative_gap(self) -> float:
        return self.gap / max(1.0, abs(self.qfi))


def channel_descriptor(family: ChannelFamily) -> dict:
    return {"family": family.name, "theta": family.theta, **family.params}


def optimize_qfi(family: ChannelFamily, n_copies: int,
                 strategy_class: StrategyClass,
                 tol: float = DEFAULT_TOL) -> QfiResult:
    """Solve the joint (h, S) dual program for one class and channel.

    For the classical-control class the optimum is computed over purified
    strategies and is an upper bound on the class value.
    """
    strategy_class = StrategyClass.coerce(strategy_class)
    ref = reference_decomposition(family, n_copies)
    t0 = time.perf_counter()
    prog = assemble_qfi_dual(ref, strategy_class)
    sol = solve(prog, tol=tol)
    runtime = time.perf_counter() - t0
    if sol.status not in ("optimal", "inaccurate"):
        raise SolverError(
            f"{strategy_class.value} dual terminated with {sol.status}")
    h = sol.values["h"]
    h = (h + h.conj().T) / 2
    return QfiResult(
        strategy_class=strategy_class,
        n_copies=n_copies,
        channel=channel_descriptor(family),
        qfi=max(sol.objective, 0.0),
        h_opt=HermitianH(h),
        primal_value=sol.objective,
        dual_value=sol.dual_objective,
        gap=sol.gap,
        runtime=runtime,
        status=sol.status,
        iterations=sol.iterations,
    )


# ---------------------------------------------------------------------------
# reconstruction of an optimal strategy


def purify(w: LabeledOperator, future_name: str = "F",
           cutoff: float = EIG_CUTOFF) -> PureVector:
    """Purify a PSD operator into a pure vector on an added future wire.

    The future dimension is the numerical rank (eigenvalues above cutoff).
    """
    lam, vecs = np.linalg.eigh(w.data)
    keep = np.where(lam > cutoff)[0]
    if keep.size == 0:
        raise ValueError("operator is numerically zero; nothing to purify")
    amps = np.sqrt(lam[keep])
    # |w> = sum_i sqrt(l_i) |v_i> (x) |i>_F
    data = (vecs[:, keep] * amps).reshape(-1)
    systems = list(w.systems) + [SystemLabel(future_name, keep.size)]
    return PureVector(systems, data)


def reconstruct_optimal(family: ChannelFamily, n_copies: int,
                        strategy_class: StrategyClass,
                        h_opt: HermitianH | np.ndarray | None = None,
                        tol: float = DEFAULT_TOL,
                        include_saddle: bool = True,
                        ) -> tuple[LabeledOperator, PureVector]:
    """Recover an optimal strategy at the saddle point h_opt.

    Returns the traced process operator on the slot wires together with its
    purification on an added future wire.  For the classical-control class
    the purified strategy may leave the class (the traced operator is still
    a valid classical-control process).
    """
    strategy_class = StrategyClass.coerce(strategy_class)
    if h_opt is None:
        h_opt = optimize_qfi(family, n_copies, strategy_class, tol=tol).h_opt
    h_mat = h_opt.data if isinstance(h_opt, HermitianH) else np.asarray(h_opt)
    ref = reference_decomposition(family, n_copies)
    prog, wt_expr = assemble_reconstruction_primal(
        ref, strategy_class, h_mat, include_saddle=include_saddle)
    sol = solve(prog, tol=tol)
    if sol.status not in ("optimal", "inaccurate"):
        raise SolverError(
            f"reconstruction terminated with {sol.status}")
    wt_mat = wt_expr.value(sol.values)
    wt_mat = (wt_mat + wt_mat.conj().T) / 2
    wt = LabeledOperator(ref.wires, wt_mat)
    return wt, purify(wt)


def _reminimize_gauge(ref: ReferenceDecomposition, wt: LabeledOperator,
                      cutoff: float = EIG_CUTOFF) -> tuple[float, np.ndarray]:
    """Closed-form minimum of Tr[Omega(h) W] over h for a fixed process W.

    The payoff is a convex quadratic in h; stationarity is the Sylvester
    equation A h + h A = -i (M - M^dag) with A = C0^dag W^T C0 and
    M = C0^dag W^T dC0, solved on the support of A.
    """
    wt_t = wt.data.T
    a = ref.c0.conj().T @ wt_t @ ref.c0
    a = (a + a.conj().T) / 2
    m = ref.c0.conj().T @ wt_t @ ref.dc0
    rhs = -1j * (m - m.conj().T)
    ev, u = np.linalg.eigh(a)
    rhs_t = u.conj().T @ rhs @ u
    denom = ev[:, None] + ev[None, :]
    h_t = np.where(denom > cutoff, rhs_t / np.where(denom > cutoff, denom, 1.0),
                   0.0)
    h = u @ h_t @ u.conj().T
    g = ref.dc0 - 1j * ref.c0 @ h
    value = 4.0 * np.real(np.trace(g.conj().T @ wt_t @ g))
    return float(value), h


@dataclass
class CrosscheckReport:
    """Agreement between the conic optimum and the direct-oracle pipeline."""

    j_sdp: float
    j_direct: float
    j_reminimized: float
    direct_error: float
    reminimize_error: float
    gap: float
    tolerance: float
    passed: bool


def crosscheck(result: QfiResult, w, family: ChannelFamily | None = None,
               tolerance: float = 1e-4) -> CrosscheckReport:
    """Close the loop on a solved instance.

    Evaluates the reconstructed strategy with the direct QFI oracle and
    re-minimizes the payoff over the gauge in closed form; both must match
    the conic optimum within ``tolerance`` (relative).
    """
    if family is None:
        family = parse_channel_spec(result.channel)
    n = result.n_copies
    rho, drho = output_state_family(w, family, n)
    j_direct = qfi_direct(rho, drho)

    wt = w.projector() if isinstance(w, PureVector) else w
    wt = strip_future(wt)
    ref = reference_decomposition(family, n)
    j_remin, _ = _reminimize_gauge(ref, wt)

    scale = max(1.0, abs(result.qfi))
    direct_error = abs(j_direct - result.qfi) / scale
    remin_error = abs(j_remin - result.qfi) / scale
    return CrosscheckReport(
        j_sdp=result.qfi,
        j_direct=j_direct,
        j_reminimized=j_remin,
        direct_error=direct_error,
        reminimize_error=remin_error,
        gap=result.gap,
        tolerance=tolerance,
        passed=direct_error <= tolerance and remin_error <= tolerance,
    )


# ---------------------------------------------------------------------------
# hierarchy reports


@dataclass
class HierarchyReport:
    """Per-class optima at fixed (channel, N) with strict/equal relations."""

    results: list[QfiResult]
    tolerance: float = EQUALITY_TOL
    relations: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.relations:
            self.relations = [
                "<" if b.qfi - a.qfi > self.tolerance else "="
                for a, b in zip(self.results, self.results[1:])
            ]

    @property
    def classes(self) -> list[StrategyClass]:
        return [r.strategy_class for r in self.results]

    def pattern(self) -> str:
        parts = [self.results[0].strategy_class.value]
        for rel, res in zip(self.relations, self.results[1:]):
            parts.append(rel)
            parts.append(res.strategy_class.value)
        return " ".join(parts)

    def all_equal(self) -> bool:
        return all(rel == "=" for rel in self.relations)


def hierarchy_report(family: ChannelFamily, n_copies: int,
                     classes: list[StrategyClass] | None = None,
                     tol: float = DEFAULT_TOL,
                     tolerance: float = EQUALITY_TOL) -> HierarchyReport:
    """Solve every supported class and order the optima."""
    if classes is None:
        classes = list(ORDERED_CLASSES)
    results = [optimize_qfi(family, n_copies, cls, tol=tol)
               for cls in classes]
    return HierarchyReport(results=results, tolerance=tolerance)
