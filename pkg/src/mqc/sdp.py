"""Self-contained conic solvers for the two programs the library needs:

* the fully-decomposable-witness program (operator-splitting / ADMM style,
  PSD projections only, no linear-system factorizations), and
* PSD feasibility under scalar-coefficient linear constraints (alternating
  projections with stall-based one-sided infeasibility detection).

Returned points always satisfy their conic constraints exactly (they are the
output of a projection); linear/coupling constraints hold within the reported
residual, which is recomputed once at exit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import linalg
from .config import TOLS


class SolverError(ValueError):
    pass


@dataclass(frozen=True)
class SolveConfig:
    max_iter: int = 20000
    tol: float = 1e-8
    step: float = 1.0
    balance_every: int = 50     # residual-balancing cadence (x2 / /2)
    stall_window: int = 400     # feasibility stall detection window


@dataclass
class SolveReport:
    value: float
    point: dict
    primal_residual: float
    dual_residual: float
    iterations: int
    status: str  # optimal | max-iter | infeasible-certificate

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "primal_residual": self.primal_residual,
            "dual_residual": self.dual_residual,
            "iterations": self.iterations,
            "status": self.status,
        }


@dataclass(frozen=True)
class WitnessProgram:
    """max -Tr(W rho) over W with ||W|| <= norm_cap and, for every listed
    bipartition B, a split W = M_B + N_B^{T_B} with M_B, N_B PSD."""

    dims: tuple[int, ...]
    rho: np.ndarray = field(repr=False)
    bipartitions: tuple[tuple[int, ...], ...] = ()
    norm_cap: float = 1.0

    def __init__(self, dims: Sequence[int], rho, bipartitions, norm_cap: float = 1.0):
        dims = tuple(int(d) for d in dims)
        rho = np.asarray(rho, dtype=np.complex128)
        total = int(np.prod(dims))
        if rho.shape != (total, total):
            raise SolverError(f"rho shape {rho.shape} does not match dims {dims}")
        if total > 64:
            raise SolverError(f"dimension {total} beyond supported 64")
        bips = tuple(tuple(sorted(int(i) for i in b)) for b in bipartitions)
        if not bips:
            raise SolverError("need at least one bipartition")
        if len(bips) > 15:
            raise SolverError("more than 15 bipartitions unsupported")
        for b in bips:
            if not b or not all(1 <= i <= len(dims) for i in b) or len(b) >= len(dims):
                raise SolverError(f"invalid bipartition {b}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "bipartitions", bips)
        object.__setattr__(self, "norm_cap", float(norm_cap))


def _partial_transpose(mat: np.ndarray, dims: Sequence[int], side: Sequence[int]) -> np.ndarray:
    n = len(dims)
    t = mat.reshape(tuple(dims) + tuple(dims))
    perm = list(range(2 * n))
    for i in side:
        perm[i - 1], perm[n + i - 1] = perm[n + i - 1], perm[i - 1]
    total = int(np.prod(dims))
    return t.transpose(perm).reshape(total, total)


def _clip_opnorm(h: np.ndarray, cap: float) -> np.ndarray:
    """Nearest Hermitian matrix with eigenvalues in [-cap, cap]."""
    w, v = np.linalg.eigh((h + h.conj().T) / 2.0)
    w = np.clip(w, -cap, cap)
    return (v * w) @ v.conj().T


def _psd(h: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((h + h.conj().T) / 2.0)
    w = np.maximum(w, 0.0)
    return (v * w) @ v.conj().T


def solve_witness(p: WitnessProgram, cfg: SolveConfig = SolveConfig()) -> SolveReport:
    """Operator-splitting iteration over (W, {M_B, N_B}).

    Consensus ADMM: the W step averages the per-bipartition decompositions and
    clips eigenvalues into [-cap, cap]; each bipartition step alternates PSD
    projections of M_B and N_B against the coupling W = M_B + N_B^{T_B}.
    Exact feasibility is restored at exit by mixing a little identity in, so
    the returned objective is attained by a certified feasible point and is a
    valid lower bound for the program's max.
    """
    dims, rho, cap = p.dims, p.rho, p.norm_cap
    total = rho.shape[0]
    k = len(p.bipartitions)
    tau = cfg.step
    w_mat = np.zeros((total, total), dtype=np.complex128)
    ms = [np.zeros_like(w_mat) for _ in range(k)]
    ns = [np.zeros_like(w_mat) for _ in range(k)]
    ys = [np.zeros_like(w_mat) for _ in range(k)]

    def nt(j):
        return _partial_transpose(ns[j], dims, p.bipartitions[j])

    primal = dual = np.inf
    it = 0
    for it in range(1, cfg.max_iter + 1):
        # W step: minimize Tr(W rho) + (tau/2) sum ||W - (M_j + N_j^T + Y_j/tau)||^2
        target = sum(ms[j] + nt(j) - ys[j] / tau for j in range(k)) / k
        w_new = _clip_opnorm(target - rho / (tau * k), cap)
        # per-bipartition step (one inner alternation is enough at this scale)
        for j in range(k):
            anchor = w_new + ys[j] / tau
            ms[j] = _psd(anchor - nt(j))
            ns[j] = _psd(_partial_transpose(anchor - ms[j], dims, p.bipartitions[j]))
        # dual update + residuals
        primal = 0.0
        for j in range(k):
            gap = w_new - ms[j] - nt(j)
            ys[j] = ys[j] + tau * gap
            primal = max(primal, float(np.linalg.norm(gap)))
        dual = float(np.linalg.norm(w_new - w_mat)) * tau * np.sqrt(k)
        w_mat = w_new
        if primal < cfg.tol and dual < cfg.tol:
            break
        if cfg.balance_every and it % cfg.balance_every == 0:
            if primal > 10 * dual:
                tau *= 2.0
            elif dual > 10 * primal:
                tau /= 2.0

    # exact feasibility restoration: ||W|| <= cap already (clip output); lift
    # the M residues by mixing toward the identity until all are PSD.
    w_ball = _clip_opnorm(w_mat, cap)
    eps = 0.0
    for j in range(k):
        m_res = w_ball - nt(j)
        lam = float(np.linalg.eigvalsh((m_res + m_res.conj().T) / 2.0).min())
        eps = max(eps, -lam)
    eps = max(0.0, eps) + 1e-14
    w_feas = (w_ball + eps * np.eye(total)) / (1.0 + eps / cap if cap > 0 else 1.0)
    # keep the exhibited decomposition for the report
    point = {"W": w_feas}
    scale = 1.0 + eps / cap if cap > 0 else 1.0
    for j, b in enumerate(p.bipartitions):
        m_res = (w_ball - nt(j) + eps * np.eye(total)) / scale
        point[f"M_{j}"] = _psd(m_res)
        point[f"N_{j}"] = ns[j] / scale
    raw = float(np.real(-np.trace(w_mat @ rho)))
    value = float(np.real(-np.trace(w_feas @ rho)))
    status = "optimal" if (primal < cfg.tol and dual < cfg.tol) else "max-iter"
    # true residual of the returned point, recomputed once
    true_res = 0.0
    for j, b in enumerate(p.bipartitions):
        rec = point[f"M_{j}"] + _partial_transpose(point[f"N_{j}"], dims, b)
        true_res = max(true_res, float(np.abs(rec - w_feas).max()))
    report = SolveReport(value=value, point=point, primal_residual=true_res,
                         dual_residual=dual, iterations=it, status=status)
    report.point["gap_estimate"] = abs(raw - value) + primal
    return report


# ---------------------------------------------------------------------------
# feasibility: PSD variables under scalar-coefficient equality constraints


@dataclass(frozen=True)
class FeasibilityProgram:
    """Find X_v >= 0 with sum_v C[c, v] X_v = target_c for every constraint c.

    All variables and targets share one matrix dimension; coefficients are
    real scalars (enough for deterministic-strategy hidden-state models).
    """

    var_dim: int
    n_vars: int
    coeffs: np.ndarray = field(repr=False)    # (n_constraints, n_vars) real
    targets: np.ndarray = field(repr=False)   # (n_constraints, d, d) Hermitian

    def __init__(self, var_dim: int, coeffs, targets):
        coeffs = np.asarray(coeffs, dtype=float)
        targets = np.asarray(targets, dtype=np.complex128)
        if coeffs.ndim != 2:
            raise SolverError("coeffs must be a 2-D matrix")
        n_con, n_vars = coeffs.shape
        if targets.shape != (n_con, var_dim, var_dim):
            raise SolverError(f"targets shape {targets.shape} inconsistent")
        if n_vars * var_dim * var_dim > 512 * 512:
            raise SolverError("feasibility program too large")
        object.__setattr__(self, "var_dim", int(var_dim))
        object.__setattr__(self, "n_vars", int(n_vars))
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "targets", targets)


def solve_feasibility(p: FeasibilityProgram, cfg: SolveConfig = SolveConfig()) -> SolveReport:
    """Alternating projections between the affine set and the PSD cone.

    Converges to a feasible point when one exists (residual <= 1e-7); when the
    residual plateaus above the infeasibility floor the program is reported
    infeasible (heuristic, one-sided).
    """
    d, n_vars, n_con = p.var_dim, p.n_vars, p.coeffs.shape[0]
    if n_vars == 0 or n_con == 0:
        return SolveReport(0.0, {"X": []}, 0.0, 0.0, 0, "optimal")
    pinv = np.linalg.pinv(p.coeffs)          # (n_vars, n_con)
    xs = np.zeros((n_vars, d, d), dtype=np.complex128)

    def affine_project(vars_):
        resid = np.einsum("cv,vij->cij", p.coeffs, vars_) - p.targets
        return vars_ - np.einsum("vc,cij->vij", pinv, resid)

    def residual_of(vars_):
        r = np.einsum("cv,vij->cij", p.coeffs, vars_) - p.targets
        return float(np.sqrt((np.abs(r) ** 2).sum()))

    history: list[float] = []
    res = np.inf
    it = 0
    for it in range(1, cfg.max_iter + 1):
        xs = affine_project(xs)
        for v in range(n_vars):
            xs[v] = _psd(xs[v])
        res = residual_of(xs)
        history.append(res)
        if res <= TOLS.feasible_residual:
            return SolveReport(0.0, {"X": [x.copy() for x in xs]}, res, 0.0, it, "optimal")
        if len(history) > cfg.stall_window:
            window = history[-cfg.stall_window:]
            if res > TOLS.infeasible_floor and window[0] - window[-1] < 1e-12 + 1e-6 * res:
                return SolveReport(0.0, {"X": [x.copy() for x in xs]}, res, 0.0, it,
                                   "infeasible-certificate")
    return SolveReport(0.0, {"X": [x.copy() for x in xs]}, res, 0.0, it, "max-iter")
