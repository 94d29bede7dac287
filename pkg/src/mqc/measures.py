"""Discrete-variable multipartite correlation measures.

Every evaluator takes a state together with a sub-repartition and works on the
grouped reduction, so the same calling convention covers any part of a larger
system.  Results carry an explicit bound_kind: 'exact' values are closed-form,
'lower-bound'/'upper-bound' values come from searches or solvers and are
always attained by an exhibited certificate (feasible point, decomposition,
or concrete free state).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import linalg, sdp
from .config import TOLS
from .partitions import SubRepartition, bounded_coarsenings, partitions_into_k, set_partitions
from .qstate import DensityState, group_by, make_rng

PURITY_PURE = 1e-9


class MeasureError(ValueError):
    pass


@dataclass
class MeasureResult:
    value: float
    bound_kind: str  # exact | lower-bound | upper-bound
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.value < 0 and self.value > -1e-12:
            self.value = 0.0
        if self.value < 0:
            raise MeasureError(f"measure value must be non-negative, got {self.value}")
        if self.bound_kind not in ("exact", "lower-bound", "upper-bound"):
            raise MeasureError(f"bad bound_kind {self.bound_kind!r}")

    def to_dict(self) -> dict:
        return {"value": self.value, "bound_kind": self.bound_kind,
                "diagnostics": self.diagnostics}


def _grouped(rho: DensityState, part: SubRepartition | None) -> DensityState:
    return rho if part is None else group_by(rho, part)


# ---------------------------------------------------------------------------
# exact single-formula measures


def c_l1(rho: DensityState, part: SubRepartition | None = None) -> MeasureResult:
    """Sum of magnitudes of off-diagonal entries in the product basis."""
    g = _grouped(rho, part)
    mat = np.abs(g.data)
    value = float(mat.sum() - np.trace(mat))
    return MeasureResult(value, "exact")


def imag_robustness(rho: DensityState, part: SubRepartition | None = None) -> MeasureResult:
    """Half the trace norm of rho - rho^T (product-basis transpose)."""
    g = _grouped(rho, part)
    value = 0.5 * linalg.trace_norm(g.data - g.data.T)
    return MeasureResult(value, "exact")


# ---------------------------------------------------------------------------
# pure-state entanglement and its convex roof


def _factor_spectra(vec: np.ndarray, dims: Sequence[int]):
    """Eigenvalues of each single-factor reduction of a pure state."""
    n = len(dims)
    t = vec.reshape(tuple(dims))
    for j in range(n):
        m = np.moveaxis(t, j, 0).reshape(dims[j], -1)
        s = np.linalg.svd(m, compute_uv=False)
        yield s * s


def _entropy_bits(p: np.ndarray) -> float:
    p = p[p > TOLS.entropy_eig_floor]
    return float(-(p * np.log2(p)).sum())


def _pure_value(vec: np.ndarray, dims: Sequence[int], kind: str, q: float | None) -> float:
    spectra = list(_factor_spectra(vec, dims))
    if kind == "Ef":
        return 0.5 * sum(_entropy_bits(p) for p in spectra)
    if kind == "C":
        m = len(dims)
        return math.sqrt(max(0.0, m - sum(float((p * p).sum()) for p in spectra)))
    if kind == "Tq":
        if q is None or q <= 1:
            raise MeasureError("Tq needs q > 1")
        return 0.5 * sum(float((np.sum(p ** q) - 1.0) / (1.0 - q)) for p in spectra)
    raise MeasureError(f"unknown pure entanglement kind {kind!r}")


def _dominant_vector(rho: DensityState) -> np.ndarray:
    w, v = np.linalg.eigh(rho.data)
    return v[:, -1]


def pure_entanglement(psi: DensityState, part: SubRepartition, kind: str = "Ef",
                      q: float | None = None) -> MeasureResult:
    """Entropy/purity functionals of the block reductions of a pure state."""
    if part.block_count < 2:
        raise MeasureError("entanglement needs a partition with >= 2 blocks")
    g = group_by(psi, part)
    if g.purity() < 1.0 - PURITY_PURE:
        raise MeasureError(f"grouped state is mixed (purity {g.purity():.6f})")
    vec = _dominant_vector(g)
    return MeasureResult(_pure_value(vec, g.dims, kind, q), "exact",
                         {"kind": kind, "blocks": str(part)})


@dataclass(frozen=True)
class RoofConfig:
    ensemble_size_range: tuple[int, int] = (0, 0)  # (0, 0) = rank .. rank^2
    restarts: int = 8
    iteration_budget: int = 200
    tolerance: float = 1e-9
    seed: int = 7


def _random_isometry(rng, m: int, r: int) -> np.ndarray:
    g = rng.normal(size=(m, r)) + 1j * rng.normal(size=(m, r))
    q_mat, _ = np.linalg.qr(g)
    return q_mat[:, :r]


def convex_roof(rho: DensityState, part: SubRepartition, kind: str = "Ef",
                cfg: RoofConfig = RoofConfig(), q: float | None = None) -> MeasureResult:
    """Heuristic convex-roof upper bound.

    Decompositions rho = sum_i p_i |psi_i><psi_i| are parameterized by
    isometries applied to the scaled eigenvectors; random restarts plus greedy
    local perturbation refine the best average.  The eigen-ensemble itself is
    always tried first, so pure inputs reproduce the pure-state value.
    """
    if part.block_count < 2:
        raise MeasureError("entanglement needs a partition with >= 2 blocks")
    g = group_by(rho, part)
    w, v = np.linalg.eigh(g.data)
    keep = w > 1e-12
    w, v = w[keep], v[:, keep]
    r = len(w)
    roots = v * np.sqrt(w)  # columns: sqrt(p_k) |u_k>

    def ensemble_value(t: np.ndarray) -> float:
        # members are columns of roots @ t.conj().T ; weights are their norms
        members = roots @ t.conj().T
        total = 0.0
        for i in range(members.shape[1]):
            p = float(np.real(np.vdot(members[:, i], members[:, i])))
            if p < 1e-14:
                continue
            total += p * _pure_value(members[:, i] / math.sqrt(p), g.dims, kind, q)
        return total

    rng = make_rng(cfg.seed)
    lo, hi = cfg.ensemble_size_range
    if lo <= 0 or hi <= 0:
        lo, hi = r, r * r
    sizes = sorted(set([max(r, lo), min(max(r, hi), r * r)]))
    best = ensemble_value(np.eye(r))  # eigen-ensemble start
    evals = 1
    for m_size in sizes:
        for _ in range(cfg.restarts):
            t = np.eye(m_size, r) if evals == 1 else _random_isometry(rng, m_size, r)
            cur = ensemble_value(t)
            evals += 1
            sigma = 0.3
            for _ in range(cfg.iteration_budget):
                pert = t + sigma * (rng.normal(size=t.shape) + 1j * rng.normal(size=t.shape))
                q_mat, _ = np.linalg.qr(pert)
                cand = q_mat[:, :r]
                val = ensemble_value(cand)
                evals += 1
                if val < cur - cfg.tolerance:
                    t, cur = cand, val
                    sigma = min(0.5, sigma * 1.2)
                else:
                    sigma = max(1e-3, sigma * 0.9)
            best = min(best, cur)
    return MeasureResult(best, "upper-bound",
                         {"rank": r, "evaluations": evals, "kind": kind})


def kpe_min_sum(psi: DensityState, part: SubRepartition, k: int,
                h: str = "von-neumann", q: float | None = None) -> MeasureResult:
    """Half the minimal block-entropy sum over depth-bounded regroupings.

    The minimum ranges over all partitions of the given blocks where each
    group unions at most k-1 blocks.  Default h is the von Neumann entropy
    (subadditive); Tsallis is available but flagged, since subadditivity is
    not asserted for it.
    """
    if k < 2:
        raise MeasureError("level k must be >= 2")
    g = group_by(psi, part)
    if g.purity() < 1.0 - PURITY_PURE:
        raise MeasureError("minimal-sum measure is defined on pure inputs")
    vec = _dominant_vector(g)
    t = vec.reshape(g.dims)
    block_index = {b: j for j, b in enumerate(part.blocks)}

    def block_entropy(factors: tuple[int, ...]) -> float:
        m = np.moveaxis(t, factors, range(len(factors)))
        m = m.reshape(int(np.prod([g.dims[f] for f in factors])), -1)
        p = np.linalg.svd(m, compute_uv=False) ** 2
        if h == "von-neumann":
            return _entropy_bits(p)
        if h == "tsallis":
            if q is None or q <= 1:
                raise MeasureError("tsallis needs q > 1")
            p = p[p > TOLS.entropy_eig_floor]
            return float((np.sum(p ** q) - 1.0) / (1.0 - q))
        raise MeasureError(f"unknown entropy kind {h!r}")

    best = math.inf
    best_x = None
    for x in bounded_coarsenings(part, k - 1):
        total = 0.0
        for union_block in x.blocks:
            factors = tuple(sorted(block_index[b] for b in part.blocks
                                   if set(b) <= set(union_block)))
            total += block_entropy(factors)
        if total < best:
            best, best_x = total, x
    diags = {"minimizer": str(best_x), "entropy": h}
    if h != "von-neumann":
        diags["warning"] = "subadditivity not asserted for this entropy"
    return MeasureResult(0.5 * best, "exact", diags)


# ---------------------------------------------------------------------------
# separable / producible overlaps


def _admissible_partitions(n: int, mode: str, k: int) -> list[list[list[int]]]:
    items = list(range(n))
    if mode == "k-separable":
        if not (2 <= k <= n):
            raise MeasureError(f"k-separable needs 2 <= k <= {n}")
        return [p for p in partitions_into_k(items, k)]
    if mode == "k-producible":
        if not (1 <= k <= n):
            raise MeasureError(f"k-producible needs 1 <= k <= {n}")
        return [p for p in set_partitions(items) if max(len(b) for b in p) <= k]
    raise MeasureError(f"unknown overlap mode {mode!r}")


def _check_overlap_operator(op: np.ndarray) -> np.ndarray:
    op = linalg.require_hermitian(op, 1e-9)
    w = np.linalg.eigvalsh(op)
    if w.min() < -1e-9:
        raise MeasureError(f"overlap operator must be PSD, min eig {w.min():.2e}")
    if w.max() > 1.0 + 1e-9:
        raise MeasureError(f"operator norm {w.max():.6f} exceeds 1")
    return op


def _contract_block(l_tensor: np.ndarray, dims, blocks, vectors, free: int) -> np.ndarray:
    """Partial expectation of L in every block vector except `free`: the
    operator on the free block whose top eigenvector is the optimal update."""
    n = len(dims)
    other = np.array([1.0 + 0j])
    order: list[int] = []
    for bi, block in enumerate(blocks):
        if bi == free:
            continue
        other = np.kron(other, vectors[bi])
        order.extend(block)
    free_block = list(blocks[free])
    d_free = int(np.prod([dims[f] for f in free_block]))
    d_other = other.size
    perm = free_block + order
    t2 = l_tensor.transpose(perm + [a + n for a in perm])
    t2 = t2.reshape(d_free, d_other, d_free, d_other)
    return np.einsum("aibj,i,j->ab", t2, other.conj(), other)


def _alternating_max(op: np.ndarray, dims, blocks, rng, iters: int = 80,
                     tol: float = 1e-11) -> float:
    n = len(dims)
    l_tensor = op.reshape(tuple(dims) + tuple(dims))
    vectors = []
    for block in blocks:
        d = int(np.prod([dims[f] for f in block]))
        v = rng.normal(size=d) + 1j * rng.normal(size=d)
        vectors.append(v / np.linalg.norm(v))
    last = -1.0
    val = 0.0
    for _ in range(iters):
        for bi in range(len(blocks)):
            m = _contract_block(l_tensor, dims, blocks, vectors, bi)
            w, v = np.linalg.eigh((m + m.conj().T) / 2.0)
            vectors[bi] = v[:, -1]
            val = float(w[-1])
        if abs(val - last) < tol:
            break
        last = val
    return val


def sep_overlap(op, dims: Sequence[int], mode: str, k: int,
                seed: int = 11, starts: int = 6):
    """Best overlap of a PSD contraction operator with k-separable or
    k-producible pure product states.

    Alternating maximization over block vectors (the optimal single block is
    the top eigenvector of the partially contracted operator), multi-start.
    Returns (estimate, 'lower-bound'): the estimate is attained by an explicit
    product state, never above the true supremum.
    """
    dims = tuple(int(d) for d in dims)
    op = _check_overlap_operator(np.asarray(op, dtype=np.complex128))
    rng = make_rng(seed)
    best = 0.0
    for blocks in _admissible_partitions(len(dims), mode, k):
        for _ in range(starts):
            best = max(best, _alternating_max(op, dims, blocks, rng))
    return best, "lower-bound"


def _bloch_candidates(res: int) -> np.ndarray:
    """Qubit candidate states: basis kets plus a Fibonacci sphere grid."""
    golden = (1 + 5 ** 0.5) / 2
    ks = np.arange(res)
    z = 1 - 2 * (ks + 0.5) / res
    theta = np.arccos(np.clip(z, -1, 1))
    phi = 2 * np.pi * ks / golden
    vecs = np.stack([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)], axis=1)
    basis = np.array([[1.0, 0.0], [0.0, 1.0]], dtype=np.complex128)
    return np.concatenate([basis, vecs], axis=0)


def sep_overlap_certified(op, dims: Sequence[int], mode: str, k: int,
                          grid: int = 400):
    """Independent two-sided bracket (lower, upper) for the overlap.

    Lower bound: brute-force product grid on all factors but one, the last
    factor optimized in closed form (top eigenvector of the contracted
    operator).  Upper bound: for (numerically) rank-one operators, Schmidt
    coefficients across bipartitions obtained by merging admissible blocks;
    infinite when no certificate applies.  Total dimension capped at 16.
    """
    dims = tuple(int(d) for d in dims)
    if int(np.prod(dims)) > 16:
        raise MeasureError("certified oracle supports total dimension <= 16")
    op = _check_overlap_operator(np.asarray(op, dtype=np.complex128))
    n = len(dims)
    admissible = _admissible_partitions(n, mode, k)

    # ----- lower bound: grid on factors 0..n-2, closed-form last factor
    cand = []
    for j in range(n - 1):
        if dims[j] == 2:
            cand.append(_bloch_candidates(grid))
        else:
            eye = np.eye(dims[j], dtype=np.complex128)
            rng = make_rng(1234 + j)
            extra = rng.normal(size=(grid, dims[j])) + 1j * rng.normal(size=(grid, dims[j]))
            extra /= np.linalg.norm(extra, axis=1, keepdims=True)
            cand.append(np.concatenate([eye, extra], axis=0))
    fronts = np.array([[1.0 + 0j]])
    for c in cand:  # all grid products on the leading factors, batched
        fronts = np.einsum("ka,lb->klab", fronts, c).reshape(-1, fronts.shape[1] * c.shape[1])
    d_last = dims[-1]
    d_front = int(np.prod(dims[:-1]))
    l_mat = op.reshape(d_front, d_last, d_front, d_last)
    lower = 0.0
    for chunk in np.array_split(fronts, max(1, fronts.shape[0] // 8192)):
        ops = np.einsum("ca,aibj,cb->cij", chunk.conj(), l_mat, chunk)
        ops = (ops + np.conj(np.transpose(ops, (0, 2, 1)))) / 2.0
        lower = max(lower, float(np.linalg.eigvalsh(ops)[:, -1].max()))

    # ----- upper bound: rank-one Schmidt certificates
    w, v = np.linalg.eigh(op)
    upper = math.inf
    if w[:-1].max(initial=0.0) <= 1e-10:  # numerically rank one
        lam, psi = float(w[-1]), v[:, -1]
        t = psi.reshape(dims)

        def schmidt_sq(side: tuple[int, ...]) -> float:
            m = np.moveaxis(t, side, range(len(side)))
            m = m.reshape(int(np.prod([dims[f] for f in side])), -1)
            s = np.linalg.svd(m, compute_uv=False)
            return float(s[0] ** 2)

        upper = 0.0
        for blocks in admissible:
            if len(blocks) == 1:
                upper = max(upper, 1.0)
                continue
            # any product state over these blocks is product across every
            # two-set merge of them, so each merge gives a valid cap
            caps = []
            for r in range(1, len(blocks)):
                for left in itertools.combinations(range(len(blocks)), r):
                    side = tuple(sorted(f for bi in left for f in blocks[bi]))
                    caps.append(schmidt_sq(side))
            upper = max(upper, min(caps))
        upper *= lam
    return lower, upper


# ---------------------------------------------------------------------------
# witness-based entanglement lower bounds


def _local_unitary(rng, dims: Sequence[int]) -> np.ndarray:
    out = np.array([[1.0 + 0j]])
    for d in dims:
        g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        q_mat, r_mat = np.linalg.qr(np.eye(d) + 0.25 * g)
        q_mat = q_mat * (np.diagonal(r_mat) / np.abs(np.diagonal(r_mat)))
        out = np.kron(out, q_mat)
    return out


def _candidate_operators(rho: DensityState, rng) -> list[tuple[str, np.ndarray]]:
    from .qstate import ghz as make_ghz, w_state as make_w
    cands = [("dominant-eigenvector", np.outer(_dominant_vector(rho),
                                               _dominant_vector(rho).conj()))]
    if len(set(rho.dims)) == 1:
        cands.append(("ghz-projector", make_ghz(rho.n, rho.dims[0]).data))
        if rho.dims[0] == 2:
            cands.append(("w-projector", make_w(rho.n).data))
    for label, base in list(cands):
        u = _local_unitary(rng, rho.dims)
        cands.append((label + "-perturbed", u @ base @ u.conj().T))
    return cands


def witness_entanglement(rho: DensityState, k: int, mode: str = "k-entanglement",
                         seed: int = 23) -> MeasureResult:
    """Lower bound from a finite witness family.

    For each candidate operator L the score is Tr(L rho) minus the best free
    pure-state overlap; overlaps use the certified rank-one bracket when it
    applies (certified lower bound on the measure) and the alternating
    estimate otherwise (flagged heuristic).  Norms are operator norms.
    """
    n = rho.n
    if mode == "k-entanglement":
        if not (2 <= k <= n):
            raise MeasureError(f"need 2 <= k <= {n}")
        overlap_mode, overlap_k = "k-separable", k
    elif mode == "k-partite":
        if not (2 <= k <= n):
            raise MeasureError(f"need 2 <= k <= {n}")
        overlap_mode, overlap_k = "k-producible", k - 1
    else:
        raise MeasureError(f"unknown mode {mode!r}")
    rng = make_rng(seed)
    best, best_diag = 0.0, {"candidate": None}
    certified_all = True
    for label, op in _candidate_operators(rho, rng):
        tr = float(np.real(np.trace(op @ rho.data)))
        overlap = None
        certified = False
        if rho.dim <= 16:
            try:
                low, up = sep_overlap_certified(op, rho.dims, overlap_mode, overlap_k)
                if math.isfinite(up):
                    overlap, certified = up, True
                else:
                    overlap = None
            except MeasureError:
                overlap = None
        if overlap is None:
            overlap, _ = sep_overlap(op, rho.dims, overlap_mode, overlap_k, seed=seed)
            certified = False
        margin = max(0.0, tr - overlap)
        if margin > best:
            best = margin
            best_diag = {"candidate": label, "trace": tr, "overlap": overlap,
                         "overlap_certified": certified}
        certified_all = certified_all and certified
    best_diag["norm"] = "operator"
    if not best_diag.get("overlap_certified", False):
        best_diag["heuristic_overlap"] = True
    return MeasureResult(best, "lower-bound", best_diag)


# ---------------------------------------------------------------------------
# non-MPPT conic measure


def _bipartition_sides(m: int) -> list[tuple[int, ...]]:
    """One representative side per unordered bipartition of m factors."""
    sides = []
    for r in range(1, m):
        for side in itertools.combinations(range(1, m + 1), r):
            comp = tuple(i for i in range(1, m + 1) if i not in side)
            if side < comp:  # dedupe complements (transpose-invariant program)
                sides.append(side)
    return sides


def non_mppt(rho: DensityState, part: SubRepartition,
             cfg: sdp.SolveConfig = sdp.SolveConfig()) -> MeasureResult:
    """Conic-program value over fully decomposable witnesses with unit
    operator norm; a certified lower bound (feasible point), reported exact
    when the solver gap estimate is below 1e-6."""
    g = group_by(rho, part)
    m = g.n
    if m < 2:
        raise MeasureError("non-MPPT needs >= 2 blocks")
    sides = _bipartition_sides(m)
    prog = sdp.WitnessProgram(g.dims, g.data, sides)
    rep = sdp.solve_witness(prog, cfg)
    gap = float(rep.point.get("gap_estimate", math.inf))
    value = max(0.0, rep.value)
    kind = "exact" if gap <= TOLS.solver_gap_exact and rep.status == "optimal" else "lower-bound"
    diags = {"solver_status": rep.status, "iterations": rep.iterations,
             "gap_estimate": gap, "residual": rep.primal_residual,
             "bipartitions": len(sides), "norm": "operator"}
    if rep.status != "optimal":
        diags["warning"] = "iteration budget exhausted; best feasible value returned"
    return MeasureResult(value, kind, diags)
