"""Multipartite steering: conditional-state assemblages, local-hidden-state
membership tests, steering-free channels, and certified upper bounds on the
trace distance to the unsteerable set.

Verdict semantics are deliberately one-sided: 'lhs-member' and
'steerable-evidence' are backed by a certificate (an explicit model, or a
residual plateau of an exact convex feasibility program); everything else is
'inconclusive'.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from scipy.optimize import nnls

from . import linalg, sdp
from .config import TOLS
from .measures import MeasureResult
from .partitions import SteeringSplit, SubRepartition
from .qstate import DensityState, KrausChannel, apply_channel, group_by, partial_trace

MAX_STRATEGIES = 10 ** 6


class SteeringError(ValueError):
    pass


@dataclass(frozen=True)
class MeasurementAssemblage:
    """Per untrusted unit: a POVM for every setting.

    povms[i][x][a] is the outcome-a element of setting x on unit i; every
    setting sums to the identity on that unit.
    """

    unit_dims: tuple[int, ...]
    povms: tuple  # [unit][setting][outcome] -> ndarray

    def __init__(self, unit_dims: Sequence[int], povms):
        unit_dims = tuple(int(d) for d in unit_dims)
        clean = []
        for i, per_unit in enumerate(povms):
            d = unit_dims[i]
            unit_list = []
            for setting in per_unit:
                mats = tuple(np.asarray(m, dtype=np.complex128) for m in setting)
                total = sum(mats)
                if np.abs(total - np.eye(d)).max() > TOLS.povm_complete:
                    raise SteeringError(f"unit {i} setting does not sum to identity")
                for m in mats:
                    if np.linalg.eigvalsh((m + m.conj().T) / 2).min() < -1e-9:
                        raise SteeringError("POVM element not PSD")
                unit_list.append(mats)
            clean.append(tuple(unit_list))
        object.__setattr__(self, "unit_dims", unit_dims)
        object.__setattr__(self, "povms", tuple(clean))

    @property
    def n_units(self) -> int:
        return len(self.unit_dims)

    @property
    def settings(self) -> tuple[int, ...]:
        return tuple(len(u) for u in self.povms)

    @property
    def outcomes(self) -> tuple[int, ...]:
        return tuple(len(u[0]) for u in self.povms)


def pauli_zx_measurements() -> MeasurementAssemblage:
    """Two-setting, two-outcome projective measurements: sigma_z and sigma_x."""
    z0 = np.diag([1.0, 0.0]).astype(np.complex128)
    z1 = np.diag([0.0, 1.0]).astype(np.complex128)
    plus = np.full((2, 2), 0.5, dtype=np.complex128)
    minus = np.array([[0.5, -0.5], [-0.5, 0.5]], dtype=np.complex128)
    return MeasurementAssemblage((2,), (((z0, z1), (plus, minus)),))


def random_projective_measurements(rng: np.random.Generator, unit_dims: Sequence[int],
                                   n_settings: int = 2) -> MeasurementAssemblage:
    """Haar-random rank-one projective measurement per setting per unit."""
    povms = []
    for d in unit_dims:
        per_unit = []
        for _ in range(n_settings):
            g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
            q, r = np.linalg.qr(g)
            q = q * (np.diagonal(r) / np.abs(np.diagonal(r)))
            per_unit.append(tuple(np.outer(q[:, a], q[:, a].conj()) for a in range(d)))
        povms.append(tuple(per_unit))
    return MeasurementAssemblage(unit_dims, povms)


@dataclass(frozen=True)
class StateAssemblage:
    """Sub-normalized conditional states on the trusted side, indexed by joint
    (outcomes, settings) of the untrusted units."""

    trusted_dims: tuple[int, ...]
    settings: tuple[int, ...]
    outcomes: tuple[int, ...]
    elements: dict = field(repr=False)  # (a_tuple, x_tuple) -> ndarray

    def __init__(self, trusted_dims, settings, outcomes, elements,
                 check: bool = True):
        trusted_dims = tuple(int(d) for d in trusted_dims)
        settings = tuple(int(s) for s in settings)
        outcomes = tuple(int(o) for o in outcomes)
        elems = {}
        for key, mat in elements.items():
            a, x = tuple(key[0]), tuple(key[1])
            elems[(a, x)] = np.asarray(mat, dtype=np.complex128)
        if check:
            totals = {}
            for x in itertools.product(*[range(s) for s in settings]):
                tot = sum(elems[(a, x)] for a in itertools.product(*[range(o) for o in outcomes]))
                totals[x] = tot
            ref = next(iter(totals.values()))
            for tot in totals.values():
                if np.abs(tot - ref).max() > TOLS.no_signalling:
                    raise SteeringError("assemblage violates no-signalling")
        object.__setattr__(self, "trusted_dims", trusted_dims)
        object.__setattr__(self, "settings", settings)
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "elements", elems)

    @property
    def trusted_dim(self) -> int:
        return int(np.prod(self.trusted_dims))

    def reduced_trusted(self) -> np.ndarray:
        x0 = tuple(0 for _ in self.settings)
        return sum(self.elements[(a, x0)]
                   for a in itertools.product(*[range(o) for o in self.outcomes]))


def make_assemblage(rho: DensityState, split: SteeringSplit,
                    ma: MeasurementAssemblage) -> StateAssemblage:
    """Conditional trusted states from measuring the untrusted units of rho."""
    part = SubRepartition(split.n, split.untrusted.blocks + split.trusted.blocks)
    g = group_by(rho, part)
    n_u = split.untrusted.block_count
    u_dims = g.dims[:n_u]
    t_dims = g.dims[n_u:]
    if tuple(ma.unit_dims) != tuple(u_dims):
        raise SteeringError(f"measurement dims {ma.unit_dims} vs untrusted {u_dims}")
    d_u, d_t = int(np.prod(u_dims)), int(np.prod(t_dims))
    rho4 = g.data.reshape(d_u, d_t, d_u, d_t)
    elements = {}
    for x in itertools.product(*[range(s) for s in ma.settings]):
        for a in itertools.product(*[range(o) for o in ma.outcomes]):
            op = linalg.kron_all([ma.povms[i][x[i]][a[i]] for i in range(n_u)])
            elements[(a, x)] = np.einsum("km,mikj->ij", op, rho4)
    return StateAssemblage(t_dims, ma.settings, ma.outcomes, elements)


# ---------------------------------------------------------------------------
# LHS membership


def _unit_strategies(n_settings: int, n_outcomes: int):
    return list(itertools.product(range(n_outcomes), repeat=n_settings))


def deterministic_strategies(settings: Sequence[int], outcomes: Sequence[int]):
    """Joint deterministic responses: one outcome per unit per setting."""
    per_unit = [_unit_strategies(s, o) for s, o in zip(settings, outcomes)]
    count = int(np.prod([len(u) for u in per_unit]))
    if count > MAX_STRATEGIES:
        raise SteeringError(f"strategy count {count} exceeds {MAX_STRATEGIES}")
    return list(itertools.product(*per_unit))


@dataclass
class LhsReport:
    verdict: str  # lhs-member | steerable-evidence | inconclusive
    residual: float
    model: list | None          # hidden states per strategy, or None
    solver: sdp.SolveReport | None = None


def _strategy_matrix(sa: StateAssemblage, strategies) -> np.ndarray:
    keys = list(sa.elements.keys())
    d = np.zeros((len(keys), len(strategies)))
    for ci, (a, x) in enumerate(keys):
        for li, lam in enumerate(strategies):
            d[ci, li] = 1.0 if all(lam[i][x[i]] == a[i] for i in range(len(a))) else 0.0
    return d


def lhs_check(sa: StateAssemblage, trusted_group_count: int | None = None,
              cfg: sdp.SolveConfig = sdp.SolveConfig(max_iter=200000)) -> LhsReport:
    """Decide LHS membership of a finite assemblage.

    One trusted group: exact convex feasibility over hidden states per
    deterministic strategy (solved by alternating projections); 'feasible'
    means lhs-member for this assemblage, a residual plateau means
    steerable-evidence.  Two or more trusted groups: the product constraint on
    hidden states is nonconvex, so an alternating least-squares search is run
    from several starts; only success is conclusive (lhs-member), failure
    reports 'inconclusive'.
    """
    tg = len(sa.trusted_dims) if trusted_group_count is None else int(trusted_group_count)
    strategies = deterministic_strategies(sa.settings, sa.outcomes)
    d_mat = _strategy_matrix(sa, strategies)
    keys = list(sa.elements.keys())
    targets = np.stack([sa.elements[k] for k in keys])
    prog = sdp.FeasibilityProgram(sa.trusted_dim, d_mat, targets)
    rep = sdp.solve_feasibility(prog, cfg)
    if tg <= 1:
        if rep.status == "optimal":
            return LhsReport("lhs-member", rep.primal_residual, rep.point["X"], rep)
        if rep.status == "infeasible-certificate":
            return LhsReport("steerable-evidence", rep.primal_residual, None, rep)
        return LhsReport("inconclusive", rep.primal_residual, None, rep)
    # product-constrained hidden states: nonconvex, so only success is
    # conclusive; the convex relaxation's solution seeds the search
    seed = rep.point["X"] if rep.status == "optimal" else None
    return _lhs_product_search(sa, d_mat, targets, tg, seed=seed)


def _split_seed(joint: np.ndarray, dims: Sequence[int]) -> list[np.ndarray]:
    """Factor a joint hidden state into per-group parts (exact when product)."""
    tg = len(dims)
    tr = max(float(np.real(np.trace(joint))), 1e-30)
    t = joint.reshape(tuple(dims) + tuple(dims))
    parts = []
    for g in range(tg):
        red = t
        removed = 0
        for ax in range(tg):
            if ax == g:
                continue
            a = ax - removed
            red = np.trace(red, axis1=a, axis2=a + red.ndim // 2)
            removed += 1
        parts.append(red / (tr if g > 0 else 1.0))
    return parts


def _lhs_product_search(sa: StateAssemblage, d_mat: np.ndarray,
                        targets: np.ndarray, tg: int,
                        starts: int = 4, rounds: int = 1200,
                        n_products: int | None = None,
                        seed: list | None = None) -> LhsReport:
    """Alternating optimization for product-constrained hidden-state models.

    Any finite stochastic-response model converts to deterministic strategies
    whose hidden states are shared product terms with strategy-dependent
    weights, so the parameterization here is: a pool of per-group product
    factors plus a non-negative weight per (strategy, pool term).  Group
    factors and weights are updated alternately by least squares (weights
    clipped at zero).  Only success is conclusive.
    """
    dims = sa.trusted_dims
    if len(dims) != tg:
        raise SteeringError("trusted_group_count must match trusted factor count")
    n_lam = d_mat.shape[1]
    n_c = targets.shape[0]
    pool = int(n_products) if n_products else max(4, sa.trusted_dim)
    rng = np.random.default_rng(97)

    def random_pool():
        out = []
        for g in range(tg):
            f = []
            for _ in range(pool):
                a = rng.normal(size=(dims[g], dims[g])) + 1j * rng.normal(
                    size=(dims[g], dims[g]))
                m = a @ a.conj().T
                f.append(m / np.real(np.trace(m)))
            out.append(f)
        return out

    def seeded_pool():
        # pool from the dominant eigen-pieces of the relaxation hidden states
        pieces = []
        for lam in range(n_lam):
            joint = np.asarray(seed[lam])
            w, v = np.linalg.eigh((joint + joint.conj().T) / 2)
            for i in np.argsort(w)[::-1][:2]:
                if w[i] > 1e-12:
                    pieces.append((float(w[i]), np.outer(v[:, i], v[:, i].conj())))
        pieces.sort(key=lambda t: -t[0])
        out = [[] for _ in range(tg)]
        for _, piece in pieces[:pool]:
            parts = _split_seed(piece, dims)
            tr = max(float(np.real(np.trace(parts[0]))), 1e-30)
            parts[0] = parts[0] / tr
            for g in range(tg):
                out[g].append(parts[g])
        while len(out[0]) < pool:
            rnd = random_pool()
            for g in range(tg):
                out[g].append(rnd[g][0])
        return out

    def products_of(factors):
        prods = []
        for nu in range(pool):
            acc = np.array([[1.0 + 0j]])
            for g in range(tg):
                acc = np.kron(acc, factors[g][nu])
            prods.append(acc)
        return np.stack(prods)

    best_res, best_model = math.inf, None
    for attempt in range(starts):
        factors = seeded_pool() if (attempt == 0 and seed is not None) else random_pool()
        weights = np.full((n_lam, pool), 1.0 / (n_lam * pool))
        res = math.inf
        trail: list[float] = []
        for _ in range(rounds):
            prods = products_of(factors)
            # ----- weight update: least squares in w >= 0, then clip
            # predicted[c] = sum_nu (D w)[c, nu] vec(P_nu)
            basis = prods.reshape(pool, -1)                     # (pool, d^2)
            a_mat = np.einsum("cl,nk->ckln", d_mat, basis).reshape(
                n_c * basis.shape[1], n_lam * pool)
            b_vec = targets.reshape(-1)
            a_real = np.concatenate([a_mat.real, a_mat.imag])
            b_real = np.concatenate([b_vec.real, b_vec.imag])
            sol, _ = nnls(a_real, b_real)
            weights = sol.reshape(n_lam, pool)
            coeff = d_mat @ weights                              # (n_c, pool)
            # ----- factor update per group: normal equations + PSD projection
            for g in range(tg):
                other = []
                for nu in range(pool):
                    acc = np.array([[1.0 + 0j]])
                    for g2 in range(tg):
                        if g2 != g:
                            acc = np.kron(acc, factors[g2][nu])
                    other.append(acc)
                d_free, d_oth = dims[g], other[0].shape[0]
                perm = [g] + [a for a in range(tg) if a != g]
                full = targets.reshape((n_c,) + tuple(dims) + tuple(dims))
                full = full.transpose([0] + [1 + a for a in perm]
                                      + [1 + tg + a for a in perm])
                tview = full.reshape(n_c, d_free, d_oth, d_free, d_oth)
                gram = np.zeros((pool, pool), dtype=np.complex128)
                for n1 in range(pool):
                    for n2 in range(pool):
                        gram[n1, n2] = (coeff[:, n1] @ coeff[:, n2]) * np.trace(
                            other[n1].conj().T @ other[n2])
                rhs = np.zeros((pool, d_free, d_free), dtype=np.complex128)
                for nu in range(pool):
                    for c in np.nonzero(coeff[:, nu])[0]:
                        rhs[nu] += coeff[c, nu] * np.einsum(
                            "ikjl,kl->ij", tview[c], other[nu].conj())
                sol = np.linalg.lstsq(gram + 1e-12 * np.eye(pool),
                                      rhs.reshape(pool, -1), rcond=None)[0]
                for nu in range(pool):
                    x = sol[nu].reshape(d_free, d_free)
                    w, v = np.linalg.eigh((x + x.conj().T) / 2)
                    cand = (v * np.maximum(w, 0.0)) @ v.conj().T
                    tr = float(np.real(np.trace(cand)))
                    # keep factors trace-one; all scale lives in the weights
                    factors[g][nu] = cand / tr if tr > 1e-14 else np.eye(d_free) / d_free
            pred = np.einsum("cn,nij->cij", d_mat @ weights, products_of(factors))
            res = float(np.sqrt((np.abs(pred - targets) ** 2).sum()))
            if res <= TOLS.feasible_residual:
                break
            trail.append(res)
            if len(trail) > 60 and trail[-60] - res < 1e-4 * res:
                break  # stalled; try another start
        if res < best_res:
            prods = products_of(factors)
            best_res = res
            best_model = [np.einsum("n,nij->ij", weights[lam], prods)
                          for lam in range(n_lam)]
        if best_res <= TOLS.feasible_residual:
            break
    scale = max(1.0, float(np.abs(targets).max()))
    if best_res <= 10 * TOLS.feasible_residual * scale:
        return LhsReport("lhs-member", best_res, best_model)
    return LhsReport("inconclusive", best_res, None)


# ---------------------------------------------------------------------------
# free operations


def steer_free_apply(rho: DensityState, split: SteeringSplit,
                     ch: KrausChannel) -> DensityState:
    """Apply a trusted-side channel; untrusted factors must be untouched."""
    if ch.tag != "steering-free":
        raise SteeringError(f"channel tag {ch.tag!r} is not steering-free")
    untrusted_parties = set(range(1, split.t + 1))
    if set(ch.site_ops) & untrusted_parties:
        raise SteeringError("steering-free channel acts on an untrusted subsystem")
    return apply_channel(rho, ch)


# ---------------------------------------------------------------------------
# explicit models (used for constructive hierarchy transports)


@dataclass(frozen=True)
class ExplicitLhsModel:
    """Fully product hidden-state ensemble: per hidden value, one state per
    party.  Such a model is unsteerable for every split of the parties, which
    makes it the right test vehicle for hierarchy transports."""

    dims: tuple[int, ...]
    weights: tuple[float, ...]
    party_states: tuple  # [lambda][party] -> ndarray

    def to_state(self) -> DensityState:
        mat = np.zeros((int(np.prod(self.dims)),) * 2, dtype=np.complex128)
        for w, states in zip(self.weights, self.party_states):
            mat += w * linalg.kron_all(states)
        return DensityState(self.dims, mat)

    def predicted_assemblage(self, split: SteeringSplit,
                             ma: MeasurementAssemblage) -> StateAssemblage:
        """Assemblage the model implies for the given split and measurements."""
        u_blocks = split.untrusted.blocks
        t_blocks = split.trusted.blocks
        t_dims = tuple(int(np.prod([self.dims[i - 1] for i in b])) for b in t_blocks)
        elements = {}
        for x in itertools.product(*[range(s) for s in ma.settings]):
            for a in itertools.product(*[range(o) for o in ma.outcomes]):
                acc = np.zeros((int(np.prod(t_dims)),) * 2, dtype=np.complex128)
                for w, states in zip(self.weights, self.party_states):
                    prob = 1.0
                    for i, block in enumerate(u_blocks):
                        unit_state = linalg.kron_all([states[p - 1] for p in block])
                        prob *= float(np.real(np.trace(ma.povms[i][x[i]][a[i]] @ unit_state)))
                    trusted = linalg.kron_all([states[p - 1] for b in t_blocks for p in b])
                    acc += w * prob * trusted
                elements[(a, x)] = acc
        return StateAssemblage(t_dims, ma.settings, ma.outcomes, elements)


def random_lhs_model(rng: np.random.Generator, dims: Sequence[int],
                     n_hidden: int = 4) -> ExplicitLhsModel:
    dims = tuple(int(d) for d in dims)
    weights = rng.dirichlet(np.ones(n_hidden))
    party_states = []
    for _ in range(n_hidden):
        per_party = []
        for d in dims:
            a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
            m = a @ a.conj().T
            per_party.append(m / np.real(np.trace(m)))
        party_states.append(tuple(per_party))
    return ExplicitLhsModel(dims, tuple(float(w) for w in weights), tuple(party_states))


# ---------------------------------------------------------------------------
# certified upper bound on the distance to the unsteerable set


def _gb_ball_radius(total_dim: int, n_groups: int) -> float:
    # Frobenius ball of full separability around I/D: radius 1/sqrt(D(D-1))
    # for two groups, shrunk by 2^(1 - m/2) for m groups (conservative).
    base = 1.0 / math.sqrt(total_dim * (total_dim - 1))
    return base * (2.0 ** (1.0 - n_groups / 2.0))


def unsteerable_distance_ub(rho: DensityState, split: SteeringSplit,
                            bisect_steps: int = 48) -> MeasureResult:
    """Upper bound on the trace distance to the unsteerable set.

    Mixes toward the maximally mixed state and bisects for the smallest mixing
    weight at which the mixture is certified unsteerable, via either the PPT
    criterion (two parties of total dimension 4 or 6: PPT = separable there,
    and full separability implies unsteerability) or the Frobenius
    separability ball around the maximally mixed state.  Always an upper
    bound; the certificate used is reported in the diagnostics.
    """
    part = SubRepartition(split.n, split.untrusted.blocks + split.trusted.blocks)
    g = group_by(rho, part)
    dim = g.dim
    n_groups = g.n
    eye = np.eye(dim) / dim
    ppt_ok = (n_groups == 2 and dim in (4, 6))

    def certificate(mat: np.ndarray) -> str | None:
        if ppt_ok:
            d1 = g.dims[0]
            t = mat.reshape(d1, dim // d1, d1, dim // d1)
            pt = t.transpose(2, 1, 0, 3).reshape(dim, dim)
            if np.linalg.eigvalsh((pt + pt.conj().T) / 2).min() >= -1e-12:
                return "ppt"
        if np.linalg.norm(mat - eye) <= _gb_ball_radius(dim, n_groups):
            return "separability-ball"
        return None

    def sigma(s: float) -> np.ndarray:
        return (1.0 - s) * g.data + s * eye

    if certificate(sigma(0.0)):
        return MeasureResult(0.0, "upper-bound", {"s_star": 0.0, "certificate":
                                                  certificate(sigma(0.0))})
    lo, hi = 0.0, 1.0  # certificate(sigma(1)) always holds (ball radius > 0)
    cert = certificate(sigma(1.0))
    for _ in range(bisect_steps):
        mid = (lo + hi) / 2
        c = certificate(sigma(mid))
        if c:
            hi, cert = mid, c
        else:
            lo = mid
    value = 0.5 * linalg.trace_norm(g.data - sigma(hi))
    return MeasureResult(value, "upper-bound", {"s_star": hi, "certificate": cert})
