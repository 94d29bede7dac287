"""Executable axiom suites over registered measures.

A MeasureBinding packages everything a suite needs to exercise one measure:
an evaluator with the uniform (state, partition) signature, samplers for the
measure's free states and free channels, designated resource states, and the
hierarchy relation the measure respects.  The uniform evaluator signature is
itself the unification requirement: one definition serves every system size,
which is why reports note it structurally instead of "testing" it.

Suites emit CheckReports; violations always carry enough of the input
descriptor to be regenerated from the seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import gaussian as ga
from . import measures as ms
from . import partitions as pt
from .measures import MeasureResult
from .qstate import (DensityState, apply_channel, ginibre_mixed, make_rng,
                     permute_subsystems, pure_state, sample_channel,
                     separable_mixed)


class HarnessError(ValueError):
    pass


@dataclass
class CheckReport:
    suite: str
    trials: int
    violations: list = field(default_factory=list)
    worst_slack: float = 0.0
    caveats: list = field(default_factory=list)

    def record(self, descriptor: str, lhs: float, rhs: float, tol: float):
        slack = lhs - rhs - tol
        if slack > 0:
            self.violations.append({"input": descriptor, "lhs": lhs, "rhs": rhs,
                                    "slack": slack})
            self.worst_slack = max(self.worst_slack, slack)

    @property
    def passed(self) -> bool:
        return not self.violations

    def exit_code(self) -> int:
        if self.violations:
            return 2
        if self.caveats:
            return 3
        return 0

    def to_dict(self) -> dict:
        return {"suite": self.suite, "trials": self.trials,
                "violations": self.violations, "worst_slack": self.worst_slack,
                "caveats": self.caveats}


@dataclass
class MeasureBinding:
    """A measure under test, with its free structure."""

    id: str
    kind: str                      # 'density' | 'gaussian'
    evaluator: Callable            # (state, SubRepartition) -> MeasureResult
    free_sampler: Callable         # rng -> state
    state_sampler: Callable        # rng -> state
    channel_sampler: Callable      # (rng, state) -> (state, descriptor)
    resource_states: Callable      # () -> [(label, state, part)]
    default_part: pt.SubRepartition
    symmetric: bool = True
    relation: str = "standard"     # standard | k-E | k-PE | steering

    def value(self, state, part) -> MeasureResult:
        return self.evaluator(state, part)


# ---------------------------------------------------------------------------
# built-in bindings (3-party defaults; sizes chosen for desk-scale suites)


def _full_part(n: int) -> pt.SubRepartition:
    return pt.SubRepartition(n, [[i] for i in range(1, n + 1)])


def _diagonal_state(rng, dims=(2, 2, 2)) -> DensityState:
    d = int(np.prod(dims))
    p = rng.dirichlet(np.ones(d))
    return DensityState(dims, np.diag(p))


def _real_state(rng, dims=(2, 2, 2)) -> DensityState:
    d = int(np.prod(dims))
    a = rng.normal(size=(d, d))
    m = a @ a.T
    return DensityState(dims, m / np.trace(m))


def _phase_i_resource() -> DensityState:
    one = pure_state(np.array([1.0, 1.0j]) / np.sqrt(2), (2,))
    vec = np.kron(np.kron(one.data, np.diag([1.0, 0.0])), np.diag([1.0, 0.0]))
    return DensityState((2, 2, 2), vec / np.trace(vec))


def _gaussian_product(rng, n=3) -> ga.GaussianState:
    parts = [ga.g_random(rng, 1, 0.6) for _ in range(n)]
    return ga.g_product(*parts)


def _gaussian_random(rng, n=3) -> ga.GaussianState:
    return ga.g_random(rng, n, 0.6, (1,) * n)


def _channel_density(family):
    def apply(rng, state):
        ch = sample_channel(rng, family, state.dims)
        return apply_channel(state, ch), family
    return apply


def _channel_gaussian_local(rng, state):
    maps = ga.sample_local_gaussian(rng, state)
    return ga.g_apply_local(state, maps), "gaussian-local"


def _channel_gaussian_incoherent(rng, state):
    maps = ga.sample_incoherent_local(rng, state)
    return ga.g_apply_local(state, maps), "attenuation-rotation"


def _channel_gaussian_real(rng, state):
    maps = ga.sample_real_local(rng, state)
    return ga.g_apply_local(state, maps), "gaussian-real"


def _gaussian_real_free(rng, n=3) -> ga.GaussianState:
    m = n
    a = rng.normal(size=(m, m))
    spd = a @ a.T + np.eye(m)
    w, v = np.linalg.eigh(spd)
    spd = (v * (1.0 + w / w.max())) @ v.T  # eigenvalues in [1, 2]
    p = ga._interleaved_to_stacked(m)
    cov = p.T @ np.block([[spd, np.zeros((m, m))], [np.zeros((m, m)), spd]]) @ p
    mean = p.T @ np.concatenate([rng.normal(size=m), np.zeros(m)])
    return ga.GaussianState((1,) * n, cov, mean)


def _gaussian_permute(state: ga.GaussianState, perm) -> ga.GaussianState:
    return ga.g_permute_parties(state, perm)


def builtin_bindings() -> dict[str, MeasureBinding]:
    from .qstate import bell, ghz

    reg = {}
    reg["c_l1"] = MeasureBinding(
        id="c_l1", kind="density",
        evaluator=lambda s, p: ms.c_l1(s, p),
        free_sampler=_diagonal_state,
        state_sampler=lambda rng: ginibre_mixed(rng, (2, 2, 2)),
        channel_sampler=_channel_density("incoherent-local"),
        resource_states=lambda: [("ghz3", ghz(3, 2), _full_part(3))],
        default_part=_full_part(3))
    reg["imag_robustness"] = MeasureBinding(
        id="imag_robustness", kind="density",
        evaluator=lambda s, p: ms.imag_robustness(s, p),
        free_sampler=_real_state,
        state_sampler=lambda rng: ginibre_mixed(rng, (2, 2, 2)),
        channel_sampler=_channel_density("real-local"),
        resource_states=lambda: [("phase-i", _phase_i_resource(), _full_part(3))],
        default_part=_full_part(3))
    reg["non_mppt"] = MeasureBinding(
        id="non_mppt", kind="density",
        evaluator=lambda s, p: ms.non_mppt(s, p),
        free_sampler=lambda rng: separable_mixed(rng, (2, 2)),
        state_sampler=lambda rng: ginibre_mixed(rng, (2, 2), rank=2),
        channel_sampler=_channel_density("local-product"),
        resource_states=lambda: [("bell", bell(), _full_part(2)),
                                 ("ghz3", ghz(3, 2), _full_part(3))],
        default_part=_full_part(2))
    reg["m_nonproduct"] = MeasureBinding(
        id="m_nonproduct", kind="gaussian",
        evaluator=lambda s, p: MeasureResult(ga.nonproduct_value(s, p), "exact"),
        free_sampler=_gaussian_product,
        state_sampler=_gaussian_random,
        channel_sampler=_channel_gaussian_local,
        resource_states=lambda: [("tmsv", ga.g_product(ga.tmsv(1.0), ga.vacuum((1,))),
                                  _full_part(3))],
        default_part=_full_part(3))
    reg["g_coherence"] = MeasureBinding(
        id="g_coherence", kind="gaussian",
        evaluator=lambda s, p: MeasureResult(
            ga.coherence_value(_gaussian_reduce(s, p)), "exact"),
        free_sampler=lambda rng: ga.g_incoherent_random(rng, 3),
        state_sampler=_gaussian_random,
        channel_sampler=_channel_gaussian_incoherent,
        resource_states=lambda: [("squeezed", ga.g_product(
            ga.squeezed_vacuum(0.8), ga.vacuum((1,)), ga.vacuum((1,))), _full_part(3))],
        default_part=_full_part(3))
    reg["g_imaginarity"] = MeasureBinding(
        id="g_imaginarity", kind="gaussian",
        evaluator=lambda s, p: MeasureResult(
            ga.imaginarity_value(_gaussian_reduce(s, p)), "exact"),
        free_sampler=_gaussian_real_free,
        state_sampler=_gaussian_random,
        channel_sampler=_channel_gaussian_real,
        resource_states=lambda: [("p-displaced", ga.GaussianState(
            (1, 1, 1), np.eye(6), [0, 1.0, 0, 0, 0, 0]), _full_part(3))],
        default_part=_full_part(3))
    return reg


def _gaussian_reduce(state: ga.GaussianState, part: pt.SubRepartition) -> ga.GaussianState:
    """Group a Gaussian state by a party partition (blocks become parties)."""
    if part is None:
        return state
    keep = sorted(part.support)
    red = ga.g_partial_trace(state, keep)
    pos = {orig: i + 1 for i, orig in enumerate(keep)}
    slices = red.party_mode_slices()
    rows, modes = [], []
    for block in part.blocks:
        members = [pos[i] for i in block]
        rows.extend(r for m in members for r in slices[m - 1])
        modes.append(sum(red.modes_per_party[m - 1] for m in members))
    return ga.GaussianState(tuple(modes), red.cov[np.ix_(rows, rows)],
                            red.mean[rows], validate=False)


def gaussian_grouped(state: ga.GaussianState, part: pt.SubRepartition) -> ga.GaussianState:
    return _gaussian_reduce(state, part)


# ---------------------------------------------------------------------------
# suites


def _slack_allowance(*results: MeasureResult) -> float:
    """Extra slack granted when a bound is not exact (solver gap)."""
    extra = 0.0
    for r in results:
        if r.bound_kind != "exact":
            extra += float(r.diagnostics.get("gap_estimate", 0.0)) + 1e-9
    return extra


def axiom_check(binding: MeasureBinding, suite: str, trials: int = 50,
                seed: int = 0, tol: float = 1e-7, threads: int = 1) -> CheckReport:
    """MQCM1 (faithfulness), MQCM2 (free-operation monotonicity), or MQCM5
    (permutation symmetry) over seeded trials.

    Each trial draws from its own spawned generator, so reports are identical
    for any thread count; results merge in trial order.
    """
    report = CheckReport(suite=f"{binding.id}:{suite}", trials=trials)

    def trial_rng(i: int) -> np.random.Generator:
        return np.random.default_rng([seed, i])

    if suite == "MQCM1":
        def trial(i: int):
            free = binding.free_sampler(trial_rng(i))
            res = binding.value(free, _full_part_for(binding, free))
            return ((f"free[{i}]", res.value, 0.0) if res.value > tol else None), None
    elif suite == "MQCM2":
        def trial(i: int):
            rng = trial_rng(i)
            state = binding.state_sampler(rng)
            part = _full_part_for(binding, state)
            before = binding.value(state, part)
            after_state, desc = binding.channel_sampler(rng, state)
            after = binding.value(after_state, part)
            allow = _slack_allowance(before, after)
            if after.value > before.value + tol + allow:
                return (f"channel[{desc}][{i}]", after.value, before.value), None
            if after.value > before.value + tol:
                return None, (f"trial {i}: increase {after.value - before.value:.2e}"
                              " within solver slack")
            return None, None
    elif suite == "MQCM5":
        if not binding.symmetric:
            report.caveats.append("binding is asymmetric; symmetry suite skipped")
            report.trials = 0
            return report

        def trial(i: int):
            rng = trial_rng(i)
            state = binding.state_sampler(rng)
            n = state.n if binding.kind == "density" else state.n_parties
            perm = list(rng.permutation(n) + 1)
            part = _full_part_for(binding, state)
            v0 = binding.value(state, part)
            permuted = (permute_subsystems(state, perm) if binding.kind == "density"
                        else _gaussian_permute(state, perm))
            v1 = binding.value(permuted, part)
            gap = abs(v1.value - v0.value)
            allow = _slack_allowance(v0, v1)
            if gap > tol + allow:
                return (f"perm[{perm}][{i}]", gap, 0.0), None
            if gap > tol:
                return None, f"trial {i}: asymmetry {gap:.2e} within solver slack"
            return None, None
    else:
        raise HarnessError(f"unknown suite {suite!r} (MQCM1|MQCM2|MQCM5)")

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(trial, range(trials)))
    else:
        outcomes = [trial(i) for i in range(trials)]
    for viol, caveat in outcomes:
        if viol is not None:
            report.record(*viol, tol)
        if caveat is not None:
            report.caveats.append(caveat)
    if suite == "MQCM1":
        for label, state, part in binding.resource_states():
            res = binding.value(state, part)
            if res.value <= 10 * tol:
                report.violations.append({"input": f"resource[{label}]",
                                          "lhs": res.value, "rhs": 10 * tol,
                                          "slack": 10 * tol - res.value})
    return report


def _full_part_for(binding: MeasureBinding, state) -> pt.SubRepartition:
    n = state.n if binding.kind == "density" else state.n_parties
    return _full_part(n)


def hierarchy_scan(binding: MeasureBinding, state, tol: float = 1e-6) -> CheckReport:
    """MQCM4 over every related partition pair of the state's party set.

    Coarser-side values must not exceed finer-side values beyond tol;
    violations within solver slack of non-exact bounds are demoted to caveats.
    Evaluator errors on unsupported partitions (for example multi-mode blocks
    for single-mode-only measures) skip the pair with a caveat.
    """
    if binding.relation != "standard":
        raise HarnessError("hierarchy_scan covers the standard relation; "
                           "tagged relations are exercised by their own suites")
    n = state.n if binding.kind == "density" else state.n_parties
    if n > 6:
        raise HarnessError("hierarchy enumeration supported for n <= 6")
    parts = [p for p in pt.enumerate_subrepartitions(n) if p.block_count >= 2]
    values: dict[pt.SubRepartition, MeasureResult | None] = {}
    report = CheckReport(suite=f"{binding.id}:MQCM4", trials=0)
    for p in parts:
        try:
            values[p] = binding.value(state, p)
        except Exception as exc:  # unsupported grouping: skip-and-caveat
            values[p] = None
            report.caveats.append(f"skip {p}: {exc}")
    for q in parts:
        for p in parts:
            if q == p or values[q] is None or values[p] is None:
                continue
            if not pt.coarser(q, p):
                continue
            report.trials += 1
            vq, vp = values[q], values[p]
            allow = _slack_allowance(vq, vp)
            if vq.value > vp.value + tol + allow:
                report.record(f"{q} <= {p}", vq.value, vp.value, tol)
            elif vq.value > vp.value + tol:
                report.caveats.append(
                    f"{q} vs {p}: excess {vq.value - vp.value:.2e} within solver slack")
    return report


MONOGAMY_KINDS = ("global", "complete", "tight", "strong")


def _pairs_for_kind(n: int, kind: str):
    parts = [p for p in pt.enumerate_subrepartitions(n) if p.block_count >= 2]
    for p in parts:
        for q in parts:
            if q == p:
                continue
            if kind == "complete" and pt.coarser_basic(q, p, "a"):
                yield q, p
            elif kind == "tight" and pt.coarser_basic(q, p, "b"):
                yield q, p
            elif kind == "strong" and pt.coarser_basic(q, p, "c"):
                yield q, p
            elif kind == "global" and pt.coarser(q, p):
                yield q, p


def monogamy_check(binding: MeasureBinding, state, kind: str = "complete",
                   eps_eq: float = 1e-6, eps_0: float = 1e-6) -> CheckReport:
    """Monogamy scan: wherever a coarser part saturates the finer value, the
    implied complementary correlations must vanish.

    Pairs whose equality premise never triggers are counted vacuous rather
    than passing.  'global' uses the complementarity set and skips pairs it
    cannot compute under the pinned reading.
    """
    if kind not in MONOGAMY_KINDS:
        raise HarnessError(f"unknown monogamy kind {kind!r}")
    n = state.n if binding.kind == "density" else state.n_parties
    report = CheckReport(suite=f"{binding.id}:monogamy-{kind}", trials=0)
    vacuous = triggered = 0
    cache: dict[pt.SubRepartition, float] = {}

    def val(part: pt.SubRepartition) -> float:
        if part not in cache:
            cache[part] = binding.value(state, part).value
        return cache[part]

    for q, p in _pairs_for_kind(n, kind):
        report.trials += 1
        try:
            vp, vq = val(p), val(q)
        except Exception as exc:
            report.caveats.append(f"skip ({q},{p}): {exc}")
            continue
        if abs(vp - vq) > eps_eq:
            vacuous += 1
            continue
        triggered += 1
        for label, part in _implied_parts(q, p, kind):
            if part is None:
                report.caveats.append(label)
                continue
            try:
                v = val(part)
            except Exception as exc:
                report.caveats.append(f"skip implied {part}: {exc}")
                continue
            report.record(f"({q},{p}) -> {label}", v, 0.0, eps_0)
    report.caveats.append(f"triggered={triggered} vacuous={vacuous}")
    return report


def _implied_parts(q: pt.SubRepartition, p: pt.SubRepartition, kind: str):
    """The reductions whose measure must vanish when the premise triggers."""
    n = p.n
    out = []
    if kind == "complete":
        z = tuple(sorted(i for b in q.blocks for i in b))
        rest = [b for b in p.blocks if b not in set(q.blocks)]
        w = tuple(sorted(i for b in rest for i in b))
        if not w:
            return out
        out.append((f"split {','.join(map(str, z))}|{','.join(map(str, w))}",
                    pt.SubRepartition(n, [z, w])))
        if len(rest) >= 2:
            out.append((f"outside blocks {rest}", pt.SubRepartition(n, rest)))
        for wb in rest:
            for other in p.blocks:
                if other == wb:
                    continue
                out.append((f"pair {wb}|{other}", pt.SubRepartition(n, [wb, other])))
            if q.block_count >= 2:
                out.append((f"pair {wb}|merged-q", pt.SubRepartition(n, [wb, z])))
    elif kind == "tight":
        for qb in q.blocks:
            members = [b for b in p.blocks if set(b) <= set(qb)]
            if len(members) >= 2:
                out.append((f"inside {qb}", pt.SubRepartition(n, members)))
    elif kind == "strong":
        kept = set(i for b in q.blocks for i in b)
        support = sorted(i for b in p.blocks for i in b)
        for qb in q.blocks:
            if len(qb) >= 2:
                out.append((f"within {qb}", pt.SubRepartition(n, [[i] for i in qb])))
        for i in support:
            for j in support:
                if i < j and (i not in kept or j not in kept):
                    out.append((f"pair {i}|{j}", pt.SubRepartition(n, [[i], [j]])))
    elif kind == "global":
        try:
            for upsilon in sorted(pt.complementarity(p, q), key=str):
                out.append((f"complement {upsilon}", upsilon))
        except pt.ComplementarityUnsupported:
            out.append((f"complementarity not computable for ({q},{p})", None))
    return out
