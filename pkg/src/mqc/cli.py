"""Batch command-line front door.

Every command prints exactly one JSON document on stdout; errors go to stderr
as JSON with a distinct exit code.  Exit codes: 0 success / no violations,
2 check violations, 3 caveats only, 4 usage or unknown identifier, 5 file
errors, 6 partition-grammar errors.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import gaussian as ga
from . import harness as hn
from . import measures as ms
from . import partitions as pt
from . import serialize as io
from . import steering as st
from .config import global_tolerance_override
from .qstate import DensityState, StateError, ghz, ginibre_mixed, make_rng, w_state

EXIT_OK, EXIT_VIOLATIONS, EXIT_CAVEATS, EXIT_USAGE, EXIT_FILE, EXIT_GRAMMAR = 0, 2, 3, 4, 5, 6


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _emit(doc: dict) -> None:
    json.dump(doc, sys.stdout)
    sys.stdout.write("\n")


def _fail(message: str, code: int) -> int:
    json.dump({"error": message, "code": code}, sys.stderr)
    sys.stderr.write("\n")
    return code


def _load_state(path: str):
    try:
        return io.load_state(path)
    except io.FormatError as exc:
        raise CliError(str(exc), EXIT_FILE) from exc
    except (StateError, ga.GaussianError) as exc:
        raise CliError(f"{path}: {exc}", EXIT_FILE) from exc


def _parse_partition(text: str, n: int) -> pt.SubRepartition:
    try:
        return pt.parse(text, n)
    except pt.PartitionError as exc:
        raise CliError(f"partition {text!r}: {exc}", EXIT_GRAMMAR) from exc


def _state_parties(state) -> int:
    return state.n if isinstance(state, DensityState) else state.n_parties


# ---------------------------------------------------------------------------
# measure dispatch


def _measure_value(measure: str, state, part, args) -> ms.MeasureResult:
    density = isinstance(state, DensityState)
    if measure in ("c_l1", "imag_robustness", "non_mppt", "pure_ef", "pure_c",
                   "pure_tq", "kpe_min_sum", "convex_roof_ef", "witness_k_entanglement",
                   "witness_k_partite") and not density:
        raise CliError(f"measure {measure} needs a density state", EXIT_USAGE)
    if measure in ("m_nonproduct", "g_imaginarity", "g_coherence") and density:
        raise CliError(f"measure {measure} needs a gaussian state", EXIT_USAGE)
    if measure == "c_l1":
        return ms.c_l1(state, part)
    if measure == "imag_robustness":
        return ms.imag_robustness(state, part)
    if measure == "non_mppt":
        return ms.non_mppt(state, part)
    if measure == "pure_ef":
        return ms.pure_entanglement(state, part, "Ef")
    if measure == "pure_c":
        return ms.pure_entanglement(state, part, "C")
    if measure == "pure_tq":
        _need(args.q is not None, "--q required for pure_tq")
        return ms.pure_entanglement(state, part, "Tq", q=args.q)
    if measure == "kpe_min_sum":
        _need(args.k is not None, "--k required for kpe_min_sum")
        return ms.kpe_min_sum(state, part, args.k)
    if measure == "convex_roof_ef":
        return ms.convex_roof(state, part, "Ef", ms.RoofConfig(seed=args.seed or 7))
    if measure == "witness_k_entanglement":
        _need(args.k is not None, "--k required for witness measures")
        return ms.witness_entanglement(state, args.k, "k-entanglement")
    if measure == "witness_k_partite":
        _need(args.k is not None, "--k required for witness measures")
        return ms.witness_entanglement(state, args.k, "k-partite")
    if measure == "m_nonproduct":
        return ms.MeasureResult(ga.nonproduct_value(state, part), "exact")
    if measure == "g_imaginarity":
        return ms.MeasureResult(ga.imaginarity_value(hn.gaussian_grouped(state, part)), "exact")
    if measure == "g_coherence":
        return ms.MeasureResult(ga.coherence_value(hn.gaussian_grouped(state, part)), "exact")
    raise CliError(f"unknown measure id {measure!r}", EXIT_USAGE)


def _need(cond: bool, message: str) -> None:
    if not cond:
        raise CliError(message, EXIT_USAGE)


def cmd_measure(args) -> int:
    state = _load_state(args.state)
    part = _parse_partition(args.partition, _state_parties(state))
    res = _measure_value(args.measure, state, part, args)
    _emit(res.to_dict())
    return EXIT_OK


def cmd_hierarchy_scan(args) -> int:
    state = _load_state(args.state)
    binding = _binding(args.measure)
    tol = global_tolerance_override() or args.tol
    report = hn.hierarchy_scan(binding, state, tol=tol)
    _emit(report.to_dict())
    return report.exit_code()


def cmd_axiom_check(args) -> int:
    binding = _binding(args.measure)
    tol = global_tolerance_override() or args.tol
    report = hn.axiom_check(binding, args.suite, trials=args.trials, seed=args.seed,
                            tol=tol, threads=args.threads)
    _emit(report.to_dict())
    return report.exit_code()


def cmd_monogamy_check(args) -> int:
    state = _load_state(args.state)
    binding = _binding(args.measure)
    report = hn.monogamy_check(binding, state, kind=args.kind,
                               eps_eq=args.eps_eq, eps_0=args.eps_0)
    _emit(report.to_dict())
    return report.exit_code()


def _binding(measure: str) -> hn.MeasureBinding:
    reg = hn.builtin_bindings()
    if measure not in reg:
        raise CliError(f"unknown measure id {measure!r}; harness bindings: "
                       + ", ".join(sorted(reg)), EXIT_USAGE)
    return reg[measure]


def cmd_steer_check(args) -> int:
    state = _load_state(args.state)
    if not isinstance(state, DensityState):
        raise CliError("steer-check needs a density state", EXIT_USAGE)
    n = state.n
    try:
        untrusted_txt, trusted_txt = args.split.split(";")
    except ValueError as exc:
        raise CliError("--split must look like '<untrusted>;<trusted>'", EXIT_GRAMMAR) from exc
    untrusted = _parse_partition(untrusted_txt, n)
    trusted = _parse_partition(trusted_txt, n)
    t = max(untrusted.support)
    try:
        split = pt.SteeringSplit(t, n, untrusted, trusted)
    except pt.PartitionError as exc:
        raise CliError(str(exc), EXIT_GRAMMAR) from exc
    try:
        mezz = io.load_measurements(args.measurements)
    except io.FormatError as exc:
        raise CliError(str(exc), EXIT_FILE) from exc
    sa = st.make_assemblage(state, split, mezz)
    rep = st.lhs_check(sa, trusted.block_count)
    _emit({"verdict": rep.verdict, "residual": rep.residual,
           "trusted_groups": trusted.block_count})
    return EXIT_OK


def cmd_gen(args) -> int:
    _need(args.out is not None, "--out is required")
    if args.what == "ghz":
        _need(args.n is not None, "--n required for ghz")
        io.save_density(ghz(args.n, args.d or 2), args.out)
    elif args.what == "w":
        _need(args.n is not None, "--n required for w")
        io.save_density(w_state(args.n), args.out)
    elif args.what == "random":
        _need(args.dims is not None, "--dims required for random")
        _need(args.seed is not None, "--seed required for random")
        dims = tuple(int(d) for d in args.dims.split(","))
        io.save_density(ginibre_mixed(make_rng(args.seed), dims), args.out)
    elif args.what == "gaussian-random":
        _need(args.parties is not None, "--parties required for gaussian-random")
        _need(args.seed is not None, "--seed required for gaussian-random")
        n = args.parties
        io.save_gaussian(ga.g_random(make_rng(args.seed), n, args.mixedness,
                                     (1,) * n), args.out)
    else:
        raise CliError(f"unknown generator {args.what!r}", EXIT_USAGE)
    _emit({"written": args.out})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mqc",
                                 description="multipartite quantum correlation toolbox")
    sub = ap.add_subparsers(dest="command", required=True)

    m = sub.add_parser("measure", help="evaluate a measure on a state file")
    m.add_argument("--measure", required=True)
    m.add_argument("--state", required=True)
    m.add_argument("--partition", required=True)
    m.add_argument("--k", type=int)
    m.add_argument("--q", type=float)
    m.add_argument("--seed", type=int)
    m.set_defaults(fn=cmd_measure)

    h = sub.add_parser("hierarchy-scan", help="MQCM4 scan over partition pairs")
    h.add_argument("--measure", required=True)
    h.add_argument("--state", required=True)
    h.add_argument("--tol", type=float, default=1e-6)
    h.set_defaults(fn=cmd_hierarchy_scan)

    a = sub.add_parser("axiom-check", help="MQCM1/2/5 randomized suite")
    a.add_argument("--measure", required=True)
    a.add_argument("--suite", required=True, choices=["MQCM1", "MQCM2", "MQCM5"])
    a.add_argument("--trials", type=int, required=True)
    a.add_argument("--seed", type=int, required=True)
    a.add_argument("--tol", type=float, default=1e-7)
    a.add_argument("--threads", type=int, default=1)
    a.set_defaults(fn=cmd_axiom_check)

    mono = sub.add_parser("monogamy-check", help="monogamy scan on one state")
    mono.add_argument("--measure", required=True)
    mono.add_argument("--state", required=True)
    mono.add_argument("--kind", required=True, choices=list(hn.MONOGAMY_KINDS))
    mono.add_argument("--eps-eq", type=float, default=1e-6)
    mono.add_argument("--eps-0", type=float, default=1e-6)
    mono.set_defaults(fn=cmd_monogamy_check)

    s = sub.add_parser("steer-check", help="LHS membership of a state+measurements")
    s.add_argument("--state", required=True)
    s.add_argument("--split", required=True)
    s.add_argument("--measurements", required=True)
    s.set_defaults(fn=cmd_steer_check)

    g = sub.add_parser("gen", help="write state files")
    g.add_argument("--what", required=True)
    g.add_argument("--n", type=int)
    g.add_argument("--d", type=int)
    g.add_argument("--dims")
    g.add_argument("--parties", type=int)
    g.add_argument("--mixedness", type=float, default=0.5)
    g.add_argument("--seed", type=int)
    g.add_argument("--out")
    g.set_defaults(fn=cmd_gen)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except CliError as exc:
        return _fail(str(exc), exc.code)
    except (ms.MeasureError, hn.HarnessError, st.SteeringError, pt.PartitionError) as exc:
        return _fail(str(exc), EXIT_USAGE)
    except StateError as exc:
        return _fail(str(exc), EXIT_FILE)


if __name__ == "__main__":
    sys.exit(main())
