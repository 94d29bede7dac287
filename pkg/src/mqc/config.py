"""Central numerical tolerance configuration.

Every module reads its default tolerances from the single ``TOLS`` record so
that the whole library can be tightened or relaxed in one place (tests may
construct their own ``Tolerances`` and pass it explicitly where supported).
"""

from __future__ import annotations

import os
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    # matrix kernel
    hermitian_flag: float = 1e-12     # max|A - A^dag| for Hermitian-tagged input
    hermitian_input: float = 1e-8     # acceptance threshold before symmetrizing
    eig_residual: float = 1e-9        # ||A - V diag(w) V^dag|| for dim <= 64
    unitarity: float = 1e-9
    det_rel: float = 1e-9
    psd_clip: float = 0.0             # eigenvalue clip level for psd projection

    # density states
    state_hermitian: float = 1e-10
    state_trace: float = 1e-10
    state_min_eig: float = 1e-9       # tolerated negativity of eigenvalues
    kraus_complete: float = 1e-9
    entropy_eig_floor: float = 1e-12  # eigenvalues below this count as zero

    # Gaussian states
    cov_symmetric: float = 1e-10
    symplectic_eig: float = 1e-8      # tolerated dip below 1
    gaussian_cp: float = 1e-8         # CP condition slack for local channels

    # steering / assemblages
    povm_complete: float = 1e-9
    no_signalling: float = 1e-8

    # solver
    solver_residual: float = 1e-8
    solver_gap_exact: float = 1e-6    # gap below which a bound is reported exact
    infeasible_floor: float = 1e-4    # residual plateau above this => infeasible
    feasible_residual: float = 1e-7


TOLS = Tolerances()


def global_tolerance_override() -> float | None:
    """Optional global override from MQC_TOL_OVERRIDE (test-only escape hatch).

    When set, CLI commands use this value as the check tolerance instead of the
    per-suite defaults.
    """
    raw = os.environ.get("MQC_TOL_OVERRIDE")
    if raw is None:
        return None
    try:
        return float(raw)
    except ValueError as exc:
        raise ValueError(f"MQC_TOL_OVERRIDE is not a float: {raw!r}") from exc
