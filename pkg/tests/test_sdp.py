import numpy as np
import pytest

from mqc import sdp, qstate as qs


def feasibility_audit(prog, rep):
    """The returned point must satisfy the cone constraints exactly and the
    couplings within the reported residual."""
    W = rep.point["W"]
    assert np.abs(np.linalg.eigvalsh(W)).max() <= prog.norm_cap + 1e-10
    for j, b in enumerate(prog.bipartitions):
        m, nmat = rep.point[f"M_{j}"], rep.point[f"N_{j}"]
        assert np.linalg.eigvalsh(m).min() >= -1e-12
        assert np.linalg.eigvalsh(nmat).min() >= -1e-12
        rec = m + sdp._partial_transpose(nmat, prog.dims, b)
        assert np.abs(rec - W).max() <= max(rep.primal_residual, 1e-10) * 1.01 + 1e-12


def test_witness_max_mixed_is_zero():
    prog = sdp.WitnessProgram((2, 2), qs.max_mixed((2, 2)).data, [(1,)])
    rep = sdp.solve_witness(prog)
    assert abs(rep.value) <= 1e-7
    feasibility_audit(prog, rep)


def test_witness_bell_value_one():
    prog = sdp.WitnessProgram((2, 2), qs.bell().data, [(1,)])
    rep = sdp.solve_witness(prog)
    assert abs(rep.value - 1.0) <= 1e-4
    feasibility_audit(prog, rep)
    # analytic witness: 2 * (singlet projector)^T1 is feasible and optimal
    psi = np.array([0, 1, -1, 0]) / np.sqrt(2)
    n_opt = 2 * np.outer(psi, psi.conj())
    w_opt = sdp._partial_transpose(n_opt, (2, 2), (1,))
    assert abs(np.real(np.trace(w_opt @ qs.bell().data)) + 1.0) < 1e-12
    assert np.abs(np.linalg.eigvalsh(w_opt)).max() <= 1.0 + 1e-12


def test_witness_isotropic_ppt_boundary():
    iso = (qs.bell().data + 2 * np.eye(4) / 4) / 3  # visibility 1/3
    pt_eigs = np.linalg.eigvalsh(sdp._partial_transpose(iso, (2, 2), (1,)))
    assert abs(pt_eigs.min()) < 1e-12  # boundary oracle: PT eigenvalue at 0
    rep = sdp.solve_witness(sdp.WitnessProgram((2, 2), iso, [(1,)]))
    assert rep.value <= 1e-4


def test_witness_monotone_under_constraint_removal():
    rng = qs.make_rng(12)
    sides = [(1,), (2,), (3,)]
    for k in range(6):
        rho = qs.ginibre_mixed(rng, (2, 2, 2), rank=2)
        full = sdp.solve_witness(sdp.WitnessProgram((2, 2, 2), rho.data, sides))
        fewer = sdp.solve_witness(sdp.WitnessProgram((2, 2, 2), rho.data, sides[:1]))
        assert fewer.value >= full.value - 1e-6


def test_witness_deterministic():
    rho = qs.ginibre_mixed(qs.make_rng(13), (2, 2), rank=2)
    prog = sdp.WitnessProgram((2, 2), rho.data, [(1,)])
    r1 = sdp.solve_witness(prog)
    r2 = sdp.solve_witness(prog)
    assert r1.value == r2.value and r1.iterations == r2.iterations


def test_witness_program_validation():
    with pytest.raises(sdp.SolverError):
        sdp.WitnessProgram((2, 2), np.eye(3), [(1,)])
    with pytest.raises(sdp.SolverError):
        sdp.WitnessProgram((2, 2), np.eye(4) / 4, [])
    with pytest.raises(sdp.SolverError):
        sdp.WitnessProgram((2, 2), np.eye(4) / 4, [(1, 2)])  # not proper


def test_feasibility_constructive():
    # sum of two PSD vars fixed, plus one pinned: feasible by construction
    rng = qs.make_rng(14)
    a = rng.normal(size=(2, 2)); x0 = a @ a.T
    b = rng.normal(size=(2, 2)); x1 = b @ b.T
    coeffs = np.array([[1.0, 1.0], [1.0, 0.0]])
    targets = np.stack([x0 + x1, x0]).astype(complex)
    rep = sdp.solve_feasibility(sdp.FeasibilityProgram(2, coeffs, targets))
    assert rep.status == "optimal"
    assert rep.primal_residual <= 1e-7
    for x in rep.point["X"]:
        assert np.linalg.eigvalsh(x).min() >= -1e-12


def test_feasibility_zero_targets():
    rep = sdp.solve_feasibility(sdp.FeasibilityProgram(
        2, np.array([[1.0, 1.0]]), np.zeros((1, 2, 2), dtype=complex)))
    assert rep.status == "optimal"


def test_feasibility_detects_infeasible():
    # X >= 0 with trace(X) = -1 encoded as X = -I is impossible
    coeffs = np.array([[1.0]])
    targets = -np.eye(2)[None, :, :].astype(complex)
    rep = sdp.solve_feasibility(sdp.FeasibilityProgram(2, coeffs, targets),
                                sdp.SolveConfig(max_iter=20000))
    assert rep.status == "infeasible-certificate"
