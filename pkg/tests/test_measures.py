import math

import numpy as np
import pytest

from mqc import measures as ms, qstate as qs
from mqc.partitions import TaggedPartition, parse, set_partitions


P3 = parse("1|2|3", 3)


def test_c_l1_examples():
    diag = qs.DensityState((2, 2), np.diag([0.4, 0.3, 0.2, 0.1]))
    assert ms.c_l1(diag).value < 1e-12
    assert abs(ms.c_l1(qs.ghz(3, 2)).value - 1.0) < 1e-12
    for n in (2, 3, 4):
        plus = qs.pure_state(np.ones(2 ** n) / math.sqrt(2 ** n), (2,) * n)
        assert abs(ms.c_l1(plus).value - (2 ** n - 1)) < 1e-10


def test_imag_robustness_examples():
    assert ms.imag_robustness(qs.bell()).value < 1e-12
    phase = qs.pure_state([1.0, 1.0j], (2,))
    assert abs(ms.imag_robustness(phase).value - 1.0) < 1e-12
    rng = qs.make_rng(0)
    a = rng.normal(size=(4, 4))
    real_state = qs.DensityState((2, 2), a @ a.T / np.trace(a @ a.T))
    assert ms.imag_robustness(real_state).value < 1e-12


def test_pure_entanglement_values():
    rng = qs.make_rng(1)
    prod = qs.k_separable_pure(rng, (2, 2, 2), 3)
    for kind in ("Ef", "C"):
        assert ms.pure_entanglement(prod, P3, kind).value < 1e-6
    assert abs(ms.pure_entanglement(qs.ghz(3, 2), P3, "Ef").value - 1.5) < 1e-12
    assert abs(ms.pure_entanglement(qs.ghz(3, 2), P3, "C").value - math.sqrt(1.5)) < 1e-12
    assert abs(ms.pure_entanglement(qs.ghz(3, 2), P3, "Tq", q=2).value - 0.75) < 1e-12


def test_pure_entanglement_rejects_mixed_and_single_block():
    with pytest.raises(ms.MeasureError):
        ms.pure_entanglement(qs.max_mixed((2, 2)), parse("1|2", 2))
    with pytest.raises(ms.MeasureError):
        ms.pure_entanglement(qs.bell(), parse("1,2", 2))


def test_convex_roof_pure_state_agrees():
    exact = ms.pure_entanglement(qs.ghz(3, 2), P3, "Ef").value
    roof = ms.convex_roof(qs.ghz(3, 2), P3, "Ef")
    assert roof.bound_kind == "upper-bound"
    assert abs(roof.value - exact) <= 1e-8


def test_convex_roof_maximally_mixed_two_qubits():
    cfg = ms.RoofConfig(restarts=4, iteration_budget=60)
    roof = ms.convex_roof(qs.max_mixed((2, 2)), parse("1|2", 2), "Ef", cfg)
    assert roof.value <= 0.05
    # witness decomposition oracle: the four computational basis states are a
    # product-state decomposition achieving exactly zero
    assert roof.value >= 0.0


def test_convex_roof_convexity_spot_check():
    rng = qs.make_rng(2)
    cfg = ms.RoofConfig(restarts=5, iteration_budget=80, seed=3)
    part = parse("1|2", 2)
    for trial in range(2):
        psi1 = qs.haar_pure(rng, (2, 2))
        psi2 = qs.haar_pure(rng, (2, 2))
        mix = qs.DensityState((2, 2), 0.5 * psi1.data + 0.5 * psi2.data)
        v_mix = ms.convex_roof(mix, part, "Ef", cfg).value
        v1 = ms.pure_entanglement(psi1, part, "Ef").value
        v2 = ms.pure_entanglement(psi2, part, "Ef").value
        assert v_mix <= 0.5 * (v1 + v2) + 1e-6


def test_kpe_min_sum_ghz():
    assert abs(ms.kpe_min_sum(qs.ghz(3, 2), P3, 2).value - 1.5) < 1e-12
    assert abs(ms.kpe_min_sum(qs.ghz(3, 2), P3, 3).value - 1.0) < 1e-12


def kpe_oracle(psi, k):
    """Independent enumeration over depth-bounded partitions of {1,2,3}."""
    vec = ms._dominant_vector(psi)
    t = vec.reshape(2, 2, 2)

    def ent(sub):
        m = np.moveaxis(t, sub, range(len(sub))).reshape(2 ** len(sub), -1)
        p = np.linalg.svd(m, compute_uv=False) ** 2
        p = p[p > 1e-12]
        return float(-(p * np.log2(p)).sum())

    best = math.inf
    for part in set_partitions([0, 1, 2]):
        if max(len(b) for b in part) <= k - 1:
            best = min(best, sum(ent(tuple(sorted(b))) for b in part))
    return best / 2


def test_kpe_min_sum_matches_oracle_and_monotone_in_k():
    rng = qs.make_rng(3)
    for _ in range(5):
        psi = qs.haar_pure(rng, (2, 2, 2))
        v2 = ms.kpe_min_sum(psi, P3, 2).value
        v3 = ms.kpe_min_sum(psi, P3, 3).value
        assert abs(v2 - kpe_oracle(psi, 2)) < 1e-10
        assert abs(v3 - kpe_oracle(psi, 3)) < 1e-10
        assert v3 <= v2 + 1e-12


def test_kpe_tsallis_flagged():
    res = ms.kpe_min_sum(qs.ghz(3, 2), P3, 2, h="tsallis", q=2)
    assert "warning" in res.diagnostics


def test_sep_overlap_identity():
    val, kind = ms.sep_overlap(np.eye(8), (2, 2, 2), "k-separable", 2)
    assert kind == "lower-bound"
    assert abs(val - 1.0) < 1e-9


def test_sep_overlap_ghz():
    g = qs.ghz(3, 2).data
    v2, _ = ms.sep_overlap(g, (2, 2, 2), "k-separable", 2)
    assert abs(v2 - 0.5) < 1e-8
    v3, _ = ms.sep_overlap(g, (2, 2, 2), "k-separable", 3)
    assert abs(v3 - 0.5) < 1e-8  # best product overlap of this state is 1/2


def test_sep_overlap_certified_brackets_alternating():
    g = qs.ghz(3, 2).data
    low, up = ms.sep_overlap_certified(g, (2, 2, 2), "k-separable", 2, grid=150)
    est, _ = ms.sep_overlap(g, (2, 2, 2), "k-separable", 2)
    assert low <= est + 1e-9 <= up + 2e-9
    assert abs(low - 0.5) < 2e-2 and abs(up - 0.5) < 2e-2


def test_sep_overlap_rejects_bad_operator():
    with pytest.raises(ms.MeasureError):
        ms.sep_overlap(2.0 * np.eye(4), (2, 2), "k-separable", 2)   # norm > 1
    with pytest.raises(ms.MeasureError):
        ms.sep_overlap(-np.eye(4), (2, 2), "k-separable", 2)        # not PSD


def test_witness_entanglement_ghz_and_separable():
    res = ms.witness_entanglement(qs.ghz(3, 2), 2, "k-entanglement")
    assert res.bound_kind == "lower-bound"
    assert res.value >= 0.45
    assert res.diagnostics["overlap_certified"]
    sep = qs.separable_mixed(qs.make_rng(4), (2, 2, 2))
    assert ms.witness_entanglement(sep, 3, "k-entanglement").value <= 2e-2


def test_non_mppt_values():
    assert abs(ms.non_mppt(qs.bell(), parse("1|2", 2)).value - 1.0) <= 1e-4
    sep = qs.separable_mixed(qs.make_rng(5), (2, 2))
    assert ms.non_mppt(sep, parse("1|2", 2)).value <= 1e-6
    res = ms.non_mppt(qs.ghz(3, 2), P3)
    assert res.value > 0.1
    assert res.diagnostics["bipartitions"] == 3


def test_non_mppt_transpose_side_invariance():
    # the program value cannot depend on which side of a bipartition carries
    # the transpose
    rho = qs.ginibre_mixed(qs.make_rng(6), (2, 2), rank=2)
    from mqc import sdp
    a = sdp.solve_witness(sdp.WitnessProgram((2, 2), rho.data, [(1,)])).value
    b = sdp.solve_witness(sdp.WitnessProgram((2, 2), rho.data, [(2,)])).value
    assert abs(a - b) <= 1e-6


def test_measures_permutation_symmetry():
    rng = qs.make_rng(7)
    rho = qs.ginibre_mixed(rng, (2, 2, 2))
    perm = [3, 1, 2]
    permuted = qs.permute_subsystems(rho, perm)
    for fn in (ms.c_l1, ms.imag_robustness):
        assert abs(fn(rho).value - fn(permuted).value) <= 1e-8
    psi = qs.haar_pure(rng, (2, 2, 2))
    psi_p = qs.permute_subsystems(psi, perm)
    assert abs(ms.pure_entanglement(psi, P3, "Ef").value
               - ms.pure_entanglement(psi_p, P3, "Ef").value) <= 1e-10
    assert abs(ms.kpe_min_sum(psi, P3, 2).value
               - ms.kpe_min_sum(psi_p, P3, 2).value) <= 1e-10
    small = qs.ginibre_mixed(rng, (2, 2), rank=2)
    sw = qs.permute_subsystems(small, [2, 1])
    assert abs(ms.non_mppt(small, parse("1|2", 2)).value
               - ms.non_mppt(sw, parse("1|2", 2)).value) <= 1e-8


def test_imag_robustness_type_b_equality():
    # merging blocks leaves the matrix untouched, so type-b related partitions
    # give exactly equal values
    rho = qs.ginibre_mixed(qs.make_rng(8), (2, 2, 2))
    full = ms.imag_robustness(rho, P3).value
    merged = ms.imag_robustness(rho, parse("1,2|3", 3)).value
    assert abs(full - merged) <= 1e-10


def test_measure_result_validation():
    with pytest.raises(ms.MeasureError):
        ms.MeasureResult(-0.5, "exact")
    with pytest.raises(ms.MeasureError):
        ms.MeasureResult(0.5, "sideways")
