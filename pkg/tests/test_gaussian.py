import math

import numpy as np
import pytest

from mqc import gaussian as ga
from mqc.partitions import parse
from mqc.qstate import make_rng


def test_validate_vacuum_thermal_and_rejection():
    assert np.allclose(ga.validate(ga.vacuum((1, 1))), [1.0, 1.0])
    th = ga.GaussianState((1,), 3.0 * np.eye(2))
    assert np.allclose(ga.validate(th), [3.0])
    with pytest.raises(ga.GaussianError):
        ga.GaussianState((1,), 0.5 * np.eye(2))  # below vacuum
    with pytest.raises(ga.GaussianError):
        ga.GaussianState((1,), np.array([[1.0, 0.2], [0.1, 1.0]]))  # asymmetric


def test_partial_trace_examples():
    two = ga.g_product(ga.vacuum((1,)), ga.vacuum((1,)))
    red = ga.g_partial_trace(two, [1])
    assert np.allclose(red.cov, np.eye(2))
    r = 0.5
    t = ga.tmsv(r)
    kept = ga.g_partial_trace(t, [1])
    assert np.allclose(kept.cov, math.cosh(2 * r) * np.eye(2), atol=1e-12)
    same = ga.g_partial_trace(t, [1, 2])
    assert np.allclose(same.cov, t.cov)


def test_nonproduct_examples():
    prod = ga.g_product(ga.g_random(make_rng(0), 1, 0.5),
                        ga.g_random(make_rng(1), 1, 0.5))
    assert abs(ga.nonproduct_value(prod, parse("1|2", 2))) < 1e-12
    for r in (0.1, 0.5, 1.0):
        got = ga.nonproduct_value(ga.tmsv(r), parse("1|2", 2))
        assert abs(got - (1 - math.cosh(2 * r) ** -4)) < 1e-10
    with pytest.raises(ga.GaussianError):
        ga.nonproduct_value(ga.tmsv(0.3), parse("1,2", 2))


def test_nonproduct_range_on_random_states():
    rng = make_rng(2)
    for _ in range(100):
        g = ga.g_random(rng, 3, 0.8, (1, 1, 1))
        v = ga.nonproduct_value(g, parse("1|2|3", 3))
        assert 0.0 - 1e-10 <= v < 1.0


def test_imaginarity_examples():
    assert ga.imaginarity_value(ga.vacuum((1,))) == 0.0
    displaced = ga.GaussianState((1,), np.eye(2), [0.0, 1.0])
    assert ga.imaginarity_value(displaced) == 1.0
    r = 0.6
    sq = ga.squeezed_vacuum(r)
    assert abs(ga.imaginarity_value(sq)) < 1e-12
    q_disp = ga.GaussianState((1,), np.eye(2), [1.0, 0.0])
    assert ga.imaginarity_value(q_disp) == 0.0


def test_coherence_examples():
    assert abs(ga.coherence_value(ga.vacuum((1, 1, 1)))) < 1e-12
    coherent = ga.GaussianState((1,), np.eye(2), [1.0, 0.0])
    assert abs(ga.coherence_value(coherent) - 1.0) < 1e-12
    for r in (0.2, 0.5, 1.0):
        got = ga.coherence_value(ga.squeezed_vacuum(r))
        want = 1 - 2 / (math.exp(4 * r) + math.exp(-4 * r))
        assert abs(got - want) < 1e-10
    with pytest.raises(ga.GaussianError):
        ga.coherence_value(ga.GaussianState((2,), np.eye(4)))


def test_g_random_spectral_identity():
    rng = make_rng(3)
    for _ in range(20):
        g = ga.g_random(rng, 2, 0.7, (1, 1))
        nus = ga.validate(g)
        assert nus.min() >= 1 - 1e-8
        det = np.linalg.det(g.cov)
        assert abs(det - np.prod(nus ** 2)) <= 1e-6 * max(1.0, det)


def test_apply_local_identity_and_cp_check():
    g = ga.g_random(make_rng(4), 2, 0.5, (1, 1))
    ident = [(np.eye(2), np.zeros((2, 2)), np.zeros(2))] * 2
    out = ga.g_apply_local(g, ident)
    assert np.allclose(out.cov, g.cov) and np.allclose(out.mean, g.mean)
    with pytest.raises(ga.GaussianError):
        # amplification without added noise violates the CP condition
        ga.g_apply_local(g, [(2.0 * np.eye(2), np.zeros((2, 2)), None)] * 2)


def test_incoherent_channel_preserves_free_set():
    rng = make_rng(5)
    inc = ga.g_incoherent_random(rng, 3)
    out = ga.g_apply_local(inc, ga.sample_incoherent_local(rng, inc))
    assert ga.coherence_value(out) < 1e-10
    # phase rotation alone leaves thermal diagonal covariances untouched
    rot = [(ga.rotation(0.7), np.zeros((2, 2)), np.zeros(2))] * 3
    assert np.allclose(ga.g_apply_local(inc, rot).cov, inc.cov, atol=1e-12)


def test_real_channel_preserves_free_set():
    rng = make_rng(6)
    base = ga.GaussianState((1, 1), np.diag([2.0, 1.5, 1.3, 1.1]))
    out = ga.g_apply_local(base, ga.sample_real_local(rng, base))
    assert ga.imaginarity_value(out) < 1e-10


def test_nonproduct_monotone_under_local_channels():
    rng = make_rng(7)
    part = parse("1|2|3", 3)
    for _ in range(30):
        g = ga.g_random(rng, 3, 0.7, (1, 1, 1))
        before = ga.nonproduct_value(g, part)
        after = ga.nonproduct_value(ga.g_apply_local(g, ga.sample_local_gaussian(rng, g)), part)
        assert after <= before + 1e-8


def test_nonproduct_hierarchy_small():
    from mqc.partitions import coarser, enumerate_subrepartitions
    rng = make_rng(8)
    parts = [p for p in enumerate_subrepartitions(3) if p.block_count >= 2]
    for _ in range(20):
        g = ga.g_random(rng, 3, 0.6, (1, 1, 1))
        vals = {p: ga.nonproduct_value(g, p) for p in parts}
        for q in parts:
            for p in parts:
                if q != p and coarser(q, p):
                    assert vals[q] <= vals[p] + 1e-9


def test_nonproduct_complete_monogamy_on_products():
    # product states: the 12-block value saturates the total, and every
    # correlation involving party 3 vanishes
    rng = make_rng(9)
    for _ in range(10):
        g12 = ga.g_random(rng, 2, 0.8, (1, 1))
        g3 = ga.g_random(rng, 1, 0.5)
        g = ga.g_product(g12, g3)
        total = ga.nonproduct_value(g, parse("1|2|3", 3))
        pair = ga.nonproduct_value(g, parse("1|2", 3))
        assert abs(total - pair) <= 1e-10
        assert abs(ga.nonproduct_value(g, parse("1|3", 3))) <= 1e-10
        assert abs(ga.nonproduct_value(g, parse("2|3", 3))) <= 1e-10
        assert abs(ga.nonproduct_value(g, parse("1,2|3", 3))) <= 1e-10


def test_symmetry_under_party_permutation():
    rng = make_rng(10)
    g = ga.g_random(rng, 3, 0.7, (1, 1, 1))
    permuted = ga.g_permute_parties(g, [3, 1, 2])
    assert abs(ga.nonproduct_value(g, parse("1|2|3", 3))
               - ga.nonproduct_value(permuted, parse("1|2|3", 3))) < 1e-10
    assert abs(ga.coherence_value(g) - ga.coherence_value(permuted)) < 1e-10
