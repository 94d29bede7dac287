import itertools

import numpy as np
import pytest

from mqc import steering as st, qstate as qs
from mqc.partitions import SteeringSplit, parse

SPLIT_1_2 = SteeringSplit(1, 2, parse("1", 2), parse("2", 2))


def test_make_assemblage_product_state_factorizes():
    rng = qs.make_rng(0)
    rho_a = qs.ginibre_mixed(rng, (2,))
    rho_b = qs.ginibre_mixed(rng, (2,))
    rho = qs.product(rho_a, rho_b)
    ma = st.pauli_zx_measurements()
    sa = st.make_assemblage(rho, SPLIT_1_2, ma)
    for x in (0, 1):
        for a in (0, 1):
            prob = np.real(np.trace(ma.povms[0][x][a] @ rho_a.data))
            expect = prob * rho_b.data
            assert np.abs(sa.elements[((a,), (x,))] - expect).max() < 1e-12


def test_make_assemblage_bell_z_measurement():
    sa = st.make_assemblage(qs.bell(), SPLIT_1_2, st.pauli_zx_measurements())
    assert np.allclose(sa.elements[((0,), (0,))], np.diag([0.5, 0.0]))
    assert np.allclose(sa.elements[((1,), (0,))], np.diag([0.0, 0.5]))


def test_assemblage_no_signalling():
    rng = qs.make_rng(1)
    rho = qs.ginibre_mixed(rng, (2, 2))
    ma = st.random_projective_measurements(rng, (2,), 3)
    sa = st.make_assemblage(rho, SPLIT_1_2, ma)  # constructor checks it
    red = sa.reduced_trusted()
    assert np.abs(red - qs.partial_trace(rho, [2]).data).max() < 1e-10


def test_lhs_check_constructive_member():
    rng = qs.make_rng(2)
    model = st.random_lhs_model(rng, (2, 2), 3)
    ma = st.random_projective_measurements(rng, (2,), 2)
    sa = st.make_assemblage(model.to_state(), SPLIT_1_2, ma)
    rep = st.lhs_check(sa, 1)
    assert rep.verdict == "lhs-member"
    assert rep.residual <= 1e-7
    # the returned model reproduces the assemblage
    strategies = st.deterministic_strategies(sa.settings, sa.outcomes)
    for (a, x), target in sa.elements.items():
        pred = sum(sig for lam, sig in zip(strategies, rep.model)
                   if all(lam[i][x[i]] == a[i] for i in range(len(a))))
        assert np.abs(pred - target).max() < 1e-6


def test_lhs_check_werner_threshold():
    ma = st.pauli_zx_measurements()
    low = st.make_assemblage(qs.werner(0.5), SPLIT_1_2, ma)
    assert st.lhs_check(low, 1).verdict == "lhs-member"
    high = st.make_assemblage(qs.werner(0.9), SPLIT_1_2, ma)
    assert st.lhs_check(high, 1).verdict == "steerable-evidence"


def test_lhs_check_two_trusted_groups():
    rng = qs.make_rng(100)
    split = SteeringSplit(1, 3, parse("1", 3), parse("2|3", 3))
    model = st.random_lhs_model(rng, (2, 2, 2), 3)
    ma = st.random_projective_measurements(rng, (2,), 2)
    sa = st.make_assemblage(model.to_state(), split, ma)
    rep = st.lhs_check(sa, 2)
    assert rep.verdict == "lhs-member"
    # a genuinely steerable configuration is never labeled lhs-member, and the
    # two-group branch never claims steerable
    z = st.pauli_zx_measurements().povms[0]
    sag = st.make_assemblage(qs.ghz(3, 2), split, st.MeasurementAssemblage((2,), (z,)))
    assert st.lhs_check(sag, 2).verdict == "inconclusive"


def test_strategy_count_cap():
    with pytest.raises(st.SteeringError):
        st.deterministic_strategies((8, 8), (8, 8))


def test_steer_free_apply():
    rng = qs.make_rng(3)
    rho = qs.ginibre_mixed(rng, (2, 2))
    ident = qs.steering_free_channel((2, 2), (1,), {2: [np.eye(2)]})
    assert np.abs(st.steer_free_apply(rho, SPLIT_1_2, ident).data - rho.data).max() < 1e-12
    wrong_tag = qs.KrausChannel((2, 2), {2: [np.eye(2)]}, "local-product")
    with pytest.raises(st.SteeringError):
        st.steer_free_apply(rho, SPLIT_1_2, wrong_tag)
    # untrusted marginal is untouched by any steering-free channel
    ch = qs.sample_channel(rng, "steering-free", (2, 2), untrusted=(1,))
    out = st.steer_free_apply(rho, SPLIT_1_2, ch)
    assert np.abs(qs.partial_trace(out, [1]).data
                  - qs.partial_trace(rho, [1]).data).max() < 1e-10


def test_depolarized_trusted_side_is_lhs():
    dep = [np.sqrt(0.5) * np.eye(2)[:, [i]] @ np.eye(2)[[j], :]
           for i in range(2) for j in range(2)]
    ch = qs.steering_free_channel((2, 2), (1,), {2: dep})
    out = st.steer_free_apply(qs.bell(), SPLIT_1_2, ch)
    sa = st.make_assemblage(out, SPLIT_1_2, st.pauli_zx_measurements())
    assert st.lhs_check(sa, 1).verdict == "lhs-member"


def test_unsteerable_distance_ub():
    rng = qs.make_rng(4)
    sep = st.random_lhs_model(rng, (2, 2), 4).to_state()
    # separable 2x2 states are certified at mixing parameter zero via PPT
    res = st.unsteerable_distance_ub(sep, SPLIT_1_2)
    assert res.value == 0.0
    bell_res = st.unsteerable_distance_ub(qs.bell(), SPLIT_1_2)
    assert bell_res.bound_kind == "upper-bound"
    assert abs(bell_res.value - 0.5) < 1e-6
    assert abs(bell_res.diagnostics["s_star"] - 2 / 3) < 1e-6


def test_unsteerable_distance_monotone_under_free_ops():
    rng = qs.make_rng(5)
    for _ in range(5):
        rho = qs.ginibre_mixed(rng, (2, 2))
        ch = qs.sample_channel(rng, "steering-free", (2, 2), untrusted=(1,))
        out = st.steer_free_apply(rho, SPLIT_1_2, ch)
        before = st.unsteerable_distance_ub(rho, SPLIT_1_2).value
        after = st.unsteerable_distance_ub(out, SPLIT_1_2).value
        # both sides are upper bounds; the comparison carries that slack, so
        # only order-of-magnitude violations would signal a real problem
        assert after <= before + 0.05


# ---------------------------------------------------------------------------
# constructive hierarchy transports on fully product explicit models


def spl(t, n, u, tr):
    return SteeringSplit(t, n, parse(u, n), parse(tr, n))


def predicted_matches_actual(model, split, ma, tol=1e-10):
    actual = st.make_assemblage(model.to_state(), split, ma)
    pred = model.predicted_assemblage(split, ma)
    worst = max(np.abs(actual.elements[k] - pred.elements[k]).max()
                for k in actual.elements)
    return worst <= tol


BASIC_PAIR_TEMPLATES = {
    # label: (t, n, fine untrusted, fine trusted, coarse untrusted, coarse trusted)
    "a-a": (2, 3, "1|2", "3", "1", "3"),
    "a-b": (1, 3, "1", "2|3", "1", "2,3"),
    "a-c": (1, 3, "1", "2,3", "1", "2"),
    "b-a": (2, 3, "1,2", "3", "1|2", "3"),     # merged untrusted is the finer side
    "b-b": (2, 4, "1,2", "3|4", "1|2", "3,4"),
    "b-c": (2, 4, "1,2", "3,4", "1|2", "3"),
    "c-a": (2, 3, "1,2", "3", "1", "3"),
    "c-b": (2, 4, "1,2", "3|4", "1", "3,4"),
    "c-c": (2, 4, "1,2", "3,4", "1", "3"),
}


def test_transport_basic_pairs_all_nine_types():
    """For each basic steering relation, an explicit fully product model of
    the finer configuration transports verbatim to the coarser one: the same
    per-party hidden states predict both assemblages exactly."""
    from mqc.partitions import steering_hierarchy
    rng = qs.make_rng(6)
    for label, (t, n, fu, ft, cu, ct) in BASIC_PAIR_TEMPLATES.items():
        fine = spl(t, n, fu, ft)
        coarse = spl(t, n, cu, ct)
        assert steering_hierarchy(coarse, fine), label
        model = st.random_lhs_model(rng, (2,) * n, 3)
        for split in (fine, coarse):
            units = split.untrusted.blocks
            ma = st.random_projective_measurements(
                rng, tuple(int(np.prod([2] * len(b))) for b in units), 2)
            assert predicted_matches_actual(model, split, ma), label


def test_transport_after_solver_model():
    """lhs-member on the finer configuration transports to the coarser one:
    marginalizing the found hidden states over a dropped trusted party
    reproduces the coarser assemblage."""
    rng = qs.make_rng(7)
    model = st.random_lhs_model(rng, (2, 2, 2), 4)
    rho = model.to_state()
    ma = st.random_projective_measurements(rng, (2,), 2)
    fine = spl(1, 3, "1", "2,3")
    sa_fine = st.make_assemblage(rho, fine, ma)
    rep = st.lhs_check(sa_fine, 1)
    assert rep.verdict == "lhs-member"
    # trusted type (a)/(c): drop party 3 from the trusted side
    coarse = spl(1, 3, "1", "2")
    sa_coarse = st.make_assemblage(rho, coarse, ma)
    strategies = st.deterministic_strategies(sa_fine.settings, sa_fine.outcomes)
    transported = [np.trace(sig.reshape(2, 2, 2, 2), axis1=1, axis2=3)
                   for sig in rep.model]
    for (a, x), target in sa_coarse.elements.items():
        pred = sum(sig for lam, sig in zip(strategies, transported)
                   if all(lam[i][x[i]] == a[i] for i in range(len(a))))
        assert np.abs(pred - target).max() < 1e-6
