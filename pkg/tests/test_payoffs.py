import random

import pytest

from tailgame import (
    BuchiObjective,
    CoBuchiObjective,
    CustomPayoff,
    Example1Payoff,
    Example2Payoff,
    LassoPlay,
    LimsupAverage,
    NotLassoEvaluable,
    ParityObjective,
    PublicHistory,
    Timing,
    average_game,
    check_shift_invariant,
    check_tail_measurable,
    evaluator_from_json,
    example1_game,
    example2_game,
    history_from_labels,
    periodic_track,
)
from tailgame.payoffs import random_lasso

from oracles import brute_example1_events, brute_track_values, exact_cycle_mean


def lasso_from_labels(spec, prefix, cycle):
    return LassoPlay(
        prefix=history_from_labels(spec, prefix),
        cycle=history_from_labels(spec, cycle),
    )


# ---------------------------------------------------------------------------
# periodic_track


def test_periodic_track_even_cycle_by_parity():
    spec, _ = example1_game()
    # One full round: I plays l, then II plays r.
    lasso = lasso_from_labels(spec, [], [("l", "-"), ("-", "r")])
    assert sorted(periodic_track(lasso, parity=0, coord=0)) == [spec.i_index("l")]
    assert sorted(periodic_track(lasso, parity=1, coord=1)) == [spec.j_index("r")]


def test_periodic_track_odd_cycle_doubles_span():
    lasso = LassoPlay(
        prefix=PublicHistory(()),
        cycle=PublicHistory(((0, 0), (0, 0), (0, 0))),
    )
    # Odd cycle against a parity filter: the track must cover both alignments.
    track = periodic_track(lasso, parity=0, coord=0)
    assert len(track) == 3


def test_periodic_track_matches_brute_force():
    spec, _ = example1_game()
    rng = random.Random(11)
    for _ in range(200):
        lasso = random_lasso(spec, rng)
        for parity in (None, 0, 1):
            got = sorted(periodic_track(lasso, parity=parity, coord=1))
            want = brute_track_values(lasso, parity, 1)
            assert got == want


# ---------------------------------------------------------------------------
# the alternating example payoffs


def test_example1_payoff_table_on_committed_plays():
    spec, ev = example1_game()
    # II commits to l: payoff -1 in the first state, 2 in the second.
    ii_l = lasso_from_labels(spec, [], [("r", "-"), ("-", "l")])
    assert ev.eval_lasso(spec, 0, ii_l) == -1.0
    assert ev.eval_lasso(spec, 1, ii_l) == 2.0
    # I commits to l while II does not: -2 / 1.
    i_l = lasso_from_labels(spec, [], [("l", "-"), ("-", "r")])
    assert ev.eval_lasso(spec, 0, i_l) == -2.0
    assert ev.eval_lasso(spec, 1, i_l) == 1.0
    # Neither: 0 in both states.
    none = lasso_from_labels(spec, [], [("r", "-"), ("-", "r")])
    assert ev.eval_lasso(spec, 0, none) == 0.0
    assert ev.eval_lasso(spec, 1, none) == 0.0


def test_example1_ii_condition_wins_over_i_condition():
    spec, ev = example1_game()
    both = lasso_from_labels(spec, [], [("l", "-"), ("-", "l")])
    assert ev.eval_lasso(spec, 0, both) == -1.0
    assert ev.eval_lasso(spec, 1, both) == 2.0


def test_example1_prefix_actions_are_ignored():
    spec, ev = example1_game()
    with_l = lasso_from_labels(
        spec, [("l", "-"), ("-", "l")], [("r", "-"), ("-", "r")]
    )
    assert ev.eval_lasso(spec, 0, with_l) == 0.0


def test_example1_agrees_with_brute_events():
    spec, ev = example1_game()
    rng = random.Random(5)
    for _ in range(300):
        lasso = random_lasso(spec, rng)
        ii_l, i_l = brute_example1_events(
            lasso, spec.i_index("l"), spec.j_index("l")
        )
        if ii_l:
            want = (-1.0, 2.0)
        elif i_l:
            want = (-2.0, 1.0)
        else:
            want = (0.0, 0.0)
        assert (ev.eval_lasso(spec, 0, lasso), ev.eval_lasso(spec, 1, lasso)) == want


def test_example1_truncated_uses_late_window():
    spec, ev = example1_game()
    h = history_from_labels(
        spec, [("l", "-"), ("-", "l"), ("r", "-"), ("-", "r")] * 4
    )
    # l appears in the second half, so both conditions hold on the window.
    assert ev.eval_truncated(spec, 0, h) == -1.0
    early_l = history_from_labels(
        spec,
        [("l", "-"), ("-", "l")] + [("r", "-"), ("-", "r")] * 7,
    )
    assert ev.eval_truncated(spec, 0, early_l) == 0.0


def test_example2_density_strictly_above_threshold():
    spec, ev = example2_game()
    # II plays l once per 10 own moves: density exactly 0.1, not above.
    cycle = [("r", "-"), ("-", "l")] + [("r", "-"), ("-", "r")] * 9
    at_thr = lasso_from_labels(spec, [], cycle)
    assert ev.eval_lasso(spec, 0, at_thr) == 0.0
    # Twice per 10: density 0.2 crosses the threshold.
    cycle2 = [("r", "-"), ("-", "l")] * 2 + [("r", "-"), ("-", "r")] * 8
    above = lasso_from_labels(spec, [], cycle2)
    assert ev.eval_lasso(spec, 0, above) == -1.0
    assert ev.eval_lasso(spec, 1, above) == 2.0


def test_example2_commitments_match_example1():
    spec1, ev1 = example1_game()
    spec2, ev2 = example2_game()
    for cycle in ([("r", "-"), ("-", "l")], [("l", "-"), ("-", "r")]):
        l1 = lasso_from_labels(spec1, [], cycle)
        l2 = lasso_from_labels(spec2, [], cycle)
        for k in (0, 1):
            assert ev1.eval_lasso(spec1, k, l1) == ev2.eval_lasso(spec2, k, l2)


# ---------------------------------------------------------------------------
# limsup average and the omega-regular objectives


def test_limsup_average_cycle_mean_exact():
    g0 = [[0.25, 0.75], [0.5, 0.125]]
    g1 = [[1.0, 0.0], [0.0, 1.0]]
    spec, ev = average_game([g0, g1], prior=(0.5, 0.5))
    rng = random.Random(3)
    for _ in range(100):
        lasso = random_lasso(spec, rng)
        for k, g in ((0, g0), (1, g1)):
            assert ev.eval_lasso(spec, k, lasso) == pytest.approx(
                exact_cycle_mean(g, lasso), abs=1e-12
            )


def test_limsup_average_truncated_is_running_mean():
    g = [[1.0, 0.0], [0.0, 0.0]]
    spec, ev = average_game([g, g], prior=(0.5, 0.5))
    h = PublicHistory(((0, 0), (0, 0), (1, 1), (1, 1)))
    assert ev.eval_truncated(spec, 0, h) == pytest.approx(0.5)


def test_buchi_and_cobuchi_are_complementary_on_cycles():
    spec, _ = average_game([[[0.0, 0.0], [0.0, 0.0]]] * 2, prior=(0.5, 0.5))
    target = frozenset({(0, 0)})
    buchi = BuchiObjective(targets=target)
    cobuchi = CoBuchiObjective(targets=target)
    hit = LassoPlay(prefix=PublicHistory(()), cycle=PublicHistory(((0, 0), (1, 1))))
    miss = LassoPlay(prefix=PublicHistory(((0, 0),)), cycle=PublicHistory(((1, 1),)))
    assert buchi.eval_lasso(spec, 0, hit) == 1.0
    assert buchi.eval_lasso(spec, 0, miss) == 0.0
    # Avoidance holds exactly when the cycle misses the target set.
    assert cobuchi.eval_lasso(spec, 0, hit) == 0.0
    assert cobuchi.eval_lasso(spec, 0, miss) == 1.0


def test_parity_least_recurring_priority_decides():
    spec, _ = average_game([[[0.0, 0.0], [0.0, 0.0]]] * 2, prior=(0.5, 0.5))
    prio = {(0, 0): 2, (0, 1): 1, (1, 0): 3, (1, 1): 4}
    parity = ParityObjective(priority=prio)
    even_min = LassoPlay(
        prefix=PublicHistory(((0, 1),)), cycle=PublicHistory(((0, 0), (1, 0)))
    )
    assert parity.eval_lasso(spec, 0, even_min) == 1.0
    odd_min = LassoPlay(
        prefix=PublicHistory(()), cycle=PublicHistory(((0, 1), (1, 1)))
    )
    assert parity.eval_lasso(spec, 0, odd_min) == 0.0


def test_parity_raises_on_unranked_pair():
    spec, _ = average_game([[[0.0]]], prior=(1.0,))
    parity = ParityObjective(priority={})
    lasso = LassoPlay(prefix=PublicHistory(()), cycle=PublicHistory(((0, 0),)))
    with pytest.raises(ValueError):
        parity.eval_lasso(spec, 0, lasso)


def test_custom_payoff_without_lasso_rule():
    spec, _ = average_game([[[0.0]]], prior=(1.0,))
    ev = CustomPayoff(truncated_fn=lambda s, k, h: 0.5)
    lasso = LassoPlay(prefix=PublicHistory(()), cycle=PublicHistory(((0, 0),)))
    with pytest.raises(NotLassoEvaluable):
        ev.eval_lasso(spec, 0, lasso)
    assert ev.eval_truncated(spec, 0, PublicHistory(((0, 0),))) == 0.5


# ---------------------------------------------------------------------------
# JSON descriptors and random lassos


def test_evaluator_from_json_all_kinds():
    spec, _ = example1_game()
    ev = evaluator_from_json({"kind": "example1"}, spec)
    assert isinstance(ev, Example1Payoff)
    ev2 = evaluator_from_json({"kind": "example2", "threshold": 0.2}, spec)
    assert isinstance(ev2, Example2Payoff) and ev2.threshold == 0.2
    sspec, _ = average_game([[[0.0, 1.0], [1.0, 0.0]]] * 2, prior=(0.5, 0.5))
    mats = {
        "k1": [[0.0, 1.0], [1.0, 0.0]],
        "k2": [[1.0, 0.0], [0.0, 1.0]],
    }
    ev3 = evaluator_from_json({"kind": "limsup_average", "matrices": mats}, sspec)
    assert isinstance(ev3, LimsupAverage)
    ev4 = evaluator_from_json(
        {"kind": "buchi", "targets": [["i0", "j0"]]}, sspec
    )
    assert isinstance(ev4, BuchiObjective)
    ev5 = evaluator_from_json(
        {"kind": "parity", "priorities": [["i0", "j0", 1]]}, sspec
    )
    assert isinstance(ev5, ParityObjective)
    with pytest.raises(ValueError):
        evaluator_from_json({"kind": "nope"}, spec)
    with pytest.raises(ValueError):
        evaluator_from_json({}, spec)


def test_random_lasso_is_valid_and_parity_safe():
    spec, _ = example1_game()
    rng = random.Random(0)
    from tailgame.model import history_errors
    from tailgame import unroll

    for _ in range(50):
        lasso = random_lasso(spec, rng)
        assert len(lasso.cycle) % 2 == 0
        assert history_errors(spec, unroll(lasso, len(lasso.prefix) + 3 * len(lasso.cycle))) == []


# ---------------------------------------------------------------------------
# invariance checks (the full sweep is in the acceptance suite)


def test_tail_and_shift_checks_pass_for_example1():
    spec, ev = example1_game()
    assert check_tail_measurable(spec, ev, n_samples=30, seed=2).ok
    assert check_shift_invariant(spec, ev, n_samples=30, seed=2).ok


def test_tail_check_catches_prefix_sensitivity():
    spec, _ = average_game([[[0.0, 1.0], [1.0, 0.0]]] * 2, prior=(0.5, 0.5))
    broken = CustomPayoff(
        truncated_fn=lambda s, k, h: 0.0,
        lasso_fn=lambda s, k, lasso: float(
            sum(i for i, _ in lasso.prefix.pairs)
        ),
        bounds=(0.0, 100.0),
    )
    report = check_tail_measurable(spec, broken, n_samples=40, seed=1)
    assert not report.ok


def test_shift_check_catches_phase_sensitivity():
    spec, _ = average_game([[[0.0, 1.0], [1.0, 0.0]]] * 2, prior=(0.5, 0.5))
    phase = CustomPayoff(
        truncated_fn=lambda s, k, h: 0.0,
        lasso_fn=lambda s, k, lasso: float(len(lasso.prefix) % 3),
        bounds=(0.0, 10.0),
    )
    report = check_shift_invariant(spec, phase, n_samples=40, seed=1)
    assert not report.ok
