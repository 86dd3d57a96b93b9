import random

import pytest

from tailgame import (
    Belief,
    PublicHistory,
    SimConfig,
    SplitPlan,
    estimate_payoff,
    evaluate_exact,
    example1_game,
    example1_oracle,
    iter_episodes,
    make_block_response,
    make_splitting,
    panel_bound,
    pure_informed,
    pure_uninformed,
    run_episode,
    stream_seed,
)
from tailgame.strategies import StationaryUninformed

DUMMY = 2


@pytest.fixture
def game():
    return example1_game()


def rngs(seed, tag=0):
    return dict(
        rng_nature=random.Random(stream_seed(seed, tag, "nature")),
        rng_i=random.Random(stream_seed(seed, tag, "i")),
        rng_j=random.Random(stream_seed(seed, tag, "j")),
    )


def cav_sigma(spec):
    plan = SplitPlan(
        posteriors=(Belief((0.0, 1.0)), Belief((2.0 / 3.0, 1.0 / 3.0))),
        weights=(0.25, 0.75),
        continuations=(pure_informed(spec, "l"), pure_informed(spec, "r")),
    )
    return make_splitting(spec, Belief((0.5, 0.5)), plan)


def test_stream_seed_is_stable_and_sensitive():
    assert stream_seed(0, 1, "nature") == stream_seed(0, 1, "nature")
    assert stream_seed(0, 1, "nature") != stream_seed(0, 2, "nature")
    assert stream_seed(0, 1, "nature") != stream_seed(0, 1, "i")
    assert stream_seed(1, 1, "nature") != stream_seed(0, 1, "nature")


def test_sim_config_validation():
    with pytest.raises(ValueError):
        SimConfig(horizon=0)
    with pytest.raises(ValueError):
        SimConfig(episodes=0)
    SimConfig()


def test_run_episode_detects_the_cycle_immediately(game):
    spec, ev = game
    sigma = pure_informed(spec, "r")
    tau = pure_uninformed(spec, "l")
    res = run_episode(spec, ev, sigma, tau, horizon=1000, force_state=0, **rngs(0))
    assert res.exact
    assert res.stages == 2
    assert res.payoff == -1.0
    assert res.lasso is not None
    assert ev.eval_lasso(spec, 0, res.lasso) == res.payoff
    res2 = run_episode(spec, ev, sigma, tau, horizon=1000, force_state=1, **rngs(0))
    assert res2.payoff == 2.0


def test_run_episode_truncates_stochastic_play(game):
    spec, ev = game
    sigma = pure_informed(spec, "r")
    tau = StationaryUninformed(spec, (0.5, 0.5, 0.0))
    res = run_episode(
        spec, ev, sigma, tau, horizon=64, force_state=1, record=True, **rngs(5)
    )
    assert not res.exact
    assert res.stages == 64
    assert len(res.pairs) == 64
    assert res.payoff == ev.eval_truncated(spec, 1, PublicHistory(res.pairs))
    again = run_episode(
        spec, ev, sigma, tau, horizon=64, force_state=1, record=True, **rngs(5)
    )
    assert again.pairs == res.pairs


def test_iter_episodes_prefix_property(game):
    spec, ev = game
    sigma = pure_informed(spec, "r")
    tau = StationaryUninformed(spec, (0.5, 0.5, 0.0))
    long = [
        (r.state, r.payoff)
        for _, r in iter_episodes(
            spec, ev, sigma, tau, SimConfig(horizon=32, episodes=6, seed=9)
        )
    ]
    short = [
        (r.state, r.payoff)
        for _, r in iter_episodes(
            spec, ev, sigma, tau, SimConfig(horizon=32, episodes=3, seed=9)
        )
    ]
    assert long[:3] == short


def test_nature_stream_depends_on_the_seed(game):
    spec, ev = game
    sigma = pure_informed(spec, "r")
    tau = pure_uninformed(spec, "r")

    def states(seed):
        cfg = SimConfig(horizon=16, episodes=50, seed=seed)
        return [r.state for _, r in iter_episodes(spec, ev, sigma, tau, cfg)]

    assert states(0) != states(1)
    assert states(0) == states(0)


def test_estimate_payoff_pure_pair(game):
    spec, ev = game
    res = estimate_payoff(
        spec,
        ev,
        pure_informed(spec, "r"),
        pure_uninformed(spec, "l"),
        SimConfig(horizon=100, episodes=40, seed=2),
    )
    assert res.exact_fraction == 1.0
    assert set(res.per_state) <= {"k1", "k2"}
    assert sum(n for _, n in res.per_state.values()) == 40
    # Per-state payoffs are exact; only the state mix is random.
    assert res.per_state["k1"][0] == -1.0
    assert res.per_state["k2"][0] == 2.0
    k1_n = res.per_state["k1"][1]
    want = (-1.0 * k1_n + 2.0 * (40 - k1_n)) / 40
    assert res.mean == pytest.approx(want, abs=1e-12)
    rerun = estimate_payoff(
        spec,
        ev,
        pure_informed(spec, "r"),
        pure_uninformed(spec, "l"),
        SimConfig(horizon=100, episodes=40, seed=2),
    )
    assert rerun.mean == res.mean


def test_estimate_payoff_single_episode_has_zero_stderr(game):
    spec, ev = game
    res = estimate_payoff(
        spec,
        ev,
        pure_informed(spec, "r"),
        pure_uninformed(spec, "l"),
        SimConfig(horizon=50, episodes=1, seed=0),
    )
    assert res.stderr == 0.0
    assert res.ci95 == 0.0


def test_estimate_payoff_block_stats(game):
    spec, ev = game
    sigma = cav_sigma(spec)
    tau = make_block_response(spec, sigma, oracle=example1_oracle(spec))
    res = estimate_payoff(
        spec, ev, sigma, tau, SimConfig(horizon=400, episodes=30, seed=3)
    )
    assert res.exact_fraction == 1.0
    stats = res.block_stats
    assert stats is not None
    # Exactly one oracle query per block start: the opening block plus either
    # one drift block (signal toward 2/3) or one boundary restart (vertex).
    assert stats["oracle_queries_mean"] == 2.0
    assert stats["new_blocks_mean"] + stats["boundary_mean"] == pytest.approx(1.0)
    assert 0.0 < stats["boundary_mean"] < 1.0


def test_evaluate_exact_enumerates_states(game):
    spec, ev = game
    out = evaluate_exact(spec, ev, pure_informed(spec, "r"), pure_uninformed(spec, "l"))
    assert out.all_exact
    assert out.per_state == {"k1": -1.0, "k2": 2.0}
    assert out.value == pytest.approx(0.5, abs=1e-12)
    noisy = evaluate_exact(
        spec,
        ev,
        pure_informed(spec, "r"),
        StationaryUninformed(spec, (0.5, 0.5, 0.0)),
        horizon=64,
    )
    assert not noisy.all_exact


def test_panel_bound_sides_and_rows(game):
    spec, ev = game
    entries = [
        ("vs_l", pure_informed(spec, "r"), pure_uninformed(spec, "l")),
        ("vs_r", pure_informed(spec, "r"), pure_uninformed(spec, "r")),
    ]
    cfg = SimConfig(horizon=100, episodes=5, seed=0)
    rows, floor = panel_bound(spec, ev, entries, cfg, side="min")
    assert floor == 0.0
    assert [r.name for r in rows] == ["vs_l", "vs_r"]
    assert all(r.exact for r in rows)
    _, ceil = panel_bound(spec, ev, entries, cfg, side="max")
    assert ceil == 0.5
    with pytest.raises(ValueError):
        panel_bound(spec, ev, entries, cfg, side="wat")


def test_panel_bound_monte_carlo_fallback(game):
    spec, ev = game
    entries = [
        ("noisy", pure_informed(spec, "r"), StationaryUninformed(spec, (0.5, 0.5, 0.0)))
    ]
    cfg = SimConfig(horizon=64, episodes=8, seed=1)
    rows, bound = panel_bound(spec, ev, entries, cfg, side="min")
    assert rows[0].exact is False
    assert rows[0].value == bound
    assert rows[0].ci95 >= 0.0
