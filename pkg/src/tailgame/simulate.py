"""Episode simulation with exact early termination on detected cycles.

An episode runs a strategy pair stage by stage.  While every moving cursor is
action-deterministic and both cursors publish tokens, the joint token (plus
stage parity in alternating games) is recorded; a repeat means play has
entered a cycle, the realized play is a lasso, and the tail payoff is read
off exactly instead of simulating to the horizon.  Any stochastic stage
clears the record, since a sampled action breaks the determinism argument.

Sampling is reproducible and order-insensitive: every episode derives its
nature/informed/uninformed streams from the master seed and the episode index
by hashing, so episode e is the same regardless of how many episodes run.
"""

from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass
from typing import Sequence

from .model import GameSpec, LassoPlay, PublicHistory, Timing
from .payoffs import NotLassoEvaluable, PayoffEvaluator
from .strategies import (
    InformedStrategy,
    UninformedStrategy,
    det_action,
    sample_action,
)


def stream_seed(master: int, *parts) -> int:
    digest = hashlib.sha256(repr((master,) + parts).encode()).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass(frozen=True)
class SimConfig:
    horizon: int = 1000
    episodes: int = 100
    seed: int = 0
    record: bool = False

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if self.episodes < 1:
            raise ValueError("episodes must be at least 1")


@dataclass
class EpisodeResult:
    state: int
    payoff: float
    exact: bool
    stages: int
    lasso: LassoPlay | None = None
    pairs: tuple[tuple[int, int], ...] | None = None
    i_cursor: object = None
    j_cursor: object = None


def run_episode(
    spec: GameSpec,
    evaluator: PayoffEvaluator,
    sigma: InformedStrategy,
    tau: UninformedStrategy,
    horizon: int,
    rng_nature: random.Random,
    rng_i: random.Random,
    rng_j: random.Random,
    force_state: int | None = None,
    record: bool = False,
) -> EpisodeResult:
    if force_state is not None:
        k = force_state
    else:
        k = sample_action(spec.prior.probs, rng_nature.random())
    ci = sigma.cursor(k)
    cj = tau.cursor()
    pairs: list[tuple[int, int]] = []
    seen: dict[tuple, int] = {}
    alternating = spec.timing is Timing.ALTERNATING
    can_lasso = True
    t = 0
    while t < horizon:
        deterministic = can_lasso
        if deterministic:
            ti = ci.token()
            tj = cj.token()
            if ti is None or tj is None:
                deterministic = False
        if spec.i_owns(t):
            i = det_action(ci.dist())
            if i is None:
                deterministic = False
                i = sample_action(ci.dist(), rng_i.random())
        else:
            i = spec.dummy_i
        if spec.j_owns(t):
            j = det_action(cj.dist())
            if j is None:
                deterministic = False
                j = sample_action(cj.dist(), rng_j.random())
        else:
            j = spec.dummy_j
        if deterministic:
            key = (ti, tj, t % 2 if alternating else 0)
            t0 = seen.get(key)
            if t0 is not None:
                lasso = LassoPlay(
                    prefix=PublicHistory(tuple(pairs[:t0])),
                    cycle=PublicHistory(tuple(pairs[t0:])),
                )
                try:
                    payoff = evaluator.eval_lasso(spec, k, lasso)
                    return EpisodeResult(
                        state=k,
                        payoff=payoff,
                        exact=True,
                        stages=t,
                        lasso=lasso,
                        pairs=tuple(pairs) if record else None,
                        i_cursor=ci,
                        j_cursor=cj,
                    )
                except NotLassoEvaluable:
                    can_lasso = False
                    seen = {}
            else:
                seen[key] = t
        else:
            if seen:
                seen = {}
        pair = (i, j)
        pairs.append(pair)
        ci.observe(pair)
        cj.observe(pair)
        t += 1
    h = PublicHistory(tuple(pairs))
    return EpisodeResult(
        state=k,
        payoff=evaluator.eval_truncated(spec, k, h),
        exact=False,
        stages=horizon,
        pairs=tuple(pairs) if record else None,
        i_cursor=ci,
        j_cursor=cj,
    )


def _block_stats(cursor) -> tuple[int, int, int] | None:
    events = getattr(cursor, "events", None)
    queries = getattr(cursor, "oracle_queries", None)
    if events is None or queries is None:
        return None
    from .beliefs import BlockEvent

    new_blocks = sum(1 for _, ev in events if ev is BlockEvent.NEW_BLOCK)
    boundaries = sum(1 for _, ev in events if ev is BlockEvent.BOUNDARY)
    return new_blocks, boundaries, len(queries)


@dataclass
class SimResult:
    mean: float
    stderr: float
    episodes: int
    horizon: int
    seed: int
    exact_fraction: float
    per_state: dict[str, tuple[float, int]]
    block_stats: dict[str, float] | None = None

    @property
    def ci95(self) -> float:
        return 1.96 * self.stderr


def iter_episodes(
    spec: GameSpec,
    evaluator: PayoffEvaluator,
    sigma: InformedStrategy,
    tau: UninformedStrategy,
    config: SimConfig,
    force_state: int | None = None,
):
    """Yield (episode index, EpisodeResult) under the config's seed scheme."""
    for ep in range(config.episodes):
        yield ep, run_episode(
            spec,
            evaluator,
            sigma,
            tau,
            horizon=config.horizon,
            rng_nature=random.Random(stream_seed(config.seed, ep, "nature")),
            rng_i=random.Random(stream_seed(config.seed, ep, "i")),
            rng_j=random.Random(stream_seed(config.seed, ep, "j")),
            force_state=force_state,
            record=config.record,
        )


def estimate_payoff(
    spec: GameSpec,
    evaluator: PayoffEvaluator,
    sigma: InformedStrategy,
    tau: UninformedStrategy,
    config: SimConfig,
    force_state: int | None = None,
) -> SimResult:
    payoffs: list[float] = []
    by_state: dict[int, list[float]] = {k: [] for k in range(spec.n_states)}
    exact_count = 0
    blocks: list[tuple[int, int, int]] = []
    for _, res in iter_episodes(spec, evaluator, sigma, tau, config, force_state):
        payoffs.append(res.payoff)
        by_state[res.state].append(res.payoff)
        if res.exact:
            exact_count += 1
        bs = _block_stats(res.j_cursor)
        if bs is not None:
            blocks.append(bs)
    n = len(payoffs)
    mean = math.fsum(payoffs) / n
    if n > 1:
        var = math.fsum((v - mean) ** 2 for v in payoffs) / (n - 1)
        stderr = math.sqrt(var / n)
    else:
        stderr = 0.0
    per_state = {}
    for k, vals in by_state.items():
        if vals:
            per_state[spec.states[k]] = (math.fsum(vals) / len(vals), len(vals))
    block_stats = None
    if blocks:
        m = len(blocks)
        block_stats = {
            "new_blocks_mean": math.fsum(b[0] for b in blocks) / m,
            "boundary_mean": math.fsum(b[1] for b in blocks) / m,
            "oracle_queries_mean": math.fsum(b[2] for b in blocks) / m,
        }
    return SimResult(
        mean=mean,
        stderr=stderr,
        episodes=n,
        horizon=config.horizon,
        seed=config.seed,
        exact_fraction=exact_count / n,
        per_state=per_state,
        block_stats=block_stats,
    )


@dataclass
class ProfileValue:
    value: float
    per_state: dict[str, float]
    all_exact: bool


def evaluate_exact(
    spec: GameSpec,
    evaluator: PayoffEvaluator,
    sigma: InformedStrategy,
    tau: UninformedStrategy,
    horizon: int = 4096,
    seed: int = 0,
) -> ProfileValue:
    """Expected payoff with the state enumerated instead of sampled.

    For deterministic strategy pairs each forced episode ends on a detected
    cycle and the result is exact (``all_exact``).  Mixed pairs fall back to
    one seeded sampled episode per state, which the flag reports honestly; use
    :func:`estimate_payoff` for a proper estimate in that case.
    """
    per_state: dict[str, float] = {}
    total = 0.0
    all_exact = True
    for k in range(spec.n_states):
        res = run_episode(
            spec,
            evaluator,
            sigma,
            tau,
            horizon=horizon,
            rng_nature=random.Random(stream_seed(seed, k, "nature")),
            rng_i=random.Random(stream_seed(seed, k, "i")),
            rng_j=random.Random(stream_seed(seed, k, "j")),
            force_state=k,
        )
        per_state[spec.states[k]] = res.payoff
        total += spec.prior[k] * res.payoff
        all_exact = all_exact and res.exact
    return ProfileValue(value=total, per_state=per_state, all_exact=all_exact)


@dataclass
class PanelRow:
    name: str
    value: float
    exact: bool
    per_state: dict[str, float]
    ci95: float = 0.0


def panel_bound(
    spec: GameSpec,
    evaluator: PayoffEvaluator,
    entries: Sequence[tuple[str, InformedStrategy, UninformedStrategy]],
    config: SimConfig,
    side: str = "min",
) -> tuple[list[PanelRow], float]:
    """Evaluate named strategy pairs and aggregate a one-sided bound.

    Each entry is evaluated exactly when the pair is deterministic, else by
    Monte Carlo under the shared config (common master seed across rows).
    ``side`` "min" returns the worst row value (a floor holding across the
    panel), "max" the best row value (a ceiling).
    """
    if side not in ("min", "max"):
        raise ValueError("side must be 'min' or 'max'")
    rows: list[PanelRow] = []
    for name, sigma, tau in entries:
        exact = evaluate_exact(
            spec, evaluator, sigma, tau, horizon=config.horizon, seed=config.seed
        )
        if exact.all_exact:
            rows.append(
                PanelRow(
                    name=name,
                    value=exact.value,
                    exact=True,
                    per_state=exact.per_state,
                )
            )
            continue
        est = estimate_payoff(spec, evaluator, sigma, tau, config)
        rows.append(
            PanelRow(
                name=name,
                value=est.mean,
                exact=False,
                per_state={s: v for s, (v, _) in est.per_state.items()},
                ci95=est.ci95,
            )
        )
    values = [r.value for r in rows]
    bound = min(values) if side == "min" else max(values)
    return rows, bound
