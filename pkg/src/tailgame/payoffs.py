"""Payoff evaluators for infinite plays, exact on lassos.

Payoffs here depend only on the tail of the play: changing finitely many
stages never changes the value.  The exact evaluation substrate is the lasso
(eventually periodic play): "infinitely often" means "occurs in the cycle",
limsup averages and densities are cycle averages, and parity reads the least
priority occurring in the cycle.

Finite-horizon simulation cannot decide tail events, so every evaluator also
provides a documented surrogate ``eval_truncated``: tail conditions are read
off the last half of the observed history, limsup averages become the running
mean.  Simulation results carry an exact flag so consumers can tell the two
apart.

For alternating-move games the evaluators that care about who moved (the
example1/example2 families) select stages by global parity: player I's moves
are the even-stage ``i`` coordinates, player II's moves the odd-stage ``j``
coordinates.  One shift of such a play is a full round of two stages; the
``shift_step`` attribute records this for the shift-invariance check.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .model import (
    Belief,
    GameSpec,
    LassoPlay,
    PublicHistory,
    Timing,
)


class NotLassoEvaluable(Exception):
    """Raised when an evaluator has no exact rule for eventually periodic plays."""


def periodic_track(
    lasso: LassoPlay, parity: int | None, coord: int
) -> tuple[int, ...]:
    """Selected coordinate over one full period of the eventual play.

    ``parity`` of None selects every stage; 0 or 1 selects stages with that
    global stage parity.  The infinite play's selected subsequence eventually
    equals the returned tuple repeated forever: the window length is the cycle
    length, doubled when parity filtering meets an odd cycle so that the window
    is parity-aligned.
    """
    s = len(lasso.prefix)
    n = len(lasso.cycle)
    span = n if (parity is None or n % 2 == 0) else 2 * n
    vals = []
    for m in range(span):
        t = s + m
        if parity is not None and t % 2 != parity:
            continue
        vals.append(lasso.cycle.pairs[m % n][coord])
    return tuple(vals)


def cycle_pairs(lasso: LassoPlay) -> tuple[tuple[int, int], ...]:
    """The pairs visited infinitely often, one full period's worth."""
    return lasso.cycle.pairs


def _window_start(h: PublicHistory) -> int:
    if len(h) == 0:
        raise ValueError("truncated evaluation needs a nonempty history")
    return len(h) // 2


class PayoffEvaluator:
    """Interface: bounded, tail-measurable payoff on plays of one game family.

    ``bounds`` is a hard (min, max) range for every value either method can
    return; payoffs are deliberately NOT rescaled to [0, 1], the range is
    carried explicitly instead.
    """

    kind: str = "abstract"
    bounds: tuple[float, float] = (0.0, 1.0)
    shift_step: int = 1

    def eval_lasso(self, spec: GameSpec, k: int, lasso: LassoPlay) -> float:
        raise NotImplementedError

    def eval_truncated(self, spec: GameSpec, k: int, h: PublicHistory) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class Example1Payoff(PayoffEvaluator):
    """Two-state alternating game with payoffs decided by "infinitely often" events.

    With ``ell`` the designated action: if player II plays ell infinitely often
    the payoff is (-1, 2) by state; otherwise if player I plays ell infinitely
    often it is (-2, 1); otherwise 0.  State index 0 is the state where the
    informed player is punished, matching the canonical spec's state order.
    """

    ell_i: int = 0
    ell_j: int = 0
    kind: str = field(default="example1", init=False)
    bounds: tuple[float, float] = field(default=(-2.0, 2.0), init=False)
    shift_step: int = field(default=2, init=False)

    def _value(self, k: int, ii_ell_io: bool, i_ell_io: bool) -> float:
        if ii_ell_io:
            return -1.0 if k == 0 else 2.0
        if i_ell_io:
            return -2.0 if k == 0 else 1.0
        return 0.0

    def eval_lasso(self, spec: GameSpec, k: int, lasso: LassoPlay) -> float:
        ii_moves = periodic_track(lasso, parity=1, coord=1)
        i_moves = periodic_track(lasso, parity=0, coord=0)
        return self._value(k, self.ell_j in ii_moves, self.ell_i in i_moves)

    def eval_truncated(self, spec: GameSpec, k: int, h: PublicHistory) -> float:
        t0 = _window_start(h)
        ii_ell = any(
            h.pairs[t][1] == self.ell_j for t in range(t0, len(h)) if t % 2 == 1
        )
        i_ell = any(
            h.pairs[t][0] == self.ell_i for t in range(t0, len(h)) if t % 2 == 0
        )
        return self._value(k, ii_ell, i_ell)


@dataclass(frozen=True)
class Example2Payoff(PayoffEvaluator):
    """Density variant of :class:`Example1Payoff`.

    The "infinitely often" events are replaced by upper-density conditions on
    the players' designated-action frequencies: payoff (-1, 2) by state when
    player II's ell-density exceeds the threshold, else (-2, 1) when player I's
    does, else 0.
    """

    ell_i: int = 0
    ell_j: int = 0
    threshold: float = 0.1
    kind: str = field(default="example2", init=False)
    bounds: tuple[float, float] = field(default=(-2.0, 2.0), init=False)
    shift_step: int = field(default=2, init=False)

    def _value(self, k: int, d2: float, d1: float) -> float:
        if d2 > self.threshold:
            return -1.0 if k == 0 else 2.0
        if d1 > self.threshold:
            return -2.0 if k == 0 else 1.0
        return 0.0

    @staticmethod
    def _density(track: Sequence[int], ell: int) -> float:
        if len(track) == 0:
            return 0.0
        return sum(1 for v in track if v == ell) / len(track)

    def eval_lasso(self, spec: GameSpec, k: int, lasso: LassoPlay) -> float:
        d2 = self._density(periodic_track(lasso, parity=1, coord=1), self.ell_j)
        d1 = self._density(periodic_track(lasso, parity=0, coord=0), self.ell_i)
        return self._value(k, d2, d1)

    def eval_truncated(self, spec: GameSpec, k: int, h: PublicHistory) -> float:
        t0 = _window_start(h)
        ii_track = [h.pairs[t][1] for t in range(t0, len(h)) if t % 2 == 1]
        i_track = [h.pairs[t][0] for t in range(t0, len(h)) if t % 2 == 0]
        return self._value(
            k, self._density(ii_track, self.ell_j), self._density(i_track, self.ell_i)
        )


@dataclass(frozen=True)
class LimsupAverage(PayoffEvaluator):
    """Limsup of running average stage payoffs, one matrix per state."""

    matrices: tuple[tuple[tuple[float, ...], ...], ...]
    kind: str = field(default="limsup_average", init=False)
    shift_step: int = field(default=1, init=False)
    bounds: tuple[float, float] = field(default=(0.0, 0.0))

    def __post_init__(self) -> None:
        entries = [v for g in self.matrices for row in g for v in row]
        if not entries:
            raise ValueError("limsup average needs at least one matrix entry")
        object.__setattr__(self, "bounds", (min(entries), max(entries)))

    def eval_lasso(self, spec: GameSpec, k: int, lasso: LassoPlay) -> float:
        g = self.matrices[k]
        cyc = lasso.cycle.pairs
        return sum(g[i][j] for i, j in cyc) / len(cyc)

    def eval_truncated(self, spec: GameSpec, k: int, h: PublicHistory) -> float:
        if len(h) == 0:
            raise ValueError("truncated evaluation needs a nonempty history")
        g = self.matrices[k]
        return sum(g[i][j] for i, j in h.pairs) / len(h)


@dataclass(frozen=True)
class BuchiObjective(PayoffEvaluator):
    """Payoff 1 when some target pair occurs infinitely often, else 0."""

    targets: frozenset[tuple[int, int]]
    kind: str = field(default="buchi", init=False)
    bounds: tuple[float, float] = field(default=(0.0, 1.0), init=False)
    shift_step: int = field(default=1, init=False)

    def eval_lasso(self, spec: GameSpec, k: int, lasso: LassoPlay) -> float:
        return 1.0 if any(p in self.targets for p in cycle_pairs(lasso)) else 0.0

    def eval_truncated(self, spec: GameSpec, k: int, h: PublicHistory) -> float:
        t0 = _window_start(h)
        return 1.0 if any(p in self.targets for p in h.pairs[t0:]) else 0.0


@dataclass(frozen=True)
class CoBuchiObjective(PayoffEvaluator):
    """Payoff 1 when no target pair occurs infinitely often, else 0."""

    targets: frozenset[tuple[int, int]]
    kind: str = field(default="cobuchi", init=False)
    bounds: tuple[float, float] = field(default=(0.0, 1.0), init=False)
    shift_step: int = field(default=1, init=False)

    def eval_lasso(self, spec: GameSpec, k: int, lasso: LassoPlay) -> float:
        return 0.0 if any(p in self.targets for p in cycle_pairs(lasso)) else 1.0

    def eval_truncated(self, spec: GameSpec, k: int, h: PublicHistory) -> float:
        t0 = _window_start(h)
        return 0.0 if any(p in self.targets for p in h.pairs[t0:]) else 1.0


@dataclass(frozen=True)
class ParityObjective(PayoffEvaluator):
    """Payoff 1 when the least priority occurring infinitely often is even."""

    priority: Mapping[tuple[int, int], int]
    kind: str = field(default="parity", init=False)
    bounds: tuple[float, float] = field(default=(0.0, 1.0), init=False)
    shift_step: int = field(default=1, init=False)

    def _least(self, pairs: Sequence[tuple[int, int]]) -> int:
        try:
            return min(self.priority[p] for p in pairs)
        except KeyError as exc:
            raise ValueError("priority map is missing pair %r" % (exc.args[0],))

    def eval_lasso(self, spec: GameSpec, k: int, lasso: LassoPlay) -> float:
        return 1.0 if self._least(cycle_pairs(lasso)) % 2 == 0 else 0.0

    def eval_truncated(self, spec: GameSpec, k: int, h: PublicHistory) -> float:
        t0 = _window_start(h)
        return 1.0 if self._least(h.pairs[t0:]) % 2 == 0 else 0.0


@dataclass(frozen=True)
class CustomPayoff(PayoffEvaluator):
    """User-supplied payoff; exact lasso evaluation only when a rule is given."""

    truncated_fn: Callable[[GameSpec, int, PublicHistory], float]
    lasso_fn: Callable[[GameSpec, int, LassoPlay], float] | None = None
    bounds: tuple[float, float] = (0.0, 1.0)
    kind: str = field(default="custom", init=False)
    shift_step: int = field(default=1, init=False)

    def eval_lasso(self, spec: GameSpec, k: int, lasso: LassoPlay) -> float:
        if self.lasso_fn is None:
            raise NotLassoEvaluable("custom payoff has no exact lasso rule")
        return self.lasso_fn(spec, k, lasso)

    def eval_truncated(self, spec: GameSpec, k: int, h: PublicHistory) -> float:
        return self.truncated_fn(spec, k, h)


# ---------------------------------------------------------------------------
# Canned games


def example1_game(p: float = 0.5) -> tuple[GameSpec, Example1Payoff]:
    """Canonical two-state alternating game; ``p`` is the prior of state k1."""
    spec = GameSpec(
        states=("k1", "k2"),
        actions_i=("l", "r", "-"),
        actions_j=("l", "r", "-"),
        prior=Belief((float(p), 1.0 - float(p))),
        timing=Timing.ALTERNATING,
        dummy_i=2,
        dummy_j=2,
    )
    return spec, Example1Payoff(ell_i=0, ell_j=0)


def example2_game(p: float = 0.5) -> tuple[GameSpec, Example2Payoff]:
    """Density variant on the same board as :func:`example1_game`."""
    spec, _ = example1_game(p)
    return spec, Example2Payoff(ell_i=0, ell_j=0, threshold=0.1)


def average_game(
    matrices: Sequence[Sequence[Sequence[float]]], prior: Sequence[float]
) -> tuple[GameSpec, LimsupAverage]:
    """Simultaneous-move game with limsup-average payoffs, one matrix per state."""
    mats = tuple(tuple(tuple(float(v) for v in row) for row in g) for g in matrices)
    if len(mats) != len(prior):
        raise ValueError("need one matrix per state")
    n_i = len(mats[0])
    n_j = len(mats[0][0])
    for g in mats:
        if len(g) != n_i or any(len(row) != n_j for row in g):
            raise ValueError("matrices must share one shape")
    spec = GameSpec(
        states=tuple("k%d" % (k + 1) for k in range(len(mats))),
        actions_i=tuple("i%d" % a for a in range(n_i)),
        actions_j=tuple("j%d" % a for a in range(n_j)),
        prior=Belief(tuple(float(v) for v in prior)),
        timing=Timing.SIMULTANEOUS,
    )
    return spec, LimsupAverage(matrices=mats)


def evaluator_from_json(d: Mapping, spec: GameSpec) -> PayoffEvaluator:
    """Build an evaluator from the ``payoff`` field of a JSON game description."""
    if not isinstance(d, Mapping) or "kind" not in d:
        raise ValueError("payoff descriptor must be an object with a kind field")
    kind = d["kind"]
    if kind in ("example1", "example2"):
        try:
            ell_i = spec.i_index(str(d.get("ell_i", "l")))
            ell_j = spec.j_index(str(d.get("ell_j", "l")))
        except ValueError as exc:
            raise ValueError("payoff references unknown action label: %s" % exc)
        if kind == "example1":
            return Example1Payoff(ell_i=ell_i, ell_j=ell_j)
        return Example2Payoff(
            ell_i=ell_i, ell_j=ell_j, threshold=float(d.get("threshold", 0.1))
        )
    if kind == "limsup_average":
        raw = d.get("matrices")
        if not isinstance(raw, Mapping):
            raise ValueError("limsup_average payoff needs a matrices object")
        try:
            mats = tuple(
                tuple(tuple(float(v) for v in row) for row in raw[s])
                for s in spec.states
            )
        except KeyError as exc:
            raise ValueError("matrices missing state %s" % exc)
        return LimsupAverage(matrices=mats)
    if kind in ("buchi", "cobuchi"):
        pairs = frozenset(
            (spec.i_index(str(il)), spec.j_index(str(jl)))
            for il, jl in d.get("targets", [])
        )
        if kind == "buchi":
            return BuchiObjective(targets=pairs)
        return CoBuchiObjective(targets=pairs)
    if kind == "parity":
        prio = {
            (spec.i_index(str(il)), spec.j_index(str(jl))): int(rank)
            for il, jl, rank in d.get("priorities", [])
        }
        return ParityObjective(priority=prio)
    raise ValueError("unknown payoff kind %r" % (kind,))


# ---------------------------------------------------------------------------
# Tail-measurability checks


def random_valid_pair(
    spec: GameSpec, t: int, rng: random.Random
) -> tuple[int, int]:
    """Uniform valid pair at global stage ``t`` (dummies forced off turn)."""
    if spec.i_owns(t):
        i = rng.choice(spec.real_actions_i()) if spec.timing is Timing.ALTERNATING else rng.randrange(spec.n_i)
    else:
        i = spec.dummy_i
    if spec.j_owns(t):
        j = rng.choice(spec.real_actions_j()) if spec.timing is Timing.ALTERNATING else rng.randrange(spec.n_j)
    else:
        j = spec.dummy_j
    return (i, j)


def random_history(
    spec: GameSpec, rng: random.Random, length: int, start_stage: int = 0
) -> PublicHistory:
    return PublicHistory(
        tuple(random_valid_pair(spec, start_stage + t, rng) for t in range(length))
    )


def random_lasso(
    spec: GameSpec,
    rng: random.Random,
    max_prefix: int = 6,
    max_cycle: int = 6,
) -> LassoPlay:
    """Random valid lasso; alternating games get even cycle lengths so the
    unrolled play keeps its dummies in place."""
    prefix_len = rng.randrange(0, max_prefix + 1)
    if spec.timing is Timing.ALTERNATING:
        cycle_len = 2 * rng.randrange(1, max(2, max_cycle // 2) + 1)
    else:
        cycle_len = rng.randrange(1, max_cycle + 1)
    prefix = random_history(spec, rng, prefix_len)
    cycle = random_history(spec, rng, cycle_len, start_stage=prefix_len)
    return LassoPlay(prefix=prefix, cycle=cycle)


@dataclass(frozen=True)
class TailReport:
    """Result of a tail-measurability or shift-invariance sweep."""

    checked: int
    violations: tuple[tuple[int, int, float, float], ...]

    @property
    def ok(self) -> bool:
        return len(self.violations) == 0


def check_tail_measurable(
    spec: GameSpec,
    evaluator: PayoffEvaluator,
    n_samples: int = 100,
    n_perturbations: int = 10,
    seed: int = 0,
) -> TailReport:
    """Rewrite lasso prefixes in place (same length) and demand equal payoffs.

    Equality is exact: lasso evaluation only reads the cycle (plus prefix
    length), so any difference is a genuine tail-measurability violation.
    """
    rng = random.Random(seed)
    violations = []
    checked = 0
    for s in range(n_samples):
        lasso = random_lasso(spec, rng)
        k = rng.randrange(spec.n_states)
        base = evaluator.eval_lasso(spec, k, lasso)
        for q in range(n_perturbations):
            other = LassoPlay(
                prefix=random_history(spec, rng, len(lasso.prefix)),
                cycle=lasso.cycle,
            )
            got = evaluator.eval_lasso(spec, k, other)
            checked += 1
            if got != base:
                violations.append((s, q, base, got))
    return TailReport(checked=checked, violations=tuple(violations))


def check_shift_invariant(
    spec: GameSpec,
    evaluator: PayoffEvaluator,
    n_samples: int = 100,
    n_perturbations: int = 10,
    seed: int = 0,
    max_shift_rounds: int = 4,
) -> TailReport:
    """Change the prefix LENGTH (whole rounds) and demand equal payoffs.

    The round size is ``evaluator.shift_step`` (2 for the alternating-move
    families, where an odd shift would swap which player each stage belongs
    to), and at least 2 under alternating timing so shifted lassos stay valid.
    """
    step = evaluator.shift_step
    if spec.timing is Timing.ALTERNATING:
        step = max(step, 2)
    rng = random.Random(seed)
    violations = []
    checked = 0
    for s in range(n_samples):
        lasso = random_lasso(spec, rng)
        k = rng.randrange(spec.n_states)
        base = evaluator.eval_lasso(spec, k, lasso)
        for q in range(n_perturbations):
            delta = step * rng.randint(-max_shift_rounds, max_shift_rounds)
            new_len = len(lasso.prefix) + delta
            if new_len < 0:
                # Clamping must keep the length in the same residue class,
                # otherwise the "shift" would reassign stages between players.
                new_len = len(lasso.prefix) % step
            other = LassoPlay(
                prefix=random_history(spec, rng, new_len),
                cycle=lasso.cycle,
            )
            got = evaluator.eval_lasso(spec, k, other)
            checked += 1
            if got != base:
                violations.append((s, q, base, got))
    return TailReport(checked=checked, violations=tuple(violations))
