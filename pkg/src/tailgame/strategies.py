"""Behavior strategies for both players, with incremental cursors.

A strategy is an immutable recipe; per-play evaluation state lives in a
cursor.  Cursors expose three things: the current mixed action (``dist``), an
``observe`` hook fed every realized pair, and an optional hashable ``token``.
The token contract powers exact early termination of episodes: whenever a
cursor returns a token, its future behavior is a deterministic function of
(token, future observations), so once play is action-deterministic and the
joint token of both cursors repeats, the play has entered a cycle and tail
payoffs can be evaluated exactly on the lasso.  Cursors that cannot promise
this return ``None`` and simply opt out of early termination.

Included strategies:

* stationary and finite-memory machine strategies for either player;
* splitting strategies for the informed player: draw a signal whose posterior
  profile is a chosen decomposition of the prior, transmit it through the
  first few own moves, then play a non-revealing continuation (the posterior
  after the transmission equals the chosen decomposition point exactly);
* the block best response for the uninformed player against a known informed
  strategy: track the posterior, replay a non-revealing oracle response per
  block, re-query on block changes, and on hitting the simplex boundary drop
  the rare states and recurse on the restricted game;
* the punishment construction for the alternating examples: play safe until a
  chosen stage, then classify whether the opponent's continuation keeps
  playing the designated action and pick the continuation that punishes it.

Strategies consulted while off turn in alternating games may return anything;
the simulation engine forces the dummy action and the posterior skips those
stages.
"""

from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

from .beliefs import (
    BlockEvent,
    BlockTracker,
    block_step,
    default_delta,
    near_boundary,
    restrict_belief,
    support_above,
)
from .model import (
    Belief,
    EMPTY_HISTORY,
    GameSpec,
    LassoPlay,
    PublicHistory,
    Timing,
)
from .payoffs import periodic_track
from .solvers import matrix_value


def point_dist(n: int, idx: int) -> tuple[float, ...]:
    return tuple(1.0 if a == idx else 0.0 for a in range(n))


def uniform_over(n: int, support: Sequence[int]) -> tuple[float, ...]:
    w = 1.0 / len(support)
    sup = set(support)
    return tuple(w if a in sup else 0.0 for a in range(n))


def det_action(dist: Sequence[float]) -> int | None:
    """Index of the sure action, or None when the dist is genuinely mixed.

    Strategies built by this package encode pure actions with an exact 1.0
    entry, so the equality test is reliable.
    """
    for idx, w in enumerate(dist):
        if w == 1.0:
            return idx
    return None


def sample_action(dist: Sequence[float], u: float) -> int:
    """Inverse-CDF sample given a uniform draw ``u`` in [0, 1)."""
    acc = 0.0
    last_pos = 0
    for idx, w in enumerate(dist):
        if w > 0.0:
            last_pos = idx
            acc += w
            if u < acc:
                return idx
    return last_pos


# ---------------------------------------------------------------------------
# Base classes


class UninformedCursor:
    def dist(self) -> tuple[float, ...]:
        raise NotImplementedError

    def observe(self, pair: tuple[int, int]) -> None:  # noqa: B027
        pass

    def token(self):
        return None


class InformedCursor(UninformedCursor):
    pass


class UninformedStrategy:
    """Player II strategy; subclasses implement :meth:`cursor`."""

    spec: GameSpec

    def cursor(self) -> UninformedCursor:
        raise NotImplementedError

    def dist_at(self, h: PublicHistory) -> tuple[float, ...]:
        c = self.cursor()
        for pair in h.pairs:
            c.observe(pair)
        return c.dist()


class InformedStrategy:
    """Player I strategy; behavior may depend on the revealed state."""

    spec: GameSpec

    def cursor(self, k: int) -> InformedCursor:
        raise NotImplementedError

    def dist_at(self, k: int, h: PublicHistory) -> tuple[float, ...]:
        c = self.cursor(k)
        for pair in h.pairs:
            c.observe(pair)
        return c.dist()


class _FnUCursor(UninformedCursor):
    def __init__(self, fn: Callable[[PublicHistory], tuple[float, ...]]) -> None:
        self._fn = fn
        self._buf: list[tuple[int, int]] = []

    def dist(self) -> tuple[float, ...]:
        return self._fn(PublicHistory(tuple(self._buf)))

    def observe(self, pair: tuple[int, int]) -> None:
        self._buf.append(pair)


class FunctionUninformed(UninformedStrategy):
    """Wrap a pure ``history -> dist`` function (no token, no early exit)."""

    def __init__(self, spec: GameSpec, fn: Callable[[PublicHistory], tuple[float, ...]]):
        self.spec = spec
        self._fn = fn

    def cursor(self) -> UninformedCursor:
        return _FnUCursor(self._fn)


class FunctionInformed(InformedStrategy):
    def __init__(
        self, spec: GameSpec, fn: Callable[[int, PublicHistory], tuple[float, ...]]
    ):
        self.spec = spec
        self._fn = fn

    def cursor(self, k: int) -> InformedCursor:
        return _FnUCursor(lambda h: self._fn(k, h))


class _ConstCursor(InformedCursor):
    __slots__ = ("_dist",)

    def __init__(self, dist: tuple[float, ...]) -> None:
        self._dist = dist

    def dist(self) -> tuple[float, ...]:
        return self._dist

    def token(self):
        return ()


class StationaryUninformed(UninformedStrategy):
    def __init__(self, spec: GameSpec, dist: Sequence[float]) -> None:
        if len(dist) != spec.n_j:
            raise ValueError("dist length must match player II's action count")
        self.spec = spec
        self.dist_tuple = tuple(float(v) for v in dist)

    def cursor(self) -> UninformedCursor:
        return _ConstCursor(self.dist_tuple)


class StationaryInformed(InformedStrategy):
    """One fixed mixed action per state (state-independent when all equal)."""

    def __init__(
        self, spec: GameSpec, dists: Sequence[Sequence[float]]
    ) -> None:
        if len(dists) != spec.n_states:
            raise ValueError("need one dist per state")
        for d in dists:
            if len(d) != spec.n_i:
                raise ValueError("dist length must match player I's action count")
        self.spec = spec
        self.dists = tuple(tuple(float(v) for v in d) for d in dists)

    def cursor(self, k: int) -> InformedCursor:
        return _ConstCursor(self.dists[k])


def stationary_uninformed(spec: GameSpec, dist: Sequence[float]) -> StationaryUninformed:
    return StationaryUninformed(spec, dist)


def stationary_informed(
    spec: GameSpec, dists: Sequence[Sequence[float]] | Sequence[float]
) -> StationaryInformed:
    """Accepts either one dist shared by all states or one dist per state."""
    if dists and isinstance(dists[0], (int, float)):
        shared = tuple(float(v) for v in dists)  # type: ignore[arg-type]
        return StationaryInformed(spec, tuple(shared for _ in range(spec.n_states)))
    return StationaryInformed(spec, dists)  # type: ignore[arg-type]


def pure_uninformed(spec: GameSpec, action: int | str) -> StationaryUninformed:
    idx = spec.j_index(action) if isinstance(action, str) else action
    return StationaryUninformed(spec, point_dist(spec.n_j, idx))


def pure_informed(
    spec: GameSpec, actions: int | str | Sequence[int | str]
) -> StationaryInformed:
    """Pure stationary strategy; a sequence gives one action per state."""
    if isinstance(actions, (int, str)):
        actions = [actions] * spec.n_states
    dists = []
    for a in actions:
        idx = spec.i_index(a) if isinstance(a, str) else a
        dists.append(point_dist(spec.n_i, idx))
    return StationaryInformed(spec, dists)


def nonrevealing_uniform(spec: GameSpec) -> StationaryInformed:
    """State-independent uniform play over the real actions."""
    d = uniform_over(spec.n_i, spec.real_actions_i())
    return StationaryInformed(spec, tuple(d for _ in range(spec.n_states)))


def revealing_informed(spec: GameSpec) -> StationaryInformed:
    """Fully revealing stationary strategy: distinct pure action per state."""
    real = spec.real_actions_i()
    if len(real) < spec.n_states:
        raise ValueError("not enough actions to reveal the state")
    return pure_informed(spec, [real[k] for k in range(spec.n_states)])


# ---------------------------------------------------------------------------
# Finite-memory machines


@dataclass(frozen=True)
class Machine:
    """Deterministic-transition machine over observed pairs with mixed outputs.

    ``transitions[state][i * n_j + j]`` is the next memory state after
    observing pair ``(i, j)``; ``outputs[state]`` is the mixed action used
    whenever the owner moves while in ``state``.
    """

    start: int
    transitions: tuple[tuple[int, ...], ...]
    outputs: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        n = len(self.transitions)
        if len(self.outputs) != n:
            raise ValueError("one output dist per memory state required")
        if not 0 <= self.start < n:
            raise ValueError("start state out of range")
        for row in self.transitions:
            if any(not 0 <= s < n for s in row):
                raise ValueError("transition target out of range")


class _MachineCursor(UninformedCursor):
    __slots__ = ("_m", "_state", "_nj")

    def __init__(self, machine: Machine, n_j: int) -> None:
        self._m = machine
        self._state = machine.start
        self._nj = n_j

    def dist(self) -> tuple[float, ...]:
        return self._m.outputs[self._state]

    def observe(self, pair: tuple[int, int]) -> None:
        self._state = self._m.transitions[self._state][pair[0] * self._nj + pair[1]]

    def token(self):
        return self._state


class MachineUninformed(UninformedStrategy):
    def __init__(self, spec: GameSpec, machine: Machine) -> None:
        for d in machine.outputs:
            if len(d) != spec.n_j:
                raise ValueError("machine outputs must match player II's actions")
        for row in machine.transitions:
            if len(row) != spec.n_i * spec.n_j:
                raise ValueError("machine transitions must cover all pairs")
        self.spec = spec
        self.machine = machine

    def cursor(self) -> UninformedCursor:
        return _MachineCursor(self.machine, self.spec.n_j)


class MachineInformed(InformedStrategy):
    def __init__(self, spec: GameSpec, machines: Sequence[Machine]) -> None:
        if len(machines) != spec.n_states:
            raise ValueError("need one machine per state")
        self.spec = spec
        self.machines = tuple(machines)

    def cursor(self, k: int) -> InformedCursor:
        return _MachineCursor(self.machines[k], self.spec.n_j)


class _ScriptCursor(UninformedCursor):
    __slots__ = ("_s", "_t", "_moves")

    def __init__(self, strategy: "MoveScriptUninformed") -> None:
        self._s = strategy
        self._t = 0
        self._moves = 0

    def dist(self) -> tuple[float, ...]:
        s = self._s
        if not s.spec.j_owns(self._t):
            return s.off_turn_dist
        return point_dist(s.spec.n_j, s.move_at(self._moves))

    def observe(self, pair: tuple[int, int]) -> None:
        if self._s.spec.j_owns(self._t):
            self._moves += 1
        self._t += 1

    def token(self):
        s = self._s
        if self._moves < len(s.head):
            return self._moves
        return len(s.head) + (self._moves - len(s.head)) % len(s.cycle)


class MoveScriptUninformed(UninformedStrategy):
    """Player II plays a scripted move sequence over its own turns.

    ``head`` is played once on the first own moves, then ``cycle`` repeats
    forever.  Useful for punishment-panel members: always-x is an empty head
    with a one-move cycle, "x once then y" is head (x,) with cycle (y,).
    """

    def __init__(
        self,
        spec: GameSpec,
        cycle: Sequence[int | str],
        head: Sequence[int | str] = (),
    ) -> None:
        if len(cycle) == 0:
            raise ValueError("cycle must be nonempty")
        self.spec = spec
        conv = lambda a: spec.j_index(a) if isinstance(a, str) else int(a)
        self.head = tuple(conv(a) for a in head)
        self.cycle = tuple(conv(a) for a in cycle)
        self.off_turn_dist = point_dist(
            spec.n_j, spec.dummy_j if spec.dummy_j is not None else 0
        )

    def move_at(self, move_idx: int) -> int:
        if move_idx < len(self.head):
            return self.head[move_idx]
        return self.cycle[(move_idx - len(self.head)) % len(self.cycle)]

    def cursor(self) -> UninformedCursor:
        return _ScriptCursor(self)


def random_machine_uninformed(
    spec: GameSpec, n_memory: int, seed: int, deterministic: bool = True
) -> MachineUninformed:
    """Seeded random machine over player II's real actions.

    With ``deterministic`` (the default) every output is a pure real action,
    so pairings against deterministic opponents stay exactly evaluable.
    """
    rng = random.Random(seed)
    real = spec.real_actions_j()
    n_pairs = spec.n_i * spec.n_j
    transitions = tuple(
        tuple(rng.randrange(n_memory) for _ in range(n_pairs))
        for _ in range(n_memory)
    )
    outputs = []
    for _ in range(n_memory):
        if deterministic:
            outputs.append(point_dist(spec.n_j, rng.choice(real)))
        else:
            weights = [rng.random() for _ in real]
            total = sum(weights)
            d = [0.0] * spec.n_j
            for a, w in zip(real, weights):
                d[a] = w / total
            outputs.append(tuple(d))
    return MachineUninformed(
        spec, Machine(start=0, transitions=transitions, outputs=tuple(outputs))
    )


# ---------------------------------------------------------------------------
# Non-revealing oracles


@dataclass(frozen=True)
class NrOracle:
    """Solution provider for non-revealing subgames of one game family.

    ``value`` maps a belief to the non-revealing value; ``respond`` returns a
    subgame-optimal uninformed strategy at a belief (the onset history is
    available to oracles that want it; the built-in ones ignore it and return
    stationary strategies).  ``restrict`` produces the oracle of the game
    restricted to a state subset, which the block response relies on when the
    belief reaches the boundary; indices are into the oracle's current state
    order.  ``respond`` must be deterministic per belief — responses here are
    memoized, which also keeps repeated queries cheap.
    """

    n_states: int
    value: Callable[[Belief], float]
    respond: Callable[[Belief, PublicHistory], UninformedStrategy]
    restrict: Callable[[tuple[int, ...]], "NrOracle"]


def _memoized_respond(
    fn: Callable[[Belief], UninformedStrategy]
) -> Callable[[Belief, PublicHistory], UninformedStrategy]:
    cache: dict[tuple[float, ...], UninformedStrategy] = {}

    def respond(belief: Belief, onset: PublicHistory = EMPTY_HISTORY):
        key = belief.probs
        hit = cache.get(key)
        if hit is None:
            hit = cache[key] = fn(belief)
        return hit

    return respond


def _example_threshold_oracle(spec: GameSpec, value_fn) -> NrOracle:
    ell = spec.j_index("l") if "l" in spec.actions_j else spec.real_actions_j()[0]
    other = next(a for a in spec.real_actions_j() if a != ell)

    def full_respond(belief: Belief) -> UninformedStrategy:
        p = belief[0]
        return pure_uninformed(spec, other if p <= 2.0 / 3.0 else ell)

    def restrict(keep: tuple[int, ...]) -> NrOracle:
        keep = tuple(keep)
        if keep == (0, 1):
            return full
        if len(keep) != 1:
            raise ValueError("invalid restriction %r" % (keep,))
        k = keep[0]
        action = ell if k == 0 else other
        vertex = value_fn(1.0 if k == 0 else 0.0)
        strat = pure_uninformed(spec, action)
        return NrOracle(
            n_states=1,
            value=lambda b: vertex,
            respond=_memoized_respond(lambda b: strat),
            restrict=lambda kk: (_ for _ in ()).throw(
                ValueError("cannot restrict a single-state oracle")
            ),
        )

    full = NrOracle(
        n_states=2,
        value=lambda b: value_fn(b[0]),
        respond=_memoized_respond(full_respond),
        restrict=restrict,
    )
    return full


def example1_oracle(spec: GameSpec) -> NrOracle:
    """Closed-form oracle for the canonical alternating game.

    Player II's subgame-optimal stationary play: avoid the designated action
    while the first state's probability is at most 2/3, then commit to it.  On
    single-state restrictions II plays the complete-information optimum
    (commit in state one, avoid in state two), matching the value function's
    endpoints 1 and -1.
    """
    from .solvers import u_example1

    return _example_threshold_oracle(spec, u_example1)


def example2_oracle(spec: GameSpec) -> NrOracle:
    """Oracle for the density variant; same optima and value as example 1.

    A density bounded away from the threshold and an "infinitely often" event
    are controlled by the same stationary commitments, so the non-revealing
    values coincide.
    """
    from .solvers import u_example1

    return _example_threshold_oracle(spec, u_example1)


def average_oracle(
    spec: GameSpec, matrices: Sequence[Sequence[Sequence[float]]]
) -> NrOracle:
    """LP-backed oracle for limsup-average payoffs."""
    import numpy as np

    mats = tuple(np.asarray(g, dtype=float) for g in matrices)
    if len(mats) != spec.n_states:
        raise ValueError("need one matrix per state")
    value_cache: dict[tuple[float, ...], float] = {}

    def solve(belief: Belief):
        avg = sum(belief[k] * mats[k] for k in range(len(mats)))
        return matrix_value(avg)

    def value(belief: Belief) -> float:
        key = belief.probs
        if key not in value_cache:
            value_cache[key] = solve(belief).value
        return value_cache[key]

    def respond_fn(belief: Belief) -> UninformedStrategy:
        sol = solve(belief)
        value_cache.setdefault(belief.probs, sol.value)
        full = [0.0] * spec.n_j
        for a, w in zip(range(len(sol.y)), sol.y):
            full[a] = w
        return StationaryUninformed(spec, tuple(full))

    def restrict(keep: tuple[int, ...]) -> NrOracle:
        keep = tuple(keep)
        if any(not 0 <= k < len(mats) for k in keep) or len(keep) == 0:
            raise ValueError("invalid restriction %r" % (keep,))
        sub = GameSpec(
            states=tuple(spec.states[k] for k in keep),
            actions_i=spec.actions_i,
            actions_j=spec.actions_j,
            prior=Belief(tuple(1.0 / len(keep) for _ in keep)),
            timing=spec.timing,
            dummy_i=spec.dummy_i,
            dummy_j=spec.dummy_j,
        )
        return average_oracle(sub, tuple(mats[k] for k in keep))

    return NrOracle(
        n_states=spec.n_states,
        value=value,
        respond=_memoized_respond(respond_fn),
        restrict=restrict,
    )


def example1_nr_informed(spec: GameSpec) -> Callable[[Belief], InformedStrategy]:
    """Player I's subgame-optimal stationary play per belief (both examples)."""
    ell = spec.i_index("l") if "l" in spec.actions_i else spec.real_actions_i()[0]
    other = next(a for a in spec.real_actions_i() if a != ell)

    def factory(belief: Belief) -> InformedStrategy:
        p = belief[0]
        return pure_informed(spec, ell if p <= 1.0 / 3.0 else other)

    return factory


def average_nr_informed(
    spec: GameSpec, matrices: Sequence[Sequence[Sequence[float]]]
) -> Callable[[Belief], InformedStrategy]:
    import numpy as np

    mats = tuple(np.asarray(g, dtype=float) for g in matrices)

    def factory(belief: Belief) -> InformedStrategy:
        avg = sum(belief[k] * mats[k] for k in range(len(mats)))
        sol = matrix_value(avg)
        full = [0.0] * spec.n_i
        for a, w in zip(range(len(sol.x)), sol.x):
            full[a] = w
        return stationary_informed(spec, tuple(full))

    return factory


# ---------------------------------------------------------------------------
# Splitting strategies


class SplitInfeasibleError(ValueError):
    def __init__(self, message: str, residual: tuple[float, ...]):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class SplitPlan:
    """Decomposition of a prior into weighted posteriors with continuations.

    ``sum_s weights[s] * posteriors[s]`` must equal the prior the plan is used
    with; each continuation should be non-revealing (state-independent) so the
    posterior stays put after the signal is transmitted.
    """

    posteriors: tuple[Belief, ...]
    weights: tuple[float, ...]
    continuations: tuple[InformedStrategy, ...]

    @property
    def m(self) -> int:
        return len(self.posteriors)

    def __post_init__(self) -> None:
        if not (len(self.posteriors) == len(self.weights) == len(self.continuations)):
            raise ValueError("plan fields must have equal length")
        if len(self.posteriors) == 0:
            raise ValueError("plan needs at least one signal")
        if any(w < 0.0 for w in self.weights):
            raise ValueError("negative signal weight")


def split_residual(p: Belief, plan: SplitPlan) -> tuple[float, ...]:
    """Coordinatewise error of ``sum_s w_s q_s - p`` (plus a weight-sum slot)."""
    n = len(p)
    mix = [0.0] * n
    for q, w in zip(plan.posteriors, plan.weights):
        for k in range(n):
            mix[k] += w * q[k]
    out = [mix[k] - p[k] for k in range(n)]
    out.append(sum(plan.weights) - 1.0)
    return tuple(out)


class _SplittingCursor(InformedCursor):
    def __init__(self, strategy: "SplittingStrategy", k: int) -> None:
        self._s = strategy
        self._k = k
        self._t = 0
        self._digits: list[int] = []
        self._buffer: list[tuple[int, int]] = []
        self._signal: int | None = None
        self._cont: InformedCursor | None = None
        self._off_codebook = False

    def dist(self) -> tuple[float, ...]:
        s = self._s
        if self._cont is not None:
            return self._cont.dist()
        if self._off_codebook:
            return uniform_over(s.spec.n_i, s.spec.real_actions_i())
        if not s.spec.i_owns(self._t):
            return s.off_turn_dist
        d = len(self._digits)
        weights = [0.0] * s.spec.n_i
        total = 0.0
        prefix = tuple(self._digits)
        for sig in range(s.plan.m):
            if s.codes[sig][:d] == prefix:
                w = s.signal_probs[self._k][sig]
                weights[s.codes[sig][d]] += w
                total += w
        if total <= 0.0:
            return uniform_over(s.spec.n_i, s.spec.real_actions_i())
        return tuple(w / total for w in weights)

    def observe(self, pair: tuple[int, int]) -> None:
        s = self._s
        if self._cont is not None:
            self._cont.observe(pair)
            self._t += 1
            return
        self._buffer.append(pair)
        if s.spec.i_owns(self._t) and len(self._digits) < s.enc_len:
            self._digits.append(pair[0])
            if len(self._digits) == s.enc_len:
                sig = s.decode.get(tuple(self._digits))
                if sig is None:
                    self._off_codebook = True
                else:
                    self._signal = sig
                    cont = s.plan.continuations[sig].cursor(self._k)
                    for past in self._buffer:
                        cont.observe(past)
                    self._cont = cont
                self._buffer = []
        self._t += 1

    def token(self):
        if self._cont is not None:
            sub = self._cont.token()
            if sub is None:
                return None
            return ("sig", self._signal, sub)
        if self._off_codebook:
            return ("off",)
        return ("enc", tuple(self._digits))


class SplittingStrategy(InformedStrategy):
    """Encode a drawn signal through the first own moves, then stop revealing.

    The signal lottery in state ``k`` has probabilities
    ``weights[s] * posteriors[s][k] / prior[k]``, so Bayes updating on the
    transmitted code moves the posterior exactly onto ``posteriors[s]``, and
    the signal's unconditional probability is exactly ``weights[s]``.
    """

    def __init__(self, spec: GameSpec, p: Belief, plan: SplitPlan) -> None:
        resid = split_residual(p, plan)
        if any(abs(r) > 1e-10 for r in resid):
            raise SplitInfeasibleError(
                "weighted posteriors do not average to the prior "
                "(residual %r)" % (resid,),
                resid,
            )
        real = spec.real_actions_i()
        if len(real) < 2 and plan.m > 1:
            raise ValueError("cannot encode signals with fewer than 2 actions")
        self.spec = spec
        self.p = p
        self.plan = plan
        base = len(real)
        enc_len = 0
        while base**enc_len < plan.m:
            enc_len += 1
        self.enc_len = enc_len
        codes = []
        for s in range(plan.m):
            digits = []
            v = s
            for _ in range(enc_len):
                digits.append(v % base)
                v //= base
            codes.append(tuple(real[d] for d in reversed(digits)))
        self.codes = tuple(codes)
        self.decode = {c: s for s, c in enumerate(self.codes)}
        probs = []
        for k in range(spec.n_states):
            pk = p[k]
            row = []
            for s in range(plan.m):
                if pk > 0.0:
                    row.append(plan.weights[s] * plan.posteriors[s][k] / pk)
                else:
                    row.append(plan.weights[s])
            probs.append(tuple(row))
        self.signal_probs = tuple(probs)
        self.off_turn_dist = point_dist(
            spec.n_i, spec.dummy_i if spec.dummy_i is not None else 0
        )

    def cursor(self, k: int) -> InformedCursor:
        return _SplittingCursor(self, k)


def make_splitting(
    spec: GameSpec, p: Belief, plan: SplitPlan
) -> InformedStrategy:
    """Build the splitting strategy; a one-signal plan is its continuation."""
    if plan.m == 1:
        resid = split_residual(p, plan)
        if any(abs(r) > 1e-10 for r in resid):
            raise SplitInfeasibleError(
                "single posterior differs from the prior (residual %r)" % (resid,),
                resid,
            )
        return plan.continuations[0]
    return SplittingStrategy(spec, p, plan)


def optimal_split_for_cav(
    spec: GameSpec,
    p: Belief,
    envelope,
    nr_informed: Callable[[Belief], InformedStrategy] | None = None,
) -> SplitPlan:
    """Read the concave envelope's supporting decomposition at ``p``.

    The returned weights and posteriors achieve the envelope's value as the
    weighted average of sampled values.  Continuations come from the
    ``nr_informed`` factory when given (subgame-optimal play per posterior),
    else default to state-independent uniform play, which is non-revealing but
    carries no guarantee.
    """
    if hasattr(envelope, "hull"):
        triples = envelope.split(p[0])
        posteriors = tuple(Belief((x, 1.0 - x)) for x, _, _ in triples)
    else:
        triples = envelope.split(p)
        posteriors = tuple(b for b, _, _ in triples)
    weights = tuple(w for _, w, _ in triples)
    factory = nr_informed if nr_informed is not None else (
        lambda q: nonrevealing_uniform(spec)
    )
    continuations = tuple(factory(q) for q in posteriors)
    return SplitPlan(
        posteriors=posteriors, weights=weights, continuations=continuations
    )


# ---------------------------------------------------------------------------
# Block best response


class _BlockCursor(UninformedCursor):
    """Active belief tracker + per-block oracle responses, with recursion."""

    def __init__(
        self,
        spec: GameSpec,
        sigma_cursors: list[InformedCursor],
        belief: Belief,
        epsilon: float,
        delta: float,
        oracle: NrOracle,
        depth: int,
        start_stage: int,
        events: list[tuple[int, BlockEvent]],
        oracle_queries: list[tuple[int, tuple[str, ...], tuple[float, ...]]],
    ) -> None:
        self.spec = spec
        self.sigma_cursors = sigma_cursors
        self.belief = belief
        self.epsilon = epsilon
        self.delta = delta
        self.oracle = oracle
        self.depth = depth
        self.start_stage = start_stage
        self.local_t = 0
        self.events = events
        self.oracle_queries = oracle_queries
        self.pairs: list[tuple[int, int]] = []
        self.child: _BlockCursor | None = None
        self.frozen = False
        self.tracker: BlockTracker | None = None
        self.response: UninformedCursor | None = None
        if near_boundary(belief, delta) and spec.n_states > 1:
            self._recurse()
        else:
            self.tracker = BlockTracker(
                epsilon=epsilon, delta=delta, start_belief=belief
            )
            self._query()

    def _query(self) -> None:
        onset = PublicHistory(tuple(self.pairs))
        self.oracle_queries.append(
            (self.start_stage + self.local_t, self.spec.states, self.belief.probs)
        )
        self.response = self.oracle.respond(self.belief, onset).cursor()

    def _recurse(self) -> None:
        gstage = self.start_stage + self.local_t
        self.events.append((gstage, BlockEvent.BOUNDARY))
        if self.depth <= 0:
            # Contract violated (depth should cover the state count); keep the
            # last response rather than failing the whole episode.
            self.frozen = True
            if self.response is None:
                self.tracker = None
                self._query()
            return
        keep = support_above(self.belief, self.delta)
        full = restrict_belief(self.belief, self.delta)
        child_belief = Belief(tuple(full[k] for k in keep))
        child_spec = self.spec.restrict(keep, child_belief)
        self.child = _BlockCursor(
            spec=child_spec,
            sigma_cursors=[self.sigma_cursors[k] for k in keep],
            belief=child_belief,
            epsilon=self.epsilon,
            delta=self.delta,
            oracle=self.oracle.restrict(keep),
            depth=self.depth - 1,
            start_stage=gstage,
            events=self.events,
            oracle_queries=self.oracle_queries,
        )

    def dist(self) -> tuple[float, ...]:
        if self.child is not None:
            return self.child.dist()
        return self.response.dist()

    def observe(self, pair: tuple[int, int]) -> None:
        if self.child is not None:
            self.child.observe(pair)
            return
        gstage = self.start_stage + self.local_t
        if self.spec.i_owns(gstage):
            i = pair[0]
            facs = [c.dist()[i] for c in self.sigma_cursors]
            lo, hi = min(facs), max(facs)
            if lo != hi:
                w = [wk * f for wk, f in zip(self.belief.probs, facs)]
                total = sum(w)
                if total > 0.0:
                    self.belief = Belief(tuple(wk / total for wk in w))
                # A zero-probability observation freezes the belief: the play
                # left sigma's support, so there is nothing to update with.
        for c in self.sigma_cursors:
            c.observe(pair)
        if self.response is not None:
            self.response.observe(pair)
        self.pairs.append(pair)
        self.local_t += 1
        if self.frozen:
            return
        ev = block_step(self.tracker, self.belief)
        if ev is BlockEvent.NEW_BLOCK:
            self.events.append((self.start_stage + self.local_t, ev))
            self._query()
        elif ev is BlockEvent.BOUNDARY:
            self._recurse()

    def token(self):
        if self.child is not None:
            sub = self.child.token()
            return None if sub is None else ("R", sub)
        rt = self.response.token()
        if rt is None:
            return None
        sts = []
        for c in self.sigma_cursors:
            t = c.token()
            if t is None:
                return None
            sts.append(t)
        start = self.tracker.start_belief.probs if self.tracker else ()
        return ("A", self.belief.probs, start, self.frozen, rt, tuple(sts))


class BlockResponseStrategy(UninformedStrategy):
    """Best response of the uninformed player to a known informed strategy.

    Tracks the posterior induced by the opponent's strategy, plays the
    oracle's non-revealing response for the current block, re-queries the
    oracle whenever the belief drifts into a new block, and on reaching the
    simplex boundary renormalizes off the rare states and recurses on the
    restricted game (the recursion depth falls with the state count).

    Cursors expose diagnostics: ``events`` (stage, block event) and
    ``oracle_queries`` (stage, state labels, belief) in global stage numbers.
    """

    def __init__(
        self,
        spec: GameSpec,
        sigma: InformedStrategy,
        p: Belief | None = None,
        epsilon: float = 0.05,
        oracle: NrOracle | None = None,
        depth: int | None = None,
        delta: float | None = None,
    ) -> None:
        if oracle is None:
            raise ValueError("block response needs a non-revealing oracle")
        self.spec = spec
        self.sigma = sigma
        self.p = p if p is not None else spec.prior
        self.epsilon = float(epsilon)
        self.delta = (
            float(delta)
            if delta is not None
            else default_delta(self.epsilon, spec.n_states)
        )
        self.oracle = oracle
        self.depth = depth if depth is not None else spec.n_states

    def cursor(self) -> "_BlockCursor":
        return _BlockCursor(
            spec=self.spec,
            sigma_cursors=[self.sigma.cursor(k) for k in range(self.spec.n_states)],
            belief=self.p,
            epsilon=self.epsilon,
            delta=self.delta,
            oracle=self.oracle,
            depth=self.depth,
            start_stage=0,
            events=[],
            oracle_queries=[],
        )


def make_block_response(
    spec: GameSpec,
    sigma: InformedStrategy,
    p: Belief | None = None,
    epsilon: float = 0.05,
    oracle: NrOracle | None = None,
    depth: int | None = None,
    delta: float | None = None,
) -> BlockResponseStrategy:
    return BlockResponseStrategy(spec, sigma, p, epsilon, oracle, depth, delta)


# ---------------------------------------------------------------------------
# Punishment construction for the alternating examples


def _stable_seed(*parts) -> int:
    digest = hashlib.sha256(repr(parts).encode()).digest()
    return int.from_bytes(digest[:8], "big")


class _ExploitSafeCursor(InformedCursor):
    """State-one branch: commit to the safe action forever."""

    __slots__ = ("_s", "_t")

    def __init__(self, strategy: "ExploitStrategy") -> None:
        self._s = strategy
        self._t = 0

    def dist(self) -> tuple[float, ...]:
        s = self._s
        if not s.spec.i_owns(self._t):
            return s.off_turn_dist
        return s.safe_dist

    def observe(self, pair: tuple[int, int]) -> None:
        self._t += 1

    def token(self):
        return ()


class _ExploitSwitchCursor(InformedCursor):
    """State-two branch: safe until the switch stage, then classify and commit."""

    __slots__ = ("_s", "_t", "_buf", "_verdict")

    def __init__(self, strategy: "ExploitStrategy") -> None:
        self._s = strategy
        self._t = 0
        self._buf: list[tuple[int, int]] = []
        self._verdict: bool | None = None

    def dist(self) -> tuple[float, ...]:
        s = self._s
        if not s.spec.i_owns(self._t):
            return s.off_turn_dist
        if self._t < s.switch_stage:
            return s.safe_dist
        if self._verdict is None:
            self._verdict = s.classify(tuple(self._buf))
        return s.safe_dist if self._verdict else s.ell_dist

    def observe(self, pair: tuple[int, int]) -> None:
        if self._t < self._s.switch_stage:
            self._buf.append(pair)
        self._t += 1

    def token(self):
        if self._t < self._s.switch_stage:
            return ("pre", self._s.switch_stage - self._t)
        if self._verdict is None:
            self._verdict = self._s.classify(tuple(self._buf))
        return ("post", self._verdict)


class ExploitStrategy(InformedStrategy):
    """Informed punishment of an uninformed strategy in the alternating games.

    In the first state always play the safe action.  In the second state play
    safe until ``switch_stage``, then test whether the opponent's continuation
    (when the informed player keeps playing safe) keeps choosing the
    designated action — "infinitely often" for the event variant, density
    above the threshold for the density variant — and keep playing safe when
    it does (its own choices already pay us), else commit to the designated
    action forever (the opponent has stopped, so the payoff is ours to claim).

    The test is exact when the opponent's cursor is deterministic with tokens:
    the continuation is cycle-detected and the tail condition read off the
    cycle.  Otherwise seeded rollouts estimate the condition with the
    last-half-window surrogate and a majority threshold; the rollout seed is
    derived from (construction seed, realized history), keeping the whole
    strategy a deterministic function of its inputs.
    """

    def __init__(
        self,
        spec: GameSpec,
        opponent: UninformedStrategy,
        switch_stage: int = 8,
        rollouts: int = 256,
        rollout_horizon: int = 512,
        seed: int = 0,
        mode: str = "infinitely_often",
        threshold: float = 0.1,
    ) -> None:
        if switch_stage < 1:
            raise ValueError("switch stage must be at least 1")
        if spec.n_states != 2:
            raise ValueError("the punishment construction is for two-state games")
        self.spec = spec
        self.opponent = opponent
        self.switch_stage = int(switch_stage)
        self.rollouts = int(rollouts)
        self.rollout_horizon = int(rollout_horizon)
        self.seed = int(seed)
        self.mode = mode
        self.threshold = float(threshold)
        ell_i = spec.i_index("l") if "l" in spec.actions_i else spec.real_actions_i()[0]
        self.ell_j = (
            spec.j_index("l") if "l" in spec.actions_j else spec.real_actions_j()[0]
        )
        self.safe_i = next(a for a in spec.real_actions_i() if a != ell_i)
        self.ell_dist = point_dist(spec.n_i, ell_i)
        self.safe_dist = point_dist(spec.n_i, self.safe_i)
        self.off_turn_dist = point_dist(
            spec.n_i, spec.dummy_i if spec.dummy_i is not None else 0
        )
        self._cache: dict[tuple[tuple[int, int], ...], bool] = {}

    # -- classification ----------------------------------------------------

    def _forced_i(self, t: int) -> int:
        if self.spec.i_owns(t):
            return self.safe_i
        return self.spec.dummy_i

    def _event_on_cycle(
        self, prefix: list[tuple[int, int]], start: int, cycle: list[tuple[int, int]]
    ) -> bool:
        lasso = LassoPlay(
            prefix=PublicHistory(tuple(prefix[:start])),
            cycle=PublicHistory(tuple(cycle)),
        )
        track = periodic_track(lasso, parity=1 if self.spec.timing is Timing.ALTERNATING else None, coord=1)
        if self.mode == "infinitely_often":
            return self.ell_j in track
        dens = sum(1 for v in track if v == self.ell_j) / len(track)
        return dens > self.threshold

    def _classify_deterministic(self, h: tuple[tuple[int, int], ...]) -> bool:
        opp = self.opponent.cursor()
        for pair in h:
            opp.observe(pair)
        pairs = list(h)
        seen: dict[tuple, int] = {}
        t = len(h)
        limit = t + 20000
        while t < limit:
            tok = opp.token()
            if tok is None:
                raise _NeedsSampling()
            key = (tok, t % 2)
            if key in seen:
                t0 = seen[key]
                return self._event_on_cycle(pairs, t0, pairs[t0:])
            seen[key] = t
            if self.spec.j_owns(t):
                a = det_action(opp.dist())
                if a is None:
                    raise _NeedsSampling()
                j = a
            else:
                j = self.spec.dummy_j
            pair = (self._forced_i(t), j)
            pairs.append(pair)
            opp.observe(pair)
            t += 1
        raise _NeedsSampling()

    def _classify_sampled(self, h: tuple[tuple[int, int], ...]) -> bool:
        hits = 0
        for r in range(self.rollouts):
            rng = random.Random(_stable_seed("exploit", self.seed, h, r))
            opp = self.opponent.cursor()
            for pair in h:
                opp.observe(pair)
            track: list[int] = []
            for s in range(self.rollout_horizon):
                t = len(h) + s
                if self.spec.j_owns(t):
                    j = sample_action(opp.dist(), rng.random())
                    track.append(j)
                else:
                    j = self.spec.dummy_j
                pair = (self._forced_i(t), j)
                opp.observe(pair)
            window = track[len(track) // 2 :]
            if self.mode == "infinitely_often":
                hit = self.ell_j in window
            else:
                hit = (
                    len(window) > 0
                    and sum(1 for v in window if v == self.ell_j) / len(window)
                    > self.threshold
                )
            hits += 1 if hit else 0
        return hits * 2 >= self.rollouts

    def classify(self, h: tuple[tuple[int, int], ...]) -> bool:
        """Whether the opponent's continuation after ``h`` keeps playing ell."""
        hit = self._cache.get(h)
        if hit is None:
            try:
                hit = self._classify_deterministic(h)
            except _NeedsSampling:
                hit = self._classify_sampled(h)
            self._cache[h] = hit
        return hit

    def cursor(self, k: int) -> InformedCursor:
        if k == 0:
            return _ExploitSafeCursor(self)
        return _ExploitSwitchCursor(self)


class _NeedsSampling(Exception):
    pass


def make_example1_exploit(
    spec: GameSpec,
    tau: UninformedStrategy,
    switch_stage: int = 8,
    rollouts: int = 256,
    rollout_horizon: int = 512,
    seed: int = 0,
) -> ExploitStrategy:
    """Punish ``tau`` in the "infinitely often" game."""
    return ExploitStrategy(
        spec,
        tau,
        switch_stage=switch_stage,
        rollouts=rollouts,
        rollout_horizon=rollout_horizon,
        seed=seed,
        mode="infinitely_often",
    )


def make_example2_exploit(
    spec: GameSpec,
    tau: UninformedStrategy,
    switch_stage: int = 8,
    rollouts: int = 256,
    rollout_horizon: int = 512,
    seed: int = 0,
    threshold: float = 0.1,
) -> ExploitStrategy:
    """Punish ``tau`` in the density game (same recipe, density event)."""
    return ExploitStrategy(
        spec,
        tau,
        switch_stage=switch_stage,
        rollouts=rollouts,
        rollout_horizon=rollout_horizon,
        seed=seed,
        mode="density",
        threshold=threshold,
    )


# ---------------------------------------------------------------------------
# Canned opponent panel and JSON descriptors


def example1_tau_panel(
    spec: GameSpec, seed: int = 0
) -> list[tuple[str, UninformedStrategy]]:
    """Diverse finite-memory opponents for gap experiments."""
    ell = spec.j_index("l") if "l" in spec.actions_j else spec.real_actions_j()[0]
    other = next(a for a in spec.real_actions_j() if a != ell)
    return [
        ("always_r", pure_uninformed(spec, other)),
        ("always_l", pure_uninformed(spec, ell)),
        ("l_once_then_r", MoveScriptUninformed(spec, cycle=(other,), head=(ell,))),
        ("alternator", MoveScriptUninformed(spec, cycle=(ell, other))),
        ("random_machine3", random_machine_uninformed(spec, 3, seed=seed)),
    ]


def _dist_from_labels(
    labels: Mapping[str, float], actions: tuple[str, ...]
) -> tuple[float, ...]:
    d = [0.0] * len(actions)
    for label, w in labels.items():
        if label not in actions:
            raise ValueError("unknown action label %r" % (label,))
        d[actions.index(label)] = float(w)
    total = sum(d)
    if total <= 0.0:
        raise ValueError("distribution has no mass")
    return tuple(v / total for v in d)


def strategy_from_json(
    spec: GameSpec,
    descriptor: Mapping,
    role: str,
    *,
    oracle: NrOracle | None = None,
    split_plan: SplitPlan | None = None,
    opponent=None,
    epsilon: float = 0.05,
    seed: int = 0,
    exploit_mode: str = "infinitely_often",
):
    """Build a strategy from its JSON descriptor.

    ``role`` is "i" (informed) or "ii" (uninformed).  Family-dependent kinds
    need extra ingredients: ``splitting`` a prebuilt plan, ``block_response``
    the opponent strategy and an oracle, ``example1_exploit`` the opponent.
    Raises ``ValueError`` on malformed descriptors and ``LookupError`` when a
    required oracle/plan is unavailable for the game's payoff family.
    """
    if not isinstance(descriptor, Mapping) or "kind" not in descriptor:
        raise ValueError("strategy descriptor must be an object with a kind")
    kind = descriptor["kind"]
    actions = spec.actions_i if role == "i" else spec.actions_j
    if kind == "stationary":
        if "dist_per_state" in descriptor:
            if role != "i":
                raise ValueError("per-state dists are for the informed player")
            table = descriptor["dist_per_state"]
            dists = []
            for s in spec.states:
                if s not in table:
                    raise ValueError("dist_per_state missing state %r" % (s,))
                dists.append(_dist_from_labels(table[s], actions))
            return StationaryInformed(spec, tuple(dists))
        dist = _dist_from_labels(descriptor.get("dist", {}), actions)
        if role == "i":
            return stationary_informed(spec, dist)
        return StationaryUninformed(spec, dist)
    if kind == "machine":
        transitions = tuple(
            tuple(int(v) for v in row) for row in descriptor["transitions"]
        )
        outputs = tuple(
            _dist_from_labels(row, actions) for row in descriptor["outputs"]
        )
        machine = Machine(
            start=int(descriptor.get("start", 0)),
            transitions=transitions,
            outputs=outputs,
        )
        if role == "i":
            return MachineInformed(spec, tuple(machine for _ in spec.states))
        return MachineUninformed(spec, machine)
    if kind == "splitting":
        if role != "i":
            raise ValueError("splitting is an informed-player strategy")
        if split_plan is None:
            raise LookupError("no splitting plan available for this payoff family")
        return make_splitting(spec, spec.prior, split_plan)
    if kind == "block_response":
        if role != "ii":
            raise ValueError("block_response is an uninformed-player strategy")
        if opponent is None:
            raise ValueError("block_response needs the informed strategy")
        if oracle is None:
            raise LookupError("no non-revealing oracle for this payoff family")
        return make_block_response(
            spec,
            opponent,
            epsilon=float(descriptor.get("epsilon", epsilon)),
            oracle=oracle,
        )
    if kind == "example1_exploit":
        if role != "i":
            raise ValueError("the punishment construction is an informed strategy")
        if opponent is None:
            raise ValueError("the punishment construction needs the opponent")
        return ExploitStrategy(
            spec,
            opponent,
            switch_stage=int(descriptor.get("t", 8)),
            rollouts=int(descriptor.get("rollouts", 256)),
            rollout_horizon=int(descriptor.get("rollout_horizon", 512)),
            seed=int(descriptor.get("seed", seed)),
            mode=exploit_mode,
            threshold=float(descriptor.get("threshold", 0.1)),
        )
    raise ValueError("unknown strategy kind %r" % (kind,))
