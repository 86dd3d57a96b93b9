"""Posterior beliefs, boundary handling, and block decomposition of a play.

The uninformed player's belief about the hidden state after a public history
is the Bayes posterior under the informed player's (known) strategy.  Only the
informed player's own action probabilities enter the computation, so the
belief is unchanged by any action of the uninformed player and by any informed
action whose probability is state-independent at the current history; the
belief process is a martingale under the strategy that generated the play.

Beliefs are renormalized after every update.  This absorbs floating-point
drift and, because only likelihood ratios matter, avoids underflow on long
histories.

The block machinery splits a play into maximal segments on which the belief
moves little.  A block ends either when the belief comes close to the boundary
of the simplex (some state's probability drops to the rare-state threshold) or
when it has drifted by at least ``delta * epsilon`` in L1 from the block-start
belief.  The boundary check runs first.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .model import Belief, GameSpec, PublicHistory, concat

FACTOR_TOL = 0.0  # informed-action factors are compared exactly


class NullHistoryError(Exception):
    """The history has probability zero under every state."""


def posterior(spec: GameSpec, p: Belief, sigma, h: PublicHistory) -> Belief:
    """Bayes posterior over states after ``h`` when player I follows ``sigma``.

    ``sigma`` is any informed strategy object exposing ``cursor(k)`` (see
    :mod:`tailgame.strategies`).  Stages where player I is off turn are
    skipped: the forced dummy is state-independent by construction.  Raises
    :class:`NullHistoryError` when the observed informed actions are impossible
    under every state.
    """
    if len(p) != spec.n_states:
        raise ValueError("belief length does not match the state set")
    w = list(p.probs)
    cursors = [sigma.cursor(k) for k in range(spec.n_states)]
    for t, pair in enumerate(h.pairs):
        if spec.i_owns(t):
            i = pair[0]
            facs = [c.dist()[i] for c in cursors]
            lo, hi = min(facs), max(facs)
            if lo == hi:
                # State-independent action: belief provably unchanged, and we
                # keep it bit-exactly unchanged rather than renormalizing.
                if hi == 0.0:
                    raise NullHistoryError(
                        "stage %d: action %d has probability 0 in every state" % (t, i)
                    )
            else:
                w = [wk * f for wk, f in zip(w, facs)]
                total = sum(w)
                if total <= 0.0:
                    raise NullHistoryError(
                        "history impossible under every state at stage %d" % t
                    )
                w = [wk / total for wk in w]
        for c in cursors:
            c.observe(pair)
    return Belief(tuple(w))


class PosteriorState:
    """Incremental posterior along one play against a fixed informed strategy.

    Equivalent to calling :func:`posterior` on every prefix, in O(1) amortized
    work per stage.  The :attr:`belief` object is reused unchanged across
    stages whose update is state-independent, so callers may use object
    identity to detect movement.
    """

    def __init__(self, spec: GameSpec, sigma, p: Belief | None = None) -> None:
        self.spec = spec
        self.belief = Belief(tuple((p or spec.prior).probs))
        self._cursors = [sigma.cursor(k) for k in range(spec.n_states)]
        self.t = 0

    def update(self, pair: tuple[int, int]) -> Belief:
        spec = self.spec
        if spec.i_owns(self.t):
            i = pair[0]
            facs = [c.dist()[i] for c in self._cursors]
            lo, hi = min(facs), max(facs)
            if lo == hi:
                if hi == 0.0:
                    raise NullHistoryError(
                        "stage %d: action %d has probability 0 in every state"
                        % (self.t, i)
                    )
            else:
                w = [wk * f for wk, f in zip(self.belief.probs, facs)]
                total = sum(w)
                if total <= 0.0:
                    raise NullHistoryError(
                        "history impossible under every state at stage %d" % self.t
                    )
                self.belief = Belief(tuple(wk / total for wk in w))
        for c in self._cursors:
            c.observe(pair)
        self.t += 1
        return self.belief


def martingale_residual(spec: GameSpec, p: Belief, sigma, h: PublicHistory) -> float:
    """L1 gap between the current belief and its one-step expected successor.

    Averages the posterior over the informed player's next action (weighted by
    its marginal probability under the current belief) and compares with the
    current posterior.  Exactly zero in exact arithmetic; the float residual
    measures accumulated rounding.
    """
    base = posterior(spec, p, sigma, h)
    t = len(h)
    if not spec.i_owns(t):
        return 0.0
    dists = [sigma.dist_at(k, h) for k in range(spec.n_states)]
    if spec.j_owns(t):
        j0 = 0
    else:
        j0 = spec.dummy_j
    acc = [0.0] * spec.n_states
    for i in range(spec.n_i):
        pi = sum(base[k] * dists[k][i] for k in range(spec.n_states))
        if pi <= 0.0:
            continue
        ext = concat(h, PublicHistory(((i, j0),)))
        nxt = posterior(spec, p, sigma, ext)
        for k in range(spec.n_states):
            acc[k] += pi * nxt[k]
    return sum(abs(a - b) for a, b in zip(acc, base.probs))


# ---------------------------------------------------------------------------
# Boundary machinery


def support_above(p: Belief, delta: float) -> tuple[int, ...]:
    """States whose probability exceeds the rare-state threshold ``delta/|K|``.

    Never empty for ``delta < 1``: some state carries at least ``1/|K|``.
    """
    n = len(p)
    thr = delta / n
    return tuple(k for k in range(n) if p[k] > thr)


def restrict_belief(p: Belief, delta: float) -> Belief:
    """Zero out rare states and renormalize the rest (full-length vector)."""
    keep = support_above(p, delta)
    total = sum(p[k] for k in keep)
    if total <= 0.0:
        raise ValueError("no state above the rare-state threshold")
    kept = set(keep)
    return Belief(
        tuple(p[k] / total if k in kept else 0.0 for k in range(len(p)))
    )


def near_boundary(p: Belief, delta: float) -> bool:
    """Whether some state has dropped to the rare-state threshold."""
    return len(support_above(p, delta)) < len(p)


def default_delta(epsilon: float, n_states: int, lipschitz: float = 1.0) -> float:
    """Default rare-state threshold for a given block tolerance.

    Half of ``epsilon**2`` (strictly inside the tracker's admissible range),
    capped by the modulus-of-continuity bound ``epsilon / (lipschitz * |K|)``
    for a value function that is ``lipschitz``-Lipschitz in L1.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    return min(epsilon * epsilon / 2.0, epsilon / (lipschitz * n_states))


class BlockEvent(Enum):
    CONTINUE = "continue"
    NEW_BLOCK = "new_block"
    BOUNDARY = "boundary"


@dataclass
class BlockTracker:
    """Mutable per-play cursor over the block decomposition.

    ``delta`` must lie strictly between 0 and ``epsilon**2``; blocks then end
    on belief drift of at least ``delta * epsilon`` unless the boundary is hit
    first.
    """

    epsilon: float
    delta: float
    start_belief: Belief
    block_index: int = 0
    start_stage: int = 0
    stage: int = 0
    boundary_hit: bool = False

    def __post_init__(self) -> None:
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        if not 0.0 < self.delta < self.epsilon * self.epsilon:
            raise ValueError(
                "delta must lie in (0, epsilon^2); got delta=%g, epsilon=%g"
                % (self.delta, self.epsilon)
            )


def block_step(tracker: BlockTracker, new_belief: Belief) -> BlockEvent:
    """Advance the tracker by one stage of observed belief.

    The boundary condition is checked before the drift condition; after a
    boundary event the tracker is finished and further steps raise.
    """
    if tracker.boundary_hit:
        raise RuntimeError("block tracker already hit the boundary")
    tracker.stage += 1
    if near_boundary(new_belief, tracker.delta):
        tracker.boundary_hit = True
        return BlockEvent.BOUNDARY
    if tracker.start_belief.l1(new_belief) >= tracker.delta * tracker.epsilon:
        tracker.block_index += 1
        tracker.start_belief = new_belief
        tracker.start_stage = tracker.stage
        return BlockEvent.NEW_BLOCK
    return BlockEvent.CONTINUE
