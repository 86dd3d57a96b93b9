"""Core types for zero-sum repeated games with one-sided incomplete information.

A game is a finite state set, finite action sets for the informed player
(player I) and the uninformed player (player II), a prior over states, and a
timing mode.  Nature draws one state from the prior and reveals it to player I
only; play then proceeds stage by stage, each stage contributing one ``(i, j)``
action pair to the public history.  Payoffs are defined on whole infinite plays
(see :mod:`tailgame.payoffs`), not per stage.

Alternating-move games are encoded in the same pair-per-stage model with a
designated dummy action per player: player I owns even stages, player II owns
odd stages, and the off-turn coordinate of every pair is forced to the dummy.
Payoff evaluators for alternating games read only the mover's coordinate.

Beliefs over states are tuples of floats ordered like ``GameSpec.states``.
For two-state games, a scalar ``p`` always means the probability of the FIRST
state; this convention is used consistently by the closed-form Example-1
machinery and prevents sign errors in the piecewise value formulas.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Sequence

BELIEF_TOL = 1e-12


class Timing(str, Enum):
    SIMULTANEOUS = "simultaneous"
    ALTERNATING = "alternating"


@dataclass(frozen=True)
class Belief:
    """Probability vector over the game's states.

    The raw constructor stores entries as given so that invalid vectors can be
    represented and reported by :func:`validate_spec`; use :meth:`of` to build
    a normalized belief from arbitrary nonnegative weights.
    """

    probs: tuple[float, ...]

    @staticmethod
    def of(values: Iterable[float]) -> "Belief":
        vals = tuple(float(v) for v in values)
        total = sum(vals)
        if total <= 0.0:
            raise ValueError("belief weights must have positive sum, got %r" % (vals,))
        return Belief(tuple(v / total for v in vals))

    def __len__(self) -> int:
        return len(self.probs)

    def __getitem__(self, k: int) -> float:
        return self.probs[k]

    def l1(self, other: "Belief") -> float:
        if len(other.probs) != len(self.probs):
            raise ValueError("beliefs have different lengths")
        return sum(abs(a - b) for a, b in zip(self.probs, other.probs))

    def errors(self, tol: float = BELIEF_TOL) -> list[str]:
        """Return a list of invariant violations (empty when valid)."""
        out = []
        if any(v < -tol for v in self.probs):
            out.append("belief has negative entries: %r" % (self.probs,))
        total = sum(self.probs)
        if abs(total - 1.0) > max(tol, 1e-9):
            out.append("belief sums to %.6g" % total)
        return out


@dataclass(frozen=True)
class PublicHistory:
    """Finite sequence of observed action pairs, indices into the action sets."""

    pairs: tuple[tuple[int, int], ...] = ()

    def __len__(self) -> int:
        return len(self.pairs)

    def stage(self, t: int) -> tuple[int, int]:
        return self.pairs[t]

    def prefix(self, t: int) -> "PublicHistory":
        return PublicHistory(self.pairs[:t])


EMPTY_HISTORY = PublicHistory()


def concat(h1: PublicHistory, h2: PublicHistory) -> PublicHistory:
    return PublicHistory(h1.pairs + h2.pairs)


@dataclass(frozen=True)
class LassoPlay:
    """Eventually periodic play: ``prefix`` followed by ``cycle`` repeated forever."""

    prefix: PublicHistory
    cycle: PublicHistory

    def __post_init__(self) -> None:
        if len(self.cycle) == 0:
            raise ValueError("lasso cycle must be nonempty")


def unroll(lasso: LassoPlay, t: int) -> PublicHistory:
    """First ``t`` stages of the lasso's infinite play."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    pre = lasso.prefix.pairs
    cyc = lasso.cycle.pairs
    if t <= len(pre):
        return PublicHistory(pre[:t])
    out = list(pre)
    n = len(cyc)
    for s in range(len(pre), t):
        out.append(cyc[(s - len(pre)) % n])
    return PublicHistory(tuple(out))


@dataclass(frozen=True)
class GameSpec:
    """Static description of one game instance.

    ``dummy_i`` / ``dummy_j`` are indices into the action sets and are required
    exactly when ``timing`` is alternating.
    """

    states: tuple[str, ...]
    actions_i: tuple[str, ...]
    actions_j: tuple[str, ...]
    prior: Belief
    timing: Timing = Timing.SIMULTANEOUS
    dummy_i: int | None = None
    dummy_j: int | None = None

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_i(self) -> int:
        return len(self.actions_i)

    @property
    def n_j(self) -> int:
        return len(self.actions_j)

    def state_index(self, label: str) -> int:
        return self.states.index(label)

    def i_index(self, label: str) -> int:
        return self.actions_i.index(label)

    def j_index(self, label: str) -> int:
        return self.actions_j.index(label)

    def i_owns(self, t: int) -> bool:
        """Whether player I chooses freely at stage ``t``."""
        if self.timing is Timing.SIMULTANEOUS:
            return True
        return t % 2 == 0

    def j_owns(self, t: int) -> bool:
        if self.timing is Timing.SIMULTANEOUS:
            return True
        return t % 2 == 1

    def real_actions_i(self) -> tuple[int, ...]:
        """Indices of player I actions excluding the dummy, in order."""
        return tuple(a for a in range(self.n_i) if a != self.dummy_i)

    def real_actions_j(self) -> tuple[int, ...]:
        return tuple(a for a in range(self.n_j) if a != self.dummy_j)

    def restrict(self, keep: Sequence[int], prior: Belief) -> "GameSpec":
        """Sub-game on a subset of states (indices into ``states``, in order)."""
        if len(prior) != len(keep):
            raise ValueError("restricted prior length mismatch")
        return replace(
            self,
            states=tuple(self.states[k] for k in keep),
            prior=prior,
        )

    def to_json_dict(self) -> dict:
        d = {
            "states": list(self.states),
            "actions_i": list(self.actions_i),
            "actions_j": list(self.actions_j),
            "prior": list(self.prior.probs),
            "timing": self.timing.value,
        }
        if self.dummy_i is not None:
            d["dummy_i"] = self.actions_i[self.dummy_i]
        if self.dummy_j is not None:
            d["dummy_j"] = self.actions_j[self.dummy_j]
        return d

    @staticmethod
    def from_json_dict(d: dict) -> "GameSpec":
        try:
            states = tuple(str(s) for s in d["states"])
            actions_i = tuple(str(a) for a in d["actions_i"])
            actions_j = tuple(str(a) for a in d["actions_j"])
            prior = Belief(tuple(float(v) for v in d["prior"]))
            timing = Timing(d.get("timing", "simultaneous"))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError("malformed game description: %s" % exc) from exc
        dummy_i = actions_i.index(d["dummy_i"]) if "dummy_i" in d else None
        dummy_j = actions_j.index(d["dummy_j"]) if "dummy_j" in d else None
        return GameSpec(states, actions_i, actions_j, prior, timing, dummy_i, dummy_j)


def validate_spec(spec: GameSpec) -> list[str]:
    """Collect invariant violations as human-readable strings; [] when valid.

    Reports rather than raises so that callers (the CLI in particular) can show
    every problem with a description at once.
    """
    out: list[str] = []
    if len(spec.states) == 0:
        out.append("empty state set")
    if len(spec.actions_i) == 0:
        out.append("empty action set for player I")
    if len(spec.actions_j) == 0:
        out.append("empty action set for player II")
    for name, labels in (
        ("states", spec.states),
        ("actions_i", spec.actions_i),
        ("actions_j", spec.actions_j),
    ):
        if len(set(labels)) != len(labels):
            out.append("duplicate labels in %s: %r" % (name, labels))
    if len(spec.prior) != len(spec.states):
        out.append(
            "prior has %d entries for %d states" % (len(spec.prior), len(spec.states))
        )
    else:
        if any(v < 0 for v in spec.prior.probs):
            out.append("prior has negative entries: %r" % (spec.prior.probs,))
        total = sum(spec.prior.probs)
        if abs(total - 1.0) > 1e-9:
            out.append("prior sums to %.6g" % total)
    if spec.timing is Timing.ALTERNATING:
        if spec.dummy_i is None or spec.dummy_j is None:
            out.append("alternating timing requires dummy actions for both players")
        else:
            if not 0 <= spec.dummy_i < spec.n_i:
                out.append("dummy_i index %d out of range" % spec.dummy_i)
            if not 0 <= spec.dummy_j < spec.n_j:
                out.append("dummy_j index %d out of range" % spec.dummy_j)
            if len(spec.real_actions_i()) == 0:
                out.append("player I has no non-dummy actions")
            if len(spec.real_actions_j()) == 0:
                out.append("player II has no non-dummy actions")
    else:
        if spec.dummy_i is not None or spec.dummy_j is not None:
            out.append("dummy actions are only meaningful under alternating timing")
    return out


def history_errors(spec: GameSpec, h: PublicHistory) -> list[str]:
    """Validity report for a history under ``spec`` (action ranges, dummies)."""
    out: list[str] = []
    for t, (i, j) in enumerate(h.pairs):
        if not 0 <= i < spec.n_i:
            out.append("stage %d: i index %d out of range" % (t, i))
        if not 0 <= j < spec.n_j:
            out.append("stage %d: j index %d out of range" % (t, j))
        if spec.timing is Timing.ALTERNATING:
            if not spec.i_owns(t) and i != spec.dummy_i:
                out.append("stage %d: player I off turn must play the dummy" % t)
            if not spec.j_owns(t) and j != spec.dummy_j:
                out.append("stage %d: player II off turn must play the dummy" % t)
    return out


def history_from_labels(
    spec: GameSpec, pairs: Iterable[tuple[str, str]]
) -> PublicHistory:
    """Convenience constructor used by tests and the CLI."""
    return PublicHistory(
        tuple((spec.i_index(il), spec.j_index(jl)) for il, jl in pairs)
    )


def load_spec_json(text: str) -> tuple[GameSpec, dict]:
    """Parse a JSON game description; returns (spec, payoff descriptor dict).

    The payoff descriptor is handed to :func:`tailgame.payoffs.evaluator_from_json`.
    """
    d = json.loads(text)
    if not isinstance(d, dict):
        raise ValueError("game description must be a JSON object")
    spec = GameSpec.from_json_dict(d)
    payoff = d.get("payoff")
    if payoff is None:
        raise ValueError("game description is missing the payoff field")
    return spec, payoff
