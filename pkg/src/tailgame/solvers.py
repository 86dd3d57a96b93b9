"""Matrix-game values, closed-form value functions, and concavification.

Values of zero-sum matrix games are computed by linear programming (HiGHS via
scipy); both players' programs are solved and the certified primal/dual gap is
carried in the solution.  The non-revealing value of an incomplete-information
game with limsup-average payoffs at belief ``p`` is the value of the
``p``-averaged matrix.

Concavification returns the least concave function dominating a sampled value
function.  For two states the envelope is the exact upper hull of the sample
points over the scalar parameterization (``p`` = probability of the first
state); for more states each query solves a small LP over convex combinations
of the sampled beliefs.  Payoffs are not rescaled: bounds travel with the
evaluators, and :func:`lipschitz_ratio` lets callers check a rescaled sample
set against a Lipschitz budget.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .model import Belief

GAP_TOL = 1e-9


@dataclass(frozen=True)
class MatrixSolution:
    """Value and optimal mixed actions of one zero-sum matrix game.

    ``gap`` is the certified difference between what ``y`` concedes and what
    ``x`` guarantees (nonnegative up to rounding, at most ``GAP_TOL``).
    """

    value: float
    x: tuple[float, ...]
    y: tuple[float, ...]
    gap: float


def _clean_dist(raw: np.ndarray) -> tuple[float, ...]:
    v = np.maximum(raw, 0.0)
    s = float(v.sum())
    if s <= 0.0:
        raise RuntimeError("degenerate mixed action from LP")
    return tuple(float(t) for t in v / s)


def matrix_value(matrix: Sequence[Sequence[float]]) -> MatrixSolution:
    """Solve one matrix game exactly up to LP tolerance.

    Row player maximizes, column player minimizes.  Raises ``RuntimeError``
    when the LP solver fails or the certified gap exceeds ``GAP_TOL``.
    """
    g = np.asarray(matrix, dtype=float)
    if g.ndim != 2 or g.size == 0:
        raise ValueError("matrix must be 2-dimensional and nonempty")
    m, n = g.shape

    # max v  s.t.  x^T g >= v per column, x in the simplex
    c = np.zeros(m + 1)
    c[m] = -1.0
    a_ub = np.hstack([-g.T, np.ones((n, 1))])
    a_eq = np.zeros((1, m + 1))
    a_eq[0, :m] = 1.0
    res_x = linprog(
        c,
        A_ub=a_ub,
        b_ub=np.zeros(n),
        A_eq=a_eq,
        b_eq=[1.0],
        bounds=[(0.0, None)] * m + [(None, None)],
        method="highs",
    )
    if res_x.status != 0:
        raise RuntimeError("row-player LP failed: %s" % res_x.message)

    # min u  s.t.  g y <= u per row, y in the simplex
    c = np.zeros(n + 1)
    c[n] = 1.0
    a_ub = np.hstack([g, -np.ones((m, 1))])
    a_eq = np.zeros((1, n + 1))
    a_eq[0, :n] = 1.0
    res_y = linprog(
        c,
        A_ub=a_ub,
        b_ub=np.zeros(m),
        A_eq=a_eq,
        b_eq=[1.0],
        bounds=[(0.0, None)] * n + [(None, None)],
        method="highs",
    )
    if res_y.status != 0:
        raise RuntimeError("column-player LP failed: %s" % res_y.message)

    x = _clean_dist(res_x.x[:m])
    y = _clean_dist(res_y.x[:n])
    guaranteed = float(min(np.array(x) @ g))            # x's worst column
    conceded = float(max(g @ np.array(y)))              # y's worst row
    gap = conceded - guaranteed
    if gap > GAP_TOL:
        raise RuntimeError("LP primal/dual gap %.3g exceeds tolerance" % gap)
    return MatrixSolution(
        value=0.5 * (guaranteed + conceded), x=x, y=y, gap=gap
    )


def nr_value_average(
    p: Belief, matrices: Sequence[Sequence[Sequence[float]]]
) -> float:
    """Non-revealing value at belief ``p`` for limsup-average payoffs."""
    if len(p) != len(matrices):
        raise ValueError("belief length does not match the matrix count")
    avg = sum(p[k] * np.asarray(matrices[k], dtype=float) for k in range(len(p)))
    return matrix_value(avg).value


# ---------------------------------------------------------------------------
# Closed-form Example-1 value function


def u_example1(p: float) -> float:
    """Non-revealing value of the canonical two-state alternating game.

    ``p`` is the probability of the first state.  Piecewise linear: ``1 - 3p``
    up to 1/3, flat 0 up to 2/3, ``2 - 3p`` beyond.
    """
    if not -1e-12 <= p <= 1.0 + 1e-12:
        raise ValueError("p must lie in [0, 1], got %r" % (p,))
    p = min(1.0, max(0.0, p))
    if p <= 1.0 / 3.0:
        return 1.0 - 3.0 * p
    if p <= 2.0 / 3.0:
        return 0.0
    return 2.0 - 3.0 * p


def scalar_grid(mesh: float) -> tuple[float, ...]:
    """Arithmetic grid {0, mesh, 2*mesh, ...} on [0, 1], always ending at 1."""
    if not 0.0 < mesh <= 1.0:
        raise ValueError("mesh must lie in (0, 1]")
    out = []
    i = 0
    while True:
        v = i * mesh
        if v >= 1.0 - 1e-12:
            break
        out.append(v)
        i += 1
    out.append(1.0)
    return tuple(out)


U_EXAMPLE1_KINKS = (1.0 / 3.0, 2.0 / 3.0)


def u_example1_samples(mesh: float) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Sample grid and values for the Example-1 value function.

    The arithmetic grid is augmented with the formula's kinks so that the
    concave envelope of the samples is the exact envelope of the function at
    any mesh (the kinks are generally not grid multiples).
    """
    ps = sorted(set(scalar_grid(mesh)) | set(U_EXAMPLE1_KINKS))
    return tuple(ps), tuple(u_example1(p) for p in ps)


def nr_value_samples(
    matrices: Sequence[Sequence[Sequence[float]]], mesh: float
) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Two-state limsup-average value function sampled on the arithmetic grid."""
    if len(matrices) != 2:
        raise ValueError("scalar sampling needs exactly two states")
    ps = scalar_grid(mesh)
    vals = tuple(nr_value_average(Belief((p, 1.0 - p)), matrices) for p in ps)
    return ps, vals


# ---------------------------------------------------------------------------
# Concavification


def _cross(ox: float, oy: float, ax: float, ay: float, bx: float, by: float) -> float:
    return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox)


@dataclass(frozen=True)
class ScalarConcaveEnvelope:
    """Least concave majorant of scalar samples (two-state games).

    ``hull`` holds the envelope's breakpoints as (p, value) pairs in
    increasing ``p``; evaluation interpolates linearly between them.
    """

    grid: tuple[float, ...]
    values: tuple[float, ...]
    hull: tuple[tuple[float, float], ...]

    @property
    def mesh(self) -> float:
        return max(
            b - a for a, b in zip(self.grid, self.grid[1:])
        )

    def _segment(self, q: float) -> tuple[tuple[float, float], tuple[float, float]]:
        xs = [pt[0] for pt in self.hull]
        if not xs[0] - 1e-12 <= q <= xs[-1] + 1e-12:
            raise ValueError("query %g outside the sampled range" % q)
        idx = bisect.bisect_right(xs, q)
        idx = min(max(idx, 1), len(xs) - 1)
        return self.hull[idx - 1], self.hull[idx]

    def evaluate(self, q: float) -> float:
        (ax, av), (bx, bv) = self._segment(q)
        if bx == ax:
            return av
        w = (q - ax) / (bx - ax)
        w = min(1.0, max(0.0, w))
        return (1.0 - w) * av + w * bv

    def split(self, q: float) -> list[tuple[float, float, float]]:
        """Supporting decomposition at ``q`` as (point, weight, value) triples.

        One triple when ``q`` is (numerically) a hull breakpoint, otherwise the
        two breakpoints of the segment containing ``q``.  Weights are positive
        and sum to one; the weighted points average to ``q`` and the weighted
        values to ``evaluate(q)``.
        """
        (ax, av), (bx, bv) = self._segment(q)
        if abs(q - ax) <= 1e-12:
            return [(ax, 1.0, av)]
        if abs(q - bx) <= 1e-12:
            return [(bx, 1.0, bv)]
        w = (q - ax) / (bx - ax)
        return [(ax, 1.0 - w, av), (bx, w, bv)]


@dataclass(frozen=True)
class SimplexConcaveEnvelope:
    """Concave envelope over sampled beliefs for three or more states.

    Each query solves one LP: maximize the convex combination of sample values
    whose combination of sample beliefs equals the query belief.
    """

    grid: tuple[Belief, ...]
    values: tuple[float, ...]

    def _solve(self, q: Belief) -> tuple[float, np.ndarray]:
        n = len(self.grid)
        dim = len(q)
        c = -np.asarray(self.values, dtype=float)
        a_eq = np.zeros((dim + 1, n))
        for col, b in enumerate(self.grid):
            for k in range(dim):
                a_eq[k, col] = b[k]
            a_eq[dim, col] = 1.0
        b_eq = np.concatenate([np.asarray(q.probs, dtype=float), [1.0]])
        res = linprog(
            c, A_eq=a_eq, b_eq=b_eq, bounds=[(0.0, None)] * n, method="highs"
        )
        if res.status != 0:
            raise ValueError(
                "query belief %r is not representable on the sample grid"
                % (q.probs,)
            )
        return -float(res.fun), res.x

    def evaluate(self, q: Belief) -> float:
        val, _ = self._solve(q)
        return val

    def split(self, q: Belief) -> list[tuple[Belief, float, float]]:
        _, alpha = self._solve(q)
        out = []
        for idx in np.nonzero(alpha > 1e-10)[0]:
            out.append((self.grid[idx], float(alpha[idx]), self.values[idx]))
        total = sum(w for _, w, _ in out)
        return [(b, w / total, v) for b, w, v in out]


def concavify(grid: Sequence, values: Sequence[float]):
    """Build the least concave majorant of sampled values.

    ``grid`` is either a sequence of scalars in [0, 1] (two-state games, the
    scalar being the first state's probability) or a sequence of beliefs.
    Duplicate scalar grid points keep their best value.
    """
    if len(grid) != len(values):
        raise ValueError("grid and values must have equal length")
    if len(grid) == 0:
        raise ValueError("empty grid")
    first = grid[0]
    if isinstance(first, Belief):
        if len(set(b.probs for b in grid)) < 2:
            raise ValueError("degenerate grid: need at least two distinct beliefs")
        return SimplexConcaveEnvelope(
            grid=tuple(grid), values=tuple(float(v) for v in values)
        )

    best: dict[float, float] = {}
    for p, v in zip(grid, values):
        p = float(p)
        v = float(v)
        if p not in best or v > best[p]:
            best[p] = v
    pts = sorted(best.items())
    if len(pts) < 2:
        raise ValueError("degenerate grid: need at least two distinct points")
    hull: list[tuple[float, float]] = []
    for px, pv in pts:
        while (
            len(hull) >= 2
            and _cross(hull[-2][0], hull[-2][1], hull[-1][0], hull[-1][1], px, pv)
            >= 0.0
        ):
            hull.pop()
        hull.append((px, pv))
    return ScalarConcaveEnvelope(
        grid=tuple(p for p, _ in pts),
        values=tuple(v for _, v in pts),
        hull=tuple(hull),
    )


def lipschitz_ratio(grid: Sequence, values: Sequence[float]) -> float:
    """Largest |dv| / ||dq||_1 over all grid pairs (reported, not asserted).

    Scalar grid points are read as two-state beliefs, so their L1 distance is
    twice the scalar gap.
    """
    if len(grid) != len(values):
        raise ValueError("grid and values must have equal length")
    pts: list[tuple[tuple[float, ...], float]] = []
    for g, v in zip(grid, values):
        if isinstance(g, Belief):
            pts.append((g.probs, float(v)))
        else:
            pts.append(((float(g), 1.0 - float(g)), float(v)))
    worst = 0.0
    for a in range(len(pts)):
        qa, va = pts[a]
        for b in range(a + 1, len(pts)):
            qb, vb = pts[b]
            dist = sum(abs(x - y) for x, y in zip(qa, qb))
            if dist <= 0.0:
                continue
            worst = max(worst, abs(va - vb) / dist)
    return worst


def simplex_grid(n_states: int, mesh: float) -> list[Belief]:
    """All beliefs with coordinates that are multiples of roughly ``mesh``."""
    if n_states < 2:
        raise ValueError("need at least two states")
    r = max(1, round(1.0 / mesh))
    out: list[Belief] = []

    def rec(prefix: list[int], remaining: int, slots: int) -> None:
        if slots == 1:
            out.append(Belief(tuple((c / r) for c in prefix + [remaining])))
            return
        for c in range(remaining + 1):
            rec(prefix + [c], remaining - c, slots - 1)

    rec([], r, n_states)
    return out
