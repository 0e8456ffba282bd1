"""Nucleolus computation along three routes.

* `nucleolus_primal_dual` — combinatorial algorithm for canonical
  single-market games: walk an improving direction until a coalition
  avoiding the strongest player goes tight, fix it, repeat.  At most
  n - 1 rounds, no LP solves.
* `nucleolus_separation` — cutting-plane variant: each lexicographic
  level is solved as a small LP with violated coalitions generated by
  the polynomial `separate` oracle, then one binding coalition (nonzero
  multiplier, linearly independent of the already-fixed ones) is fixed.
* `nucleolus_bruteforce` — the sequential-LP scheme with every
  coalition constraint materialized; works for any characteristic
  function given as an oracle.  Exponential; guarded at n <= 12.

All three agree exactly; the brute-force route is the ground truth the
fast routes are tested against.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Callable, Optional, Sequence

from .errors import InputError, InternalError, SizeError
from .game import Allocation, Coalition, SingleMarketGame, value_single_market
from .ratlp import (
    EQ,
    FREE,
    GE,
    MAX,
    OPTIMAL,
    LinearProgram,
    RowSpace,
    rat,
    solve_lp,
    solve_linear_system,
)

BRUTE_FORCE_LIMIT = 12

_ZERO = Fraction(0)
_ONE = Fraction(1)


@dataclass(frozen=True)
class FixedFamily:
    """The family of coalitions pinned by a fixed set F not containing 1.

    A coalition belongs to the family iff it is a subset of F or a
    superset of the complement of F; membership is O(n).
    """

    fixed: Coalition
    n: int

    def __post_init__(self):
        if 1 in self.fixed:
            raise InternalError("player 1 can never enter the fixed set")
        if self.fixed.mask >> self.n:
            raise InputError("fixed set exceeds the player count")

    def contains(self, coalition: Coalition) -> bool:
        if coalition.is_subset_of(self.fixed):
            return True
        complement = self.fixed.complement(self.n)
        return complement.is_subset_of(coalition)

    @property
    def complete(self) -> bool:
        return len(self.fixed) == self.n - 1


@dataclass(frozen=True)
class ImprovingDirection:
    """Direction raising the level: +|unfixed - 1| on player 1, -1 on the
    other unfixed players, 0 on fixed ones; preserves efficiency."""

    delta: tuple[Fraction, ...]
    step: Fraction = _ONE

    def __post_init__(self):
        if sum(self.delta) != 0:
            raise InternalError("improving direction must preserve efficiency")


def improving_direction(family: FixedFamily) -> ImprovingDirection:
    n = family.n
    fixed = family.fixed
    delta = [Fraction(-1)] * n
    delta[0] = Fraction(n - 1 - len(fixed))
    for p in fixed.members():
        delta[p - 1] = _ZERO
    direction = ImprovingDirection(tuple(delta))
    # zero on every fixed player and on N as a whole pins the direction
    # orthogonal to the entire fixed family
    if any(direction.delta[p - 1] != 0 for p in fixed.members()):
        raise InternalError("direction must vanish on the fixed set")
    return direction


@dataclass
class SchemeState:
    """Mutable state of one primal-dual run (canonical space)."""

    x: list[Fraction]
    epsilon: Fraction
    family: FixedFamily
    level: int

    def validate(self, g: SingleMarketGame) -> None:
        # Every player outside the fixed set (other than 1) must keep the
        # drop-one coalition N\{i} tight at the current level.
        total = sum(self.x)
        for i in range(2, g.n + 1):
            if i in self.family.fixed:
                continue
            lhs = total - self.x[i - 1]
            rhs = g.alpha[0] * (1 - g.share[i - 1]) + self.epsilon
            if lhs != rhs:
                raise InternalError(
                    f"drop-one tightness violated for player {i}: {lhs} != {rhs}"
                )


@dataclass(frozen=True)
class TraceStep:
    """One outer round: step length, new level, coalition fixed, set F after."""

    level: int
    step: Fraction
    epsilon: Fraction
    fixed: Coalition
    family: Coalition


def step_size(
    g: SingleMarketGame,
    x: Sequence[Fraction],
    epsilon: Fraction,
    family: FixedFamily,
) -> tuple[Fraction, Coalition]:
    """Largest feasible move along the improving direction, with a coalition
    that blocks it.

    Enumerates the blocking coalition's smallest member i >= 2 and the
    count t of its players outside F.  For each (i, t) the cheapest
    candidate takes i, every later F-member with negative weight, and
    the t (or t-1 when i is outside F) cheapest later non-F players.
    A zero step means some unfixed coalition is already tight; the
    caller then only grows F.
    """
    n = g.n
    if family.complete:
        raise InternalError("step_size called with nothing left to fix")
    if len(x) != n:
        raise InputError(f"payoff vector has length {len(x)}, expected {n}")
    fixed_mask = family.fixed.mask
    budget = n - 1 - len(family.fixed)
    best: Optional[tuple[Fraction, int]] = None
    for i in range(2, n + 1):
        a = g.alpha[i - 1]
        in_f = bool(fixed_mask >> (i - 1) & 1)
        base = x[i - 1] - a * g.share[i - 1]
        base_mask = 1 << (i - 1)
        outside: list[tuple[Fraction, int]] = []
        for j in range(i + 1, n + 1):
            w = x[j - 1] - a * g.share[j - 1]
            if fixed_mask >> (j - 1) & 1:
                if w < 0:
                    base += w
                    base_mask |= 1 << (j - 1)
            else:
                outside.append((w, j))
        outside.sort()
        for t in range(1, budget + 1):
            take = t if in_f else t - 1
            if take > len(outside):
                break
            total = base
            mask = base_mask
            for w, j in outside[:take]:
                total += w
                mask |= 1 << (j - 1)
            lam = (total - epsilon) / (1 + t)
            if best is None or lam < best[0]:
                best = (lam, mask)
    if best is None:
        raise InternalError("no candidate coalition found; family inconsistent")
    lam, mask = best
    if lam < 0:
        raise InternalError(f"negative step {lam}: state infeasible")
    return lam, Coalition(mask)


def _canonical_allocation(
    g: SingleMarketGame, xs: Sequence[Fraction], method: str
) -> Allocation:
    return Allocation(
        g.to_original(xs), g.alpha[0] * g.scale, method=method, in_core=True
    )


def nucleolus_primal_dual(
    g: SingleMarketGame, trace: Optional[list[TraceStep]] = None
) -> Allocation:
    """Exact nucleolus of a single-market game in at most n - 1 rounds.

    Reported in original player order and demand units.
    """
    n = g.n
    method = "nucleolus (primal-dual)"
    if n == 1:
        return _canonical_allocation(g, (g.alpha[0],), method)
    state = SchemeState(
        x=[g.alpha[0] * g.share[k] for k in range(n)],
        epsilon=_ZERO,
        family=FixedFamily(Coalition(0), n),
        level=0,
    )
    state.validate(g)
    while not state.family.complete:
        state.level += 1
        if state.level > n - 1:
            raise InternalError("primal-dual exceeded its n - 1 round bound")
        lam, blocking = step_size(g, state.x, state.epsilon, state.family)
        if lam > 0:
            direction = improving_direction(state.family)
            state.x = [xi + lam * di for xi, di in zip(state.x, direction.delta)]
            state.epsilon += lam * direction.step
        grown = state.family.fixed.union(blocking)
        if grown.mask == state.family.fixed.mask:
            raise InternalError("fixed set failed to grow")
        state.family = FixedFamily(grown, n)
        state.validate(g)
        if trace is not None:
            trace.append(
                TraceStep(
                    level=state.level,
                    step=lam,
                    epsilon=state.epsilon,
                    fixed=Coalition.of(g.perm[k - 1] for k in blocking.members()),
                    family=Coalition.of(g.perm[k - 1] for k in grown.members()),
                )
            )
    return _canonical_allocation(g, state.x, method)


# ---------------------------------------------------------------------------
# separation route
# ---------------------------------------------------------------------------


def _chi(mask: int, n: int) -> tuple[Fraction, ...]:
    return tuple(_ONE if mask >> k & 1 else _ZERO for k in range(n))


def separate(
    g: SingleMarketGame,
    x: Sequence[Fraction],
    epsilon: Fraction,
    fixed: Sequence[tuple[Coalition, Fraction]],
) -> Optional[Coalition]:
    """Find a coalition outside span(fixed) with x(S) < v(S) + epsilon,
    or certify none exists.

    Scans the coalition's smallest member i; among later players the
    candidate weights sort ascending, the all-nonpositive prefix is the
    cheapest set, and when that set is span-pinned the nearest feasible
    edits (dropping a maximal prefix tail, adding a maximal suffix) are
    the only candidates that can escape the span.  Everything is exact;
    span tests use Gaussian elimination.
    """
    n = g.n
    x = [rat(v) for v in x]
    if len(x) != n:
        raise InputError(f"point has length {len(x)}, expected {n}")
    if sum(x) != g.alpha[0]:
        raise InputError("separation point must distribute v(N) exactly")
    span = RowSpace()
    for coalition, value in fixed:
        if sum(x[k - 1] for k in coalition.members()) != value:
            raise InputError(
                f"separation point violates the fixed value of {coalition}"
            )
        span.add(_chi(coalition.mask, n))

    for i in range(1, n + 1):
        a = g.alpha[i - 1]
        items = sorted(
            ((x[j - 1] - a * g.share[j - 1], j) for j in range(i + 1, n + 1))
        )
        p = len(items)
        bound = epsilon - (x[i - 1] - a * g.share[i - 1])
        jbar = 0
        total = _ZERO
        while jbar < p and items[jbar][0] <= 0:
            total += items[jbar][0]
            jbar += 1
        if total >= bound:
            continue
        mask = 1 << (i - 1)
        for k in range(jbar):
            mask |= 1 << (items[k][1] - 1)
        if not span.contains(_chi(mask, n)):
            return Coalition(mask)

        # cheapest set is pinned; scan how far the pinned-and-violated
        # property extends on both sides of the prefix
        low = jbar + 1
        for l in range(jbar, 0, -1):
            w, j = items[l - 1]
            if total - w < bound and span.contains(_chi(mask & ~(1 << (j - 1)), n)):
                low = l
            else:
                break
        if jbar == 0:
            low = 0
        if jbar == p:
            high = p + 1
        else:
            high = jbar
            for l in range(jbar + 1, p + 1):
                w, j = items[l - 1]
                if total + w < bound and span.contains(
                    _chi(mask | 1 << (j - 1), n)
                ):
                    high = l
                else:
                    break

        if low > 1:
            w, j = items[low - 2]
            cand = mask & ~(1 << (j - 1))
            if total - w < bound and not span.contains(_chi(cand, n)):
                return Coalition(cand)
        if high < p:
            w, j = items[high][0], items[high][1]
            cand = mask | 1 << (j - 1)
            if total + w < bound and not span.contains(_chi(cand, n)):
                return Coalition(cand)
        # otherwise no separating coalition starts at i
    return None


def _point_lp(
    n: int,
    pool: Sequence[int],
    values: dict[int, Fraction],
    fixed: Sequence[tuple[Coalition, Fraction]],
):
    rows, rels, rhs = [], [], []
    for mask in pool:
        rows.append(_chi(mask, n) + (Fraction(-1),))
        rels.append(GE)
        rhs.append(values[mask])
    for coalition, value in fixed:
        rows.append(_chi(coalition.mask, n) + (_ZERO,))
        rels.append(EQ)
        rhs.append(value)
    objective = tuple([_ZERO] * n) + (_ONE,)
    domains = tuple([FREE] * (n + 1))
    return LinearProgram(
        MAX, objective, tuple(rows), tuple(rels), tuple(rhs), domains
    )


def nucleolus_separation(g: SingleMarketGame) -> Allocation:
    """Nucleolus via lexicographic levels solved by cutting planes.

    Produces exactly the same allocation as the primal-dual route.
    """
    n = g.n
    method = "nucleolus (separation)"
    if n == 1:
        return _canonical_allocation(g, (g.alpha[0],), method)
    full = (1 << n) - 1
    span = RowSpace()
    span.add(_chi(full, n))
    fixed: list[tuple[Coalition, Fraction]] = [(Coalition(full), g.alpha[0])]
    pool: list[int] = []
    values: dict[int, Fraction] = {}
    cut_guard = 2 << n

    while span.rank < n:
        pool = [m for m in pool if not span.contains(_chi(m, n))]
        for k in range(n):
            m = 1 << k
            if m not in pool and not span.contains(_chi(m, n)):
                pool.append(m)
        for m in pool:
            if m not in values:
                values[m] = value_single_market(g, Coalition(m))

        while True:
            if len(pool) > cut_guard:
                raise InternalError("cutting-plane pool grew past its guard")
            res = solve_lp(_point_lp(n, pool, values, fixed))
            if res.status != OPTIMAL:
                raise InternalError(f"level program ended {res.status}")
            point, level_value = res.x[:n], res.x[n]
            violated = separate(g, point, level_value, fixed)
            if violated is None:
                break
            pool.append(violated.mask)
            values[violated.mask] = value_single_market(g, violated)

        chosen = None
        for idx, mask in enumerate(pool):
            # a negative multiplier on a >= row of a max program marks a
            # binding constraint (its covering-form dual is positive)
            if res.duals[idx] < 0 and not span.contains(_chi(mask, n)):
                chosen = mask
                if not res.tight[idx]:
                    raise InternalError("binding coalition is not tight")
                break
        if chosen is None:
            raise InternalError("no binding independent coalition to fix")
        fixed.append((Coalition(chosen), values[chosen] + level_value))
        span.add(_chi(chosen, n))

    rows = [_chi(c.mask, n) for c, _ in fixed]
    rhs = [value for _, value in fixed]
    xs = solve_linear_system(rows, rhs)
    return _canonical_allocation(g, xs, method)


# ---------------------------------------------------------------------------
# brute-force oracle route
# ---------------------------------------------------------------------------


def _mask_sum(values: Sequence[Fraction], mask: int) -> Fraction:
    total = _ZERO
    k = 0
    while mask:
        if mask & 1:
            total += values[k]
        mask >>= 1
        k += 1
    return total


class _MaskSpan:
    """Rational span of coalition characteristic vectors.

    Pure integer reduced-echelon arithmetic; rows are gcd-normalized and
    zeroed at each other's pivots, so membership tests never divide.
    """

    def __init__(self, n: int):
        self.n = n
        self._rows: list[list[int]] = []
        self._pivots: list[int] = []

    @property
    def rank(self) -> int:
        return len(self._rows)

    def _vec(self, mask: int) -> list[int]:
        return [mask >> k & 1 for k in range(self.n)]

    def _residual(self, v: list[int]) -> list[int]:
        for row, p in zip(self._rows, self._pivots):
            if v[p]:
                f, g = row[p], v[p]
                v = [a * f - g * b for a, b in zip(v, row)]
        return v

    def contains(self, mask: int) -> bool:
        return not any(self._residual(self._vec(mask)))

    def add(self, mask: int) -> bool:
        v = self._residual(self._vec(mask))
        p = next((k for k, a in enumerate(v) if a), None)
        if p is None:
            return False
        if v[p] < 0:
            v = [-a for a in v]
        shrink = gcd(*v)
        if shrink > 1:
            v = [a // shrink for a in v]
        for i, row in enumerate(self._rows):
            if row[p]:
                f, g = v[p], row[p]
                row = [a * f - g * b for a, b in zip(row, v)]
                shrink = gcd(*row)
                if shrink > 1:
                    row = [a // shrink for a in row]
                self._rows[i] = row
        self._rows.append(v)
        self._pivots.append(p)
        return True


class _FaceProber:
    """Find every coalition whose payoff is constant on the optimal face.

    x(S) is constant on the face iff its characteristic vector lies in
    the span of the face's equality system (fixed rows plus implied-
    equality rows).  Implied rows are certified by maximizing their
    slack over the face: points with positive slack rule rows out, and
    a running average of all points seen rules out most rows without
    any solve.  This reproduces the min-vs-max probe pair exactly,
    because min x(S) already sits at the bound for candidate rows.
    """

    def __init__(self, n, free, vals, fixed_masks, fixed_rhs, level_value, xstar):
        self.n = n
        self.free = free
        self.vals = vals
        self.level_value = level_value
        self.rows = tuple(_chi(m, n) for m in free) + tuple(
            _chi(m, n) for m in fixed_masks
        )
        self.rels = tuple([GE] * len(free) + [EQ] * len(fixed_masks))
        self.rhs = tuple(vals[m] + level_value for m in free) + tuple(fixed_rhs)
        self.span = _MaskSpan(n)
        for mask in fixed_masks:
            self.span.add(mask)
        self.point_sum = list(xstar)
        self.point_count = 1

    def _slack_at_mean(self, mask: int) -> bool:
        lhs = _mask_sum(self.point_sum, mask)
        bound = self.vals[mask] + self.level_value
        return lhs > bound * self.point_count

    def _max_over_face(self, mask: int):
        objective = _chi(mask, self.n)
        lp = LinearProgram(
            MAX, objective, self.rows, self.rels, self.rhs, tuple([FREE] * self.n)
        )
        res = solve_lp(lp, want_tight=False)
        if res.status != OPTIMAL:
            raise InternalError(f"face probe ended {res.status}")
        return res

    def constants(self) -> list[int]:
        for mask in self.free:
            if self._slack_at_mean(mask):
                continue
            if self.span.contains(mask):
                continue
            res = self._max_over_face(mask)
            if res.value == self.vals[mask] + self.level_value:
                self.span.add(mask)
            else:
                self.point_sum = [a + b for a, b in zip(self.point_sum, res.x)]
                self.point_count += 1
        return [m for m in self.free if self.span.contains(m)]


def nucleolus_bruteforce(
    value: Callable[[Coalition], Fraction], n: int
) -> Allocation:
    """Sequential-LP nucleolus for an arbitrary characteristic function.

    Materializes every coalition constraint, maximizes the worst excess,
    fixes every coalition whose payoff is constant on the optimal face,
    and repeats until one point remains.  Exponential: n <= 12.
    """
    if n < 1:
        raise InputError("need at least one player")
    if n > BRUTE_FORCE_LIMIT:
        raise SizeError(
            f"brute-force nucleolus is limited to {BRUTE_FORCE_LIMIT} players, got {n}"
        )
    method = "nucleolus (brute force)"
    full = (1 << n) - 1
    vals = [None] * (full + 1)
    for mask in range(1, full + 1):
        vals[mask] = rat(value(Coalition(mask)))
    if n == 1:
        return Allocation((vals[1],), vals[1], method=method, in_core=True)

    span = _MaskSpan(n)
    span.add(full)
    fixed_masks: list[int] = [full]
    fixed_rhs: list[Fraction] = [vals[full]]
    free = list(range(1, full))
    rounds = 0

    while span.rank < n:
        rounds += 1
        if rounds > n:
            raise InternalError("sequential scheme exceeded its round bound")
        free = [m for m in free if not span.contains(m)]

        rows = tuple(_chi(m, n) + (Fraction(-1),) for m in free) + tuple(
            _chi(m, n) + (_ZERO,) for m in fixed_masks
        )
        rels = tuple([GE] * len(free) + [EQ] * len(fixed_masks))
        rhs = tuple(vals[m] for m in free) + tuple(fixed_rhs)
        lp = LinearProgram(
            MAX,
            tuple([_ZERO] * n) + (_ONE,),
            rows,
            rels,
            tuple(rhs),
            tuple([FREE] * (n + 1)),
        )
        res = solve_lp(lp, want_tight=False)
        if res.status != OPTIMAL:
            raise InternalError(f"level program ended {res.status}")
        xstar, level_value = res.x[:n], res.x[n]

        prober = _FaceProber(
            n, free, vals, fixed_masks, fixed_rhs, level_value, xstar
        )
        added = 0
        for mask in prober.constants():
            if span.add(mask):
                fixed_masks.append(mask)
                fixed_rhs.append(_mask_sum(xstar, mask))
                added += 1
        if added == 0:
            raise InternalError("no coalition became fixed; scheme is stuck")

    xs = solve_linear_system([_chi(m, n) for m in fixed_masks], fixed_rhs)
    return Allocation(xs, vals[full], method=method, in_core=None)
