"""Game data model: instances, normalization, coalition values, core checks.

Players are 1-based everywhere.  A `SingleMarketGame` lives in its own
canonical space (players sorted by unit profit, shares summing to one);
its `perm`/`scale` metadata maps canonical results back to original
player order and demand units, and every allocation-producing operation
in the package reports in original terms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

from .errors import (
    DegenerateMarketError,
    InputError,
    InternalError,
    SizeError,
)
from .ratlp import EQ, LE, OPTIMAL, linear_program, rat, solve_lp

ENUMERATION_LIMIT = 20  # 2^n coalition scans are desk-scale tools only


@dataclass(frozen=True)
class Coalition:
    """A set of players stored as a bitmask (bit i-1 = player i).

    Python integers are arbitrary precision, so the same representation
    covers any number of players.
    """

    mask: int

    def __post_init__(self):
        if self.mask < 0:
            raise InputError("coalition mask cannot be negative")

    @classmethod
    def of(cls, players) -> "Coalition":
        mask = 0
        for p in players:
            if not isinstance(p, int) or p < 1:
                raise InputError(f"player index must be a positive int, got {p!r}")
            mask |= 1 << (p - 1)
        return cls(mask)

    @classmethod
    def full(cls, n: int) -> "Coalition":
        return cls((1 << n) - 1)

    def members(self) -> tuple[int, ...]:
        out, mask, i = [], self.mask, 1
        while mask:
            if mask & 1:
                out.append(i)
            mask >>= 1
            i += 1
        return tuple(out)

    def __len__(self) -> int:
        return self.mask.bit_count()

    def __contains__(self, player: int) -> bool:
        return player >= 1 and bool(self.mask >> (player - 1) & 1)

    def __bool__(self) -> bool:
        return self.mask != 0

    def union(self, other: "Coalition") -> "Coalition":
        return Coalition(self.mask | other.mask)

    def minus(self, other: "Coalition") -> "Coalition":
        return Coalition(self.mask & ~other.mask)

    def is_subset_of(self, other: "Coalition") -> bool:
        return self.mask & ~other.mask == 0

    def complement(self, n: int) -> "Coalition":
        return Coalition(((1 << n) - 1) & ~self.mask)

    def __str__(self) -> str:
        return "{" + ",".join(str(p) for p in self.members()) + "}"


EMPTY_COALITION = Coalition(0)


def _matrix(values, n: int, m: int, what: str) -> tuple[tuple[Fraction, ...], ...]:
    rows = tuple(tuple(rat(v) for v in row) for row in values)
    if len(rows) != n or any(len(r) != m for r in rows):
        raise InputError(f"{what} must be an {n} x {m} matrix")
    return rows


@dataclass(frozen=True)
class Instance:
    """Raw multi-market data: prices, unit costs, owned demands, capacities.

    capacity[i] is None for an unbounded producer.  Every producer must
    be able to serve their own total demand.
    """

    players: tuple[str, ...]
    markets: tuple[str, ...]
    price: tuple[Fraction, ...]
    cost: tuple[tuple[Fraction, ...], ...]
    demand: tuple[tuple[Fraction, ...], ...]
    capacity: tuple[Optional[Fraction], ...]

    def __post_init__(self):
        n, m = len(self.players), len(self.markets)
        if n == 0 or m == 0:
            raise InputError("need at least one player and one market")
        if len(self.price) != m:
            raise InputError(f"price must list {m} values")
        object.__setattr__(self, "cost", _matrix(self.cost, n, m, "cost"))
        object.__setattr__(self, "demand", _matrix(self.demand, n, m, "demand"))
        object.__setattr__(self, "price", tuple(rat(v) for v in self.price))
        caps = tuple(None if q is None else rat(q) for q in self.capacity)
        object.__setattr__(self, "capacity", caps)
        if len(caps) != n:
            raise InputError(f"capacity must list {n} values")
        for i in range(n):
            for j in range(m):
                if self.demand[i][j] < 0:
                    raise InputError(
                        f"demand[{i + 1}][{j + 1}] is negative: {self.demand[i][j]}"
                    )
            own = sum(self.demand[i])
            if caps[i] is not None and caps[i] < own:
                raise InputError(
                    f"capacity[{i + 1}] = {caps[i]} cannot serve the player's "
                    f"own demand {own}"
                )

    @property
    def n(self) -> int:
        return len(self.players)

    @property
    def m(self) -> int:
        return len(self.markets)

    @property
    def uncapacitated(self) -> bool:
        return all(q is None for q in self.capacity)


@dataclass(frozen=True)
class NormalizedInstance:
    """Instance with prices and costs folded into unit profits >= 0."""

    players: tuple[str, ...]
    markets: tuple[str, ...]
    profit: tuple[tuple[Fraction, ...], ...]
    demand: tuple[tuple[Fraction, ...], ...]
    capacity: tuple[Optional[Fraction], ...]

    def __post_init__(self):
        n, m = len(self.players), len(self.markets)
        object.__setattr__(self, "profit", _matrix(self.profit, n, m, "profit"))
        object.__setattr__(self, "demand", _matrix(self.demand, n, m, "demand"))
        caps = tuple(None if q is None else rat(q) for q in self.capacity)
        object.__setattr__(self, "capacity", caps)
        if len(caps) != n:
            raise InputError(f"capacity must list {n} values")
        for i in range(n):
            for j in range(m):
                if self.profit[i][j] < 0:
                    raise InputError(
                        f"profit[{i + 1}][{j + 1}] is negative: {self.profit[i][j]}"
                    )
                if self.demand[i][j] < 0:
                    raise InputError(
                        f"demand[{i + 1}][{j + 1}] is negative: {self.demand[i][j]}"
                    )
            own = sum(self.demand[i])
            if caps[i] is not None and caps[i] < own:
                raise InputError(
                    f"capacity[{i + 1}] = {caps[i]} cannot serve the player's "
                    f"own demand {own}"
                )

    @property
    def n(self) -> int:
        return len(self.players)

    @property
    def m(self) -> int:
        return len(self.markets)

    @property
    def uncapacitated(self) -> bool:
        return all(q is None for q in self.capacity)


def normalize(inst: Instance) -> NormalizedInstance:
    """Fold prices and costs into clamped unit profits max(0, r_j - c_ij).

    Serving at a loss is never useful, so negative margins clamp to zero.
    """
    profit = tuple(
        tuple(max(Fraction(0), inst.price[j] - inst.cost[i][j]) for j in range(inst.m))
        for i in range(inst.n)
    )
    return NormalizedInstance(
        inst.players, inst.markets, profit, inst.demand, inst.capacity
    )


@dataclass(frozen=True)
class SingleMarketGame:
    """One market in canonical form: alpha nonincreasing, shares sum to 1.

    perm[k] is the original 1-based player sitting at canonical position
    k+1; scale is the market's total demand, so original-unit payoffs are
    canonical payoffs times scale.
    """

    alpha: tuple[Fraction, ...]
    share: tuple[Fraction, ...]
    perm: tuple[int, ...]
    scale: Fraction

    def __post_init__(self):
        n = len(self.alpha)
        object.__setattr__(self, "alpha", tuple(rat(a) for a in self.alpha))
        object.__setattr__(self, "share", tuple(rat(s) for s in self.share))
        object.__setattr__(self, "scale", rat(self.scale))
        if n == 0 or len(self.share) != n or len(self.perm) != n:
            raise InputError("alpha, share and perm must have equal nonzero length")
        if any(self.alpha[k] < self.alpha[k + 1] for k in range(n - 1)):
            raise InputError("alpha must be nonincreasing")
        if self.alpha[-1] < 0:
            raise InputError("alpha must be nonnegative")
        if any(s < 0 for s in self.share):
            raise InputError("shares must be nonnegative")
        if sum(self.share) != 1:
            raise InputError("shares must sum to exactly 1")
        if sorted(self.perm) != list(range(1, n + 1)):
            raise InputError("perm must be a permutation of 1..n")
        if self.scale <= 0:
            raise InputError("scale must be positive")

    @property
    def n(self) -> int:
        return len(self.alpha)

    def to_original(self, values: Sequence[Fraction]) -> tuple[Fraction, ...]:
        """Map a canonical payoff vector to original order and units."""
        out = [Fraction(0)] * self.n
        for k, v in enumerate(values):
            out[self.perm[k] - 1] = v * self.scale
        return tuple(out)

    def map_coalition(self, original: Coalition) -> Coalition:
        """Translate a coalition of original player ids into canonical positions."""
        mask = 0
        for k in range(self.n):
            if self.perm[k] in original:
                mask |= 1 << k
        return Coalition(mask)


def single_market(alpha, share, scale=1) -> SingleMarketGame:
    """Build a canonical game directly from sorted data (identity mapping)."""
    alpha = tuple(rat(a) for a in alpha)
    return SingleMarketGame(alpha, tuple(rat(s) for s in share),
                            tuple(range(1, len(alpha) + 1)), rat(scale))


def to_single_market(inst: NormalizedInstance, market: int) -> SingleMarketGame:
    """Extract market `market` (0-based) as a canonical single-market game.

    Players are ordered by descending profit, ties by original index;
    shares are demand fractions of the market total.
    """
    if not 0 <= market < inst.m:
        raise InputError(f"market index {market} out of range 0..{inst.m - 1}")
    total = sum(inst.demand[i][market] for i in range(inst.n))
    if total == 0:
        raise DegenerateMarketError(
            f"market {inst.markets[market]!r} has zero total demand; "
            "its game is identically zero"
        )
    order = sorted(range(inst.n), key=lambda i: (-inst.profit[i][market], i))
    alpha = tuple(inst.profit[i][market] for i in order)
    share = tuple(inst.demand[i][market] / total for i in order)
    perm = tuple(i + 1 for i in order)
    return SingleMarketGame(alpha, share, perm, total)


def value_single_market(g: SingleMarketGame, coalition: Coalition) -> Fraction:
    """Coalition value in canonical units: best member profit times joint share."""
    if coalition.mask == 0:
        return Fraction(0)
    if coalition.mask >> g.n:
        raise InputError(f"coalition {coalition} exceeds the {g.n}-player game")
    best = (coalition.mask & -coalition.mask).bit_length() - 1
    lam = Fraction(0)
    mask = coalition.mask
    k = 0
    while mask:
        if mask & 1:
            lam += g.share[k]
        mask >>= 1
        k += 1
    return g.alpha[best] * lam


def value_oracle(inst: NormalizedInstance) -> Callable[[Coalition], Fraction]:
    """Characteristic function of the full game, in original units."""

    def v(coalition: Coalition) -> Fraction:
        return value_general(inst, coalition)

    return v


def value_general(
    inst: NormalizedInstance,
    coalition: Coalition,
    want_plan: bool = False,
    force_lp: bool = False,
):
    """Optimal joint profit of a coalition, with an optional production plan.

    Uncapacitated coalitions use the per-market closed form (each market
    served entirely by the coalition's best producer); otherwise the
    transportation-style program is solved exactly.  Returns the value,
    or (value, plan) with plan[i][j] in original player/market indexing.
    """
    if coalition.mask == 0:
        raise InputError("coalition value is defined for nonempty coalitions")
    if coalition.mask >> inst.n:
        raise InputError(f"coalition {coalition} exceeds the {inst.n}-player instance")
    members = coalition.members()
    uncap = all(inst.capacity[i - 1] is None for i in members)
    if uncap and not force_lp:
        value = Fraction(0)
        plan = [[Fraction(0)] * inst.m for _ in range(inst.n)] if want_plan else None
        for j in range(inst.m):
            dj = sum(inst.demand[i - 1][j] for i in members)
            best = max(members, key=lambda i: (inst.profit[i - 1][j], -i))
            value += inst.profit[best - 1][j] * dj
            if want_plan:
                plan[best - 1][j] = dj
        return (value, plan) if want_plan else value

    # LP over y[i][j] for coalition members: maximize profit, meet the
    # coalition's pooled demand per market, respect capacities.
    var_of = {}
    for i in members:
        for j in range(inst.m):
            var_of[(i, j)] = len(var_of)
    nv = len(var_of)
    objective = [Fraction(0)] * nv
    for (i, j), k in var_of.items():
        objective[k] = inst.profit[i - 1][j]
    constraints = []
    for j in range(inst.m):
        row = [Fraction(0)] * nv
        for i in members:
            row[var_of[(i, j)]] = Fraction(1)
        total = sum(inst.demand[i - 1][j] for i in members)
        constraints.append((row, EQ, total))
    for i in members:
        if inst.capacity[i - 1] is None:
            continue
        row = [Fraction(0)] * nv
        for j in range(inst.m):
            row[var_of[(i, j)]] = Fraction(1)
        constraints.append((row, LE, inst.capacity[i - 1]))
    lp = linear_program("max", objective, constraints)
    res = solve_lp(lp)
    if res.status != OPTIMAL:
        raise InternalError(
            f"coalition value program ended {res.status}; instance invariants "
            "guarantee a feasible bounded program"
        )
    if not want_plan:
        return res.value
    plan = [[Fraction(0)] * inst.m for _ in range(inst.n)]
    for (i, j), k in var_of.items():
        plan[i - 1][j] = res.x[k]
    return res.value, plan


def min_excess(
    g: SingleMarketGame, x: Sequence[Fraction]
) -> tuple[Coalition, Fraction]:
    """Minimize x(S) - v(S) over proper nonempty coalitions, in O(n^2).

    For each candidate best member k the optimal set takes k plus every
    later player whose payoff undercuts alpha_k times their share; zero
    contributors are excluded.  With a single player the only coalition
    is the grand one.  Ties resolve to the smallest candidate index.
    """
    n = g.n
    if len(x) != n:
        raise InputError(f"payoff vector has length {len(x)}, expected {n}")
    x = [rat(v) for v in x]
    if n == 1:
        return Coalition(1), x[0] - g.alpha[0] * g.share[0]
    best_mask, best_val = None, None
    for k in range(n):
        a = g.alpha[k]
        mask = 1 << k
        total = x[k] - a * g.share[k]
        worst = None  # least negative contribution, dropped if S would be N
        for i in range(k + 1, n):
            w = x[i] - a * g.share[i]
            if w < 0:
                mask |= 1 << i
                total += w
                if worst is None or w > worst[1] or (w == worst[1] and i < worst[0]):
                    worst = (i, w)
        if mask == (1 << n) - 1:
            mask &= ~(1 << worst[0])
            total -= worst[1]
        if best_val is None or total < best_val:
            best_mask, best_val = mask, total
    return Coalition(best_mask), best_val


@dataclass(frozen=True)
class CoreCheck:
    in_core: bool
    violated: Optional[Coalition] = None
    excess: Optional[Fraction] = None


def core_check(
    v: Union[SingleMarketGame, Callable[[Coalition], Fraction]],
    x,
    n: Optional[int] = None,
) -> CoreCheck:
    """Test x(S) >= v(S) for every proper coalition.

    Single-market games use the polynomial minimum-excess scan (x given
    in the game's canonical space); anything else enumerates all proper
    coalitions (guarded at n <= 20) and reports a maximally violated
    coalition.  x is an Allocation or a plain payoff sequence and must
    be efficient.
    """
    if isinstance(x, Allocation):
        x = x.values
    if isinstance(v, SingleMarketGame):
        g = v
        if sum(rat(c) for c in x) != g.alpha[0]:
            raise InputError("allocation does not distribute v(N) exactly")
        coalition, excess = min_excess(g, x)
        if excess < 0:
            return CoreCheck(False, coalition, excess)
        return CoreCheck(True)

    if n is None:
        raise InputError("core_check with a value oracle needs the player count")
    if n > ENUMERATION_LIMIT:
        raise SizeError(
            f"core enumeration is limited to {ENUMERATION_LIMIT} players, got {n}"
        )
    x = [rat(c) for c in x]
    if n == 1:
        return CoreCheck(True)
    full = (1 << n) - 1
    if sum(x) != v(Coalition(full)):
        raise InputError("allocation does not distribute v(N) exactly")
    worst_mask, worst_excess = None, None
    for mask in range(1, full):
        xs = Fraction(0)
        mm, k = mask, 0
        while mm:
            if mm & 1:
                xs += x[k]
            mm >>= 1
            k += 1
        excess = xs - v(Coalition(mask))
        if excess < 0 and (worst_excess is None or excess < worst_excess):
            worst_mask, worst_excess = mask, excess
    if worst_mask is None:
        return CoreCheck(True)
    return CoreCheck(False, Coalition(worst_mask), worst_excess)


@dataclass(frozen=True)
class Allocation:
    """A payoff vector distributing exactly the grand-coalition value.

    `method` and `in_core` are report metadata and never part of
    equality comparisons.
    """

    values: tuple[Fraction, ...]
    total: Fraction
    method: str = field(default="", compare=False)
    in_core: Optional[bool] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(rat(v) for v in self.values))
        object.__setattr__(self, "total", rat(self.total))
        if sum(self.values) != self.total:
            raise InputError(
                f"allocation sums to {sum(self.values)}, expected {self.total}"
            )
