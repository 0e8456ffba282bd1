"""Shapley values: closed form for single-market games plus a subset oracle."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from typing import Callable

from .errors import InputError, SizeError
from .game import Allocation, Coalition, SingleMarketGame
from .ratlp import rat

SUBSET_LIMIT = 10

_ZERO = Fraction(0)


@dataclass(frozen=True)
class ShapleyWeights:
    """Ordering weights beta_t = (t-1)!(n-t)!/n! for coalition sizes 1..n."""

    n: int
    beta: tuple[Fraction, ...]

    def of_size(self, t: int) -> Fraction:
        return self.beta[t - 1]

    @staticmethod
    def binom(k: int, l: int) -> int:
        return comb(k, l)


@lru_cache(maxsize=None)
def shapley_weights(n: int) -> ShapleyWeights:
    if n < 1:
        raise InputError("need at least one player")
    fact = [factorial(k) for k in range(n + 1)]
    beta = tuple(
        Fraction(fact[t - 1] * fact[n - t], fact[n]) for t in range(1, n + 1)
    )
    return ShapleyWeights(n, beta)


def marginal_contribution(g: SingleMarketGame, coalition: Coalition, i: int) -> Fraction:
    """v(T) - v(T \\ {i}) in canonical space, by the three-case split.

    The best profit in T either belongs to a stronger player (i only adds
    its share), to i itself (i also upgrades everyone else's margin), or
    T is the singleton {i}.
    """
    if i not in coalition:
        raise InputError(f"player {i} is not in {coalition}")
    if coalition.mask >> g.n:
        raise InputError(f"coalition {coalition} exceeds the {g.n}-player game")
    rest = coalition.minus(Coalition.of([i]))
    if not rest:
        return g.share[i - 1] * g.alpha[i - 1]
    h = (rest.mask & -rest.mask).bit_length()  # strongest remaining player
    if h < i:
        return g.share[i - 1] * g.alpha[h - 1]
    lam_rest = sum((g.share[j - 1] for j in rest.members()), _ZERO)
    return lam_rest * (g.alpha[i - 1] - g.alpha[h - 1]) + g.share[i - 1] * g.alpha[i - 1]


def shapley_single_market(g: SingleMarketGame) -> Allocation:
    """Closed-form Shapley value, evaluated block by block.

    Kept as four additive blocks (stronger players' margins, the lone
    term, own-margin over weaker minima, and the upgrade block) so that
    any transcription slip surfaces against the subset oracle rather
    than hiding in a hand simplification.
    """
    n = g.n
    weights = shapley_weights(n)
    beta = weights.of_size
    alpha, lam = g.alpha, g.share

    # inner ordering sums reused across players; indexed by the weaker
    # pivot h, which the blocks below only consult for h >= 2 (the
    # h = 1 entries would index beta past n)
    over = [_ZERO] * (n + 2)  # sum_l C(n-h, l) beta_{l+2}
    under = [_ZERO] * (n + 2)  # sum_l C(n-h-1, l) beta_{l+2}
    third = [_ZERO] * (n + 2)  # sum_l C(n-h-1, l) beta_{l+3}
    for h in range(1, n + 1):
        under[h] = sum(
            (comb(n - h - 1, l) * beta(l + 2) for l in range(n - h)), _ZERO
        )
        if h >= 2:
            over[h] = sum(
                (comb(n - h, l) * beta(l + 2) for l in range(n - h + 1)), _ZERO
            )
            third[h] = sum(
                (comb(n - h - 1, l) * beta(l + 3) for l in range(n - h)), _ZERO
            )
    tail = [_ZERO] * (n + 2)  # sum of shares of players after h
    for h in range(n - 1, 0, -1):
        tail[h] = tail[h + 1] + lam[h]

    values = []
    for i in range(1, n + 1):
        stronger = lam[i - 1] * sum(
            (alpha[h - 1] * under[h] for h in range(1, i)), _ZERO
        )
        lone = alpha[i - 1] * lam[i - 1] / n
        own = alpha[i - 1] * lam[i - 1] * sum(
            (over[h] for h in range(i + 1, n + 1)), _ZERO
        )
        upgrade = sum(
            (
                (alpha[i - 1] - alpha[h - 1])
                * (lam[h - 1] * over[h] + tail[h] * third[h])
                for h in range(i + 1, n + 1)
            ),
            _ZERO,
        )
        values.append(stronger + lone + own + upgrade)

    return Allocation(
        g.to_original(values),
        g.alpha[0] * g.scale,
        method="shapley (closed form)",
    )


def shapley_bruteforce(value: Callable[[Coalition], Fraction], n: int) -> Allocation:
    """Average marginal contribution by direct subset enumeration (n <= 10)."""
    if n < 1:
        raise InputError("need at least one player")
    if n > SUBSET_LIMIT:
        raise SizeError(
            f"brute-force Shapley is limited to {SUBSET_LIMIT} players, got {n}"
        )
    full = (1 << n) - 1
    vals = [_ZERO] * (full + 1)
    for mask in range(1, full + 1):
        vals[mask] = rat(value(Coalition(mask)))
    weights = shapley_weights(n)
    values = []
    for i in range(n):
        bit = 1 << i
        total = _ZERO
        for mask in range(1, full + 1):
            if mask & bit:
                total += weights.of_size(mask.bit_count()) * (
                    vals[mask] - vals[mask & ~bit]
                )
        values.append(total)
    return Allocation(tuple(values), vals[full], method="shapley (brute force)")
