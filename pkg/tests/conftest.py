"""Shared helpers: seeded random generators and exact LP certificate checks."""

import random
from fractions import Fraction
from pathlib import Path

from coopshare import (
    Coalition,
    Instance,
    SingleMarketGame,
    normalize,
    single_market,
)

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
SINGLE_MARKET_FIXTURE = FIXTURES / "single_market_demo.json"
MULTI_MARKET_FIXTURE = FIXTURES / "multi_market_demo.json"


def random_single_market(rng: random.Random, n: int) -> SingleMarketGame:
    alpha = sorted(
        (Fraction(rng.randint(0, 8), rng.randint(1, 3)) for _ in range(n)),
        reverse=True,
    )
    weights = [rng.randint(0, 4) for _ in range(n)]
    if sum(weights) == 0:
        weights[rng.randrange(n)] = 1
    total = sum(weights)
    return single_market(alpha, [Fraction(w, total) for w in weights])


def random_uncapacitated(rng: random.Random, n: int, m: int):
    price = [Fraction(rng.randint(1, 6)) for _ in range(m)]
    cost = [
        [Fraction(rng.randint(0, 8), rng.randint(1, 2)) for _ in range(m)]
        for _ in range(n)
    ]
    demand = [
        [Fraction(rng.randint(0, 5), rng.randint(1, 3)) for _ in range(m)]
        for _ in range(n)
    ]
    inst = Instance(
        tuple(f"p{i+1}" for i in range(n)),
        tuple(f"m{j+1}" for j in range(m)),
        tuple(price),
        tuple(tuple(row) for row in cost),
        tuple(tuple(row) for row in demand),
        tuple([None] * n),
    )
    return normalize(inst)


def random_capacitated_integral(rng: random.Random, n: int, m: int):
    price = [Fraction(rng.randint(1, 9)) for _ in range(m)]
    cost = [[Fraction(rng.randint(0, 9)) for _ in range(m)] for _ in range(n)]
    demand = [[Fraction(rng.randint(0, 4)) for _ in range(m)] for _ in range(n)]
    capacity = [
        Fraction(sum(demand[i]) + rng.randint(0, 5)) for i in range(n)
    ]
    inst = Instance(
        tuple(f"p{i+1}" for i in range(n)),
        tuple(f"m{j+1}" for j in range(m)),
        tuple(price),
        tuple(tuple(row) for row in cost),
        tuple(tuple(row) for row in demand),
        tuple(capacity),
    )
    return normalize(inst)


def random_coalition(rng: random.Random, n: int) -> Coalition:
    mask = rng.randrange(1, 1 << n)
    return Coalition(mask)


def assert_optimal_certificate(lp, res):
    """Verify an optimal LpResult end to end with exact arithmetic."""
    assert res.status == "optimal"
    x, y = res.x, res.duals

    activities = []
    for row, rel, b in zip(lp.rows, lp.relations, lp.rhs):
        activity = sum(a * xi for a, xi in zip(row, x))
        activities.append(activity)
        if rel == "<=":
            assert activity <= b
        elif rel == ">=":
            assert activity >= b
        else:
            assert activity == b
    for dom, xj in zip(lp.domains, x):
        if dom == "nonneg":
            assert xj >= 0

    assert sum(c * xi for c, xi in zip(lp.objective, x)) == res.value
    assert sum(yi * b for yi, b in zip(y, lp.rhs)) == res.value

    sign = 1 if lp.sense == "max" else -1
    for rel, yi, activity, b in zip(lp.relations, y, activities, lp.rhs):
        if rel == "<=":
            assert sign * yi >= 0
        elif rel == ">=":
            assert sign * yi <= 0
        assert yi * (activity - b) == 0

    for j, (dom, cj) in enumerate(zip(lp.domains, lp.objective)):
        pull = sum(y[i] * lp.rows[i][j] for i in range(lp.num_rows))
        reduced = sign * (pull - cj)
        if dom == "free":
            assert pull == cj
        else:
            assert reduced >= 0
            assert x[j] * (pull - cj) == 0

    assert res.tight is not None
    for flag, activity, b in zip(res.tight, activities, lp.rhs):
        assert flag == (activity == b)

    # with only nonnegative variables, a basic solution means the binding
    # rows and binding bounds pin x uniquely
    if all(dom == "nonneg" for dom in lp.domains):
        from coopshare.ratlp import RowSpace

        binding = RowSpace()
        for row, flag in zip(lp.rows, res.tight):
            if flag:
                binding.add(row)
        for j, xj in enumerate(x):
            if xj == 0:
                unit = [Fraction(0)] * lp.num_vars
                unit[j] = Fraction(1)
                binding.add(unit)
        assert binding.rank == lp.num_vars
