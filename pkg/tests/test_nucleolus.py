import random
from fractions import Fraction as F

import pytest

from conftest import random_single_market
from coopshare import (
    Coalition,
    InputError,
    InternalError,
    Instance,
    SizeError,
    core_check,
    normalize,
    nucleolus_bruteforce,
    nucleolus_primal_dual,
    nucleolus_separation,
    separate,
    single_market,
    step_size,
    value_oracle,
    value_single_market,
)
from coopshare.nucleolus import FixedFamily, _MaskSpan, improving_direction
from coopshare.ratlp import RowSpace

THIRD = F(1, 3)
DEMO_GAME = single_market([1, 1, 0], [THIRD, THIRD, THIRD])


def oracle_of(g):
    return lambda s: value_single_market(g, s)


class TestFixedFamily:
    def test_membership(self):
        fam = FixedFamily(Coalition.of([2, 4]), 4)
        assert fam.contains(Coalition.of([2]))
        assert fam.contains(Coalition.of([2, 4]))
        assert fam.contains(Coalition.of([1, 3]))  # complement of F
        assert fam.contains(Coalition.of([1, 2, 3]))
        assert not fam.contains(Coalition.of([2, 3]))
        assert not fam.contains(Coalition.of([3]))

    def test_player_one_excluded(self):
        with pytest.raises(InternalError):
            FixedFamily(Coalition.of([1]), 3)


class TestImprovingDirection:
    def test_shape(self):
        d = improving_direction(FixedFamily(Coalition.of([3]), 4))
        assert d.delta == (F(2), F(-1), F(0), F(-1))
        assert d.step == 1
        assert sum(d.delta) == 0

    def test_orthogonal_to_family_generators(self):
        fam = FixedFamily(Coalition.of([2, 3]), 5)
        d = improving_direction(fam)
        # zero on every subset of F and on every complement-superset
        for p in fam.fixed.members():
            assert d.delta[p - 1] == 0
        assert sum(d.delta) == 0


class TestStepSize:
    def test_two_player_first_move(self):
        g = single_market([3, 1], [F(1, 2), F(1, 2)])
        lam, blocking = step_size(g, [F(3, 2), F(3, 2)], F(0), FixedFamily(Coalition(0), 2))
        assert lam == F(1, 2)
        assert blocking.members() == (2,)

    def test_zero_step_reports_tight_coalition(self):
        # player 2's singleton is already tight at the start
        g = single_market([1, 1], [F(1, 3), F(2, 3)])
        lam, blocking = step_size(g, [F(1, 3), F(2, 3)], F(0), FixedFamily(Coalition(0), 2))
        assert lam == 0
        assert blocking.members() == (2,)

    def test_complete_family_rejected(self):
        g = single_market([3, 1], [F(1, 2), F(1, 2)])
        with pytest.raises(InternalError):
            step_size(g, [F(2), F(1)], F(1, 2), FixedFamily(Coalition.of([2]), 2))


class TestPrimalDual:
    def test_two_player(self):
        g = single_market([3, 1], [F(1, 2), F(1, 2)])
        assert nucleolus_primal_dual(g).values == (F(2), F(1))

    def test_uniform_profits_give_proportional_split(self):
        g = single_market([1, 1], [F(1, 3), F(2, 3)])
        assert nucleolus_primal_dual(g).values == (F(1, 3), F(2, 3))
        g5 = single_market([F(7, 2)] * 5, [F(1, 5)] * 5)
        assert nucleolus_primal_dual(g5).values == (F(7, 10),) * 5

    def test_demo_game_matches_oracle(self):
        pd = nucleolus_primal_dual(DEMO_GAME)
        bf = nucleolus_bruteforce(oracle_of(DEMO_GAME), 3)
        assert pd.values == bf.values == (THIRD, THIRD, THIRD)

    def test_market_with_idle_strong_player(self):
        # strongest pair tied, middle player owns nothing
        g = single_market([1, 0, 0], [F(0), F(1, 2), F(1, 2)])
        assert nucleolus_primal_dual(g).values == (F(1, 2), F(1, 4), F(1, 4))

    def test_single_player(self):
        g = single_market([5], [F(1)])
        assert nucleolus_primal_dual(g).values == (F(5),)

    def test_zero_profit_game(self):
        g = single_market([0, 0], [F(1, 2), F(1, 2)])
        assert nucleolus_primal_dual(g).values == (F(0), F(0))

    def test_denormalization(self):
        inst = normalize(
            Instance(
                ("a", "b"), ("m",), (F(4),),
                ((F(1),), (F(3),)), ((F(2),), (F(2),)), (None, None),
            )
        )
        from coopshare import to_single_market

        g = to_single_market(inst, 0)
        alloc = nucleolus_primal_dual(g)
        assert alloc.values == (F(8), F(4))
        assert alloc.total == 12

    def test_trace_records_rounds(self):
        g = single_market([3, 1], [F(1, 2), F(1, 2)])
        trace = []
        nucleolus_primal_dual(g, trace=trace)
        assert len(trace) == 1
        step = trace[0]
        assert step.step == F(1, 2)
        assert step.epsilon == F(1, 2)
        assert step.fixed.members() == (2,)
        assert step.family.members() == (2,)

    def test_trace_invariants_across_random_games(self):
        rng = random.Random(13)
        for _ in range(120):
            n = rng.randint(2, 8)
            g = random_single_market(rng, n)
            trace = []
            nucleolus_primal_dual(g, trace=trace)
            assert 1 <= len(trace) <= n - 1
            eps = F(0)
            seen = 0
            for entry in trace:
                assert entry.step >= 0
                assert entry.epsilon >= eps
                eps = entry.epsilon
                assert len(entry.family) > seen
                seen = len(entry.family)


class TestSeparate:
    def test_finds_violated_pair(self):
        fixed = [(Coalition.full(3), F(1))]
        found = separate(DEMO_GAME, [F(1, 2), F(1, 4), F(1, 4)], F(0), fixed)
        assert found is not None
        assert found.members() == (2, 3)

    def test_feasible_point(self):
        fixed = [(Coalition.full(3), F(1))]
        assert separate(DEMO_GAME, [THIRD, THIRD, THIRD], F(-2), fixed) is None

    def test_bad_point_rejected(self):
        fixed = [(Coalition.full(3), F(1))]
        with pytest.raises(InputError):
            separate(DEMO_GAME, [F(1), F(1), F(1)], F(0), fixed)

    def test_agrees_with_enumeration(self):
        rng = random.Random(59)
        hits = misses = 0
        for _ in range(150):
            n = rng.randint(2, 8)
            g = random_single_market(rng, n)
            total = g.alpha[0]
            x = [F(rng.randint(-2, 6), rng.randint(1, 3)) for _ in range(n - 1)]
            x.append(total - sum(x))
            fixed = [(Coalition.full(n), total)]
            span = RowSpace()
            span.add([1] * n)
            for _ in range(rng.randint(0, n - 1)):
                mask = rng.randrange(1, (1 << n) - 1)
                vec = [mask >> k & 1 for k in range(n)]
                if not span.contains(vec):
                    span.add(vec)
                    fixed.append(
                        (
                            Coalition(mask),
                            sum(x[k] for k in range(n) if mask >> k & 1),
                        )
                    )
            eps = F(rng.randint(-6, 3), rng.randint(1, 2))
            found = separate(g, x, eps, fixed)
            exists = False
            for mask in range(1, 1 << n):
                vec = [mask >> k & 1 for k in range(n)]
                if span.contains(vec):
                    continue
                excess = sum(x[k] for k in range(n) if mask >> k & 1)
                if excess - value_single_market(g, Coalition(mask)) < eps:
                    exists = True
                    break
            assert (found is not None) == exists
            if found is not None:
                hits += 1
                vec = [found.mask >> k & 1 for k in range(n)]
                assert not span.contains(vec)
                lhs = sum(x[k] for k in range(n) if found.mask >> k & 1)
                assert lhs < value_single_market(g, found) + eps
            else:
                misses += 1
        assert hits > 20 and misses > 20


class TestSeparationScheme:
    def test_matches_primal_dual_on_examples(self):
        for alpha, share in [
            ([3, 1], [F(1, 2), F(1, 2)]),
            ([1, 1, 0], [THIRD, THIRD, THIRD]),
            ([1, 0, 0], [F(0), F(1, 2), F(1, 2)]),
            ([5], [F(1)]),
        ]:
            g = single_market(alpha, share)
            assert nucleolus_separation(g) == nucleolus_primal_dual(g)


class TestBruteForce:
    def test_multi_market_demo(self):
        inst = normalize(
            Instance(
                ("a", "b", "c"),
                ("m1", "m2", "m3"),
                (F(1), F(1), F(1)),
                ((F(0), F(0), F(0)), (F(0), F(1), F(1)), (F(1), F(1), F(0))),
                ((F(1), F(0), F(1)), (F(0), F(1), F(1)), (F(1), F(1), F(0))),
                (None, None, None),
            )
        )
        alloc = nucleolus_bruteforce(value_oracle(inst), 3)
        assert alloc.values == (F(10, 3), F(4, 3), F(4, 3))
        assert alloc.total == 6

    def test_two_player_standard_split(self):
        v = {1: F(2), 2: F(3), 3: F(9)}
        alloc = nucleolus_bruteforce(lambda s: v[s.mask], 2)
        assert alloc.values == (F(4), F(5))

    def test_single_player(self):
        alloc = nucleolus_bruteforce(lambda s: F(7), 1)
        assert alloc.values == (F(7),)

    def test_size_guard(self):
        with pytest.raises(SizeError):
            nucleolus_bruteforce(lambda s: F(0), 13)

    def test_capacitated_instance_lands_in_core(self):
        inst = normalize(
            Instance(
                ("a", "b", "c"),
                ("m1", "m2"),
                (F(6), F(5)),
                ((F(1), F(2)), (F(2), F(1)), (F(5), F(5))),
                ((F(2), F(0)), (F(0), F(2)), (F(1), F(1))),
                (F(3), F(4), F(2)),
            )
        )
        oracle = value_oracle(inst)
        alloc = nucleolus_bruteforce(oracle, 3)
        assert sum(alloc.values) == alloc.total == oracle(Coalition.full(3))
        assert core_check(oracle, alloc.values, 3).in_core


class TestOracleTriangle:
    def test_mini_corpus(self):
        rng = random.Random(4242)
        for _ in range(40):
            n = rng.randint(2, 7)
            g = random_single_market(rng, n)
            pd = nucleolus_primal_dual(g)
            sep = nucleolus_separation(g)
            bf = nucleolus_bruteforce(oracle_of(g), n)
            assert pd.values == sep.values == bf.values
            assert pd.total == g.alpha[0]
            assert core_check(g, pd.values).in_core

    def test_scaling_preserved(self):
        rng = random.Random(77)
        for _ in range(20):
            n = rng.randint(2, 6)
            g = random_single_market(rng, n)
            s = F(rng.randint(1, 7), rng.randint(1, 3))
            scaled = single_market(g.alpha, g.share, scale=s)
            base = nucleolus_primal_dual(g)
            assert nucleolus_primal_dual(scaled).values == tuple(
                v * s for v in base.values
            )


class TestLeximinDefinition:
    @staticmethod
    def _sorted_excesses(g, x):
        full = (1 << g.n) - 1
        out = []
        for mask in range(1, full):
            xs = sum(x[k] for k in range(g.n) if mask >> k & 1)
            out.append(xs - value_single_market(g, Coalition(mask)))
        out.sort()
        return out

    def test_no_challenger_beats_the_nucleolus(self):
        # the definition, checked directly: no other efficient payoff has a
        # lexicographically larger sorted excess vector
        rng = random.Random(271828)
        for _ in range(25):
            n = rng.randint(2, 5)
            g = random_single_market(rng, n)
            x = nucleolus_primal_dual(g).values
            base = self._sorted_excesses(g, x)
            for _ in range(40):
                if rng.random() < 0.5:
                    y = [F(rng.randint(-4, 8), rng.randint(1, 4)) for _ in range(n - 1)]
                else:
                    y = [
                        x[k] + F(rng.randint(-2, 2), rng.randint(1, 6))
                        for k in range(n - 1)
                    ]
                y.append(g.alpha[0] - sum(y))
                if tuple(y) == x:
                    continue
                other = self._sorted_excesses(g, y)
                assert other <= base, (g, y)


class TestMaskSpan:
    def test_matches_fraction_row_space(self):
        rng = random.Random(99)
        for _ in range(60):
            n = rng.randint(2, 8)
            ints = _MaskSpan(n)
            fracs = RowSpace()
            for _ in range(rng.randint(1, 12)):
                mask = rng.randrange(1, 1 << n)
                vec = [mask >> k & 1 for k in range(n)]
                assert ints.contains(mask) == fracs.contains(vec)
                assert ints.add(mask) == fracs.add(vec)
            assert ints.rank == fracs.rank
