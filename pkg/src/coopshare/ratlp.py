"""Exact rational linear programming on dense simplex tableaus.

Every quantity is a `fractions.Fraction`; nothing is ever rounded.  The
solver is a two-phase dense simplex with Bland's smallest-index rule, so
results are deterministic and cycling is impossible.  Internally the
tableau is kept fraction-free (integer entries sharing one positive
divisor), which is much faster than per-entry Fraction arithmetic while
remaining exact.

For programs with many more constraints than variables the solver
pivots on the dual program instead and maps the certified optimum back;
the returned primal solution is still a basic (vertex) solution and the
returned duals still certify optimality exactly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Iterable, Optional, Sequence

from .errors import InputError, InternalError

Rational = Fraction

LE, EQ, GE = "<=", "=", ">="
NONNEG, FREE = "nonneg", "free"
MAX, MIN = "max", "min"

_RATIONAL_RE = re.compile(r"^[+-]?\d+(/[1-9]\d*)?$")


def rat(value) -> Fraction:
    """Parse an exact rational from an int, Fraction, or "p/q" string.

    Floats (and float-looking strings) are rejected: exactness is a
    contract, not a best effort.
    """
    if isinstance(value, bool):
        raise InputError(f"not a rational number: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        raise InputError(
            f"float literal {value!r} rejected: use an integer or a 'p/q' string"
        )
    if isinstance(value, str):
        text = value.strip()
        if not _RATIONAL_RE.match(text):
            raise InputError(
                f"malformed rational {value!r}: expected 'p' or 'p/q' with q > 0"
            )
        return Fraction(text)
    raise InputError(f"not a rational number: {value!r}")


@dataclass(frozen=True)
class LinearProgram:
    """A dense LP: optimize objective over rows `coeffs <rel> rhs`.

    Variables are either nonnegative or free (`domains`); free variables
    are split internally, callers never see the split.
    """

    sense: str
    objective: tuple[Fraction, ...]
    rows: tuple[tuple[Fraction, ...], ...]
    relations: tuple[str, ...]
    rhs: tuple[Fraction, ...]
    domains: tuple[str, ...]

    @property
    def num_vars(self) -> int:
        return len(self.objective)

    @property
    def num_rows(self) -> int:
        return len(self.rows)


def linear_program(
    sense: str,
    objective: Sequence,
    constraints: Iterable[tuple],
    domains: Optional[Sequence[str]] = None,
) -> LinearProgram:
    """Build and validate a LinearProgram.

    `constraints` is an iterable of (coefficients, relation, rhs); the
    default domain is nonnegative for every variable.
    """
    if sense not in (MAX, MIN):
        raise InputError(f"sense must be {MAX!r} or {MIN!r}, got {sense!r}")
    obj = tuple(rat(c) for c in objective)
    n = len(obj)
    if n == 0:
        raise InputError("a linear program needs at least one variable")
    rows, rels, rhs = [], [], []
    for k, item in enumerate(constraints):
        try:
            coeffs, rel, b = item
        except (TypeError, ValueError):
            raise InputError(f"constraint {k}: expected (coeffs, relation, rhs)")
        row = tuple(rat(c) for c in coeffs)
        if len(row) != n:
            raise InputError(
                f"constraint {k}: width {len(row)} != variable count {n}"
            )
        if rel not in (LE, EQ, GE):
            raise InputError(f"constraint {k}: unknown relation {rel!r}")
        rows.append(row)
        rels.append(rel)
        rhs.append(rat(b))
    if domains is None:
        doms = tuple([NONNEG] * n)
    else:
        doms = tuple(domains)
        if len(doms) != n or any(d not in (NONNEG, FREE) for d in doms):
            raise InputError("domains must list 'nonneg'/'free' per variable")
    return LinearProgram(sense, obj, tuple(rows), tuple(rels), tuple(rhs), doms)


@dataclass(frozen=True)
class LpResult:
    """Outcome of solve_lp.

    For optimal programs, `x` is a basic (vertex) solution, `duals` hold
    one multiplier per constraint certifying optimality through exact
    complementary slackness, and `tight` marks rows active at `x`; rows
    that are tight with a positive dual identify the binding facets of
    the optimal basis, which iterative callers fix.
    """

    status: str
    value: Optional[Fraction] = None
    x: Optional[tuple[Fraction, ...]] = None
    duals: Optional[tuple[Fraction, ...]] = None
    tight: Optional[tuple[bool, ...]] = None


OPTIMAL, INFEASIBLE, UNBOUNDED = "optimal", "infeasible", "unbounded"


# ---------------------------------------------------------------------------
# fraction-free tableau core
# ---------------------------------------------------------------------------


class _Tableau:
    """Integer tableau with one shared positive divisor.

    True entries are mat[i][j] / div.  Rows 0..m-1 are constraints with
    the right-hand side in the final column; the last two rows are the
    phase-1 and phase-2 reduced-cost rows, updated alongside.
    """

    def __init__(self, rows, cost1, cost2, basis):
        self.mat = [list(r) for r in rows] + [list(cost1), list(cost2)]
        self.m = len(rows)
        self.basis = list(basis)
        self.div = 1

    def pivot(self, r: int, c: int) -> None:
        mat = self.mat
        prow = mat[r]
        p = prow[c]
        if p <= 0:
            raise InternalError("pivot element must be positive")
        d = self.div
        for i in range(len(mat)):
            if i == r:
                continue
            row = mat[i]
            f = row[c]
            if f == 0:
                if p != d:
                    mat[i] = [a * p // d for a in row]
            else:
                mat[i] = [(p * a - f * b) // d for a, b in zip(row, prow)]
        self.div = p
        self.basis[r] = c

    def entering(self, cost_index: int, limit: int, bland: bool) -> Optional[int]:
        # Bland: smallest column index with negative reduced cost.
        # Dantzig: most negative, ties to the smallest index; used while a
        # pivot budget lasts, after which Bland's rule takes over so that
        # termination stays guaranteed.  Both rules are deterministic.
        row = self.mat[cost_index]
        if bland:
            for j in range(limit):
                if row[j] < 0:
                    return j
            return None
        best = None
        best_val = 0
        for j in range(limit):
            v = row[j]
            if v < best_val:
                best, best_val = j, v
        return best

    def leaving(self, c: int) -> Optional[int]:
        # Minimum-ratio row; ties broken by smallest basic variable
        # index, which together with the Bland entering rule prevents
        # cycling.
        mat = self.mat
        best = None
        best_num = best_den = 0
        for i in range(self.m):
            a = mat[i][c]
            if a <= 0:
                continue
            b = mat[i][-1]
            if best is None:
                best, best_num, best_den = i, b, a
                continue
            diff = b * best_den - best_num * a
            if diff < 0 or (diff == 0 and self.basis[i] < self.basis[best]):
                best, best_num, best_den = i, b, a
        return best

    def run(self, cost_index: int, limit: int) -> str:
        budget = 4 * (self.m + limit) + 64
        pivots = 0
        while True:
            c = self.entering(cost_index, limit, bland=pivots >= budget)
            if c is None:
                return OPTIMAL
            r = self.leaving(c)
            if r is None:
                return UNBOUNDED
            self.pivot(r, c)
            pivots += 1


# ---------------------------------------------------------------------------
# canonicalization: user LP -> integer standard form
# ---------------------------------------------------------------------------


class _Canonical:
    """Integer standard form min c.z, Az = b, z >= 0, b >= 0.

    Column layout: structural (free variables split) | slack/surplus,
    one per inequality row, coefficient +/-1 | artificials, coefficient
    +1, one per row that lacks a +1 slack.  Slack variables absorb the
    row's denominator-clearing scale; their values are never reported.
    """

    def __init__(self, lp: LinearProgram):
        self.lp = lp
        n, m = lp.num_vars, lp.num_rows
        self.sense_sign = -1 if lp.sense == MAX else 1

        self.plus_col: list[int] = []
        self.minus_col: list[Optional[int]] = []
        col = 0
        for d in lp.domains:
            self.plus_col.append(col)
            col += 1
            if d == FREE:
                self.minus_col.append(col)
                col += 1
            else:
                self.minus_col.append(None)
        self.n_struct = col

        slack_col: list[Optional[int]] = []
        for rel in lp.relations:
            if rel == EQ:
                slack_col.append(None)
            else:
                slack_col.append(col)
                col += 1
        self.n_with_slack = col

        int_rows: list[list[int]] = []
        slack_sign: list[int] = []
        self.row_mult: list[Fraction] = []  # internal row = mult * user row
        for i in range(m):
            coeffs = list(lp.rows[i])
            b = lp.rhs[i]
            neg = 1
            if b < 0:
                neg = -1
                coeffs = [-a for a in coeffs]
                b = -b
            scale = lcm(*(a.denominator for a in coeffs), b.denominator)
            self.row_mult.append(Fraction(neg * scale))
            row = [0] * self.n_with_slack
            for j, a in enumerate(coeffs):
                v = int(a * scale)
                row[self.plus_col[j]] = v
                mc = self.minus_col[j]
                if mc is not None:
                    row[mc] = -v
            rel = lp.relations[i]
            if rel == EQ:
                slack_sign.append(0)
            else:
                sign = (1 if rel == LE else -1) * neg
                row[slack_col[i]] = sign
                slack_sign.append(sign)
            row.append(int(b * scale))
            int_rows.append(row)

        # Artificials for rows without a +1 slack to start from.
        self.art_cols: list[int] = []
        art_col: list[Optional[int]] = []
        basis: list[int] = []
        for i in range(m):
            if slack_sign[i] > 0:
                art_col.append(None)
                basis.append(slack_col[i])
            else:
                art_col.append(col)
                self.art_cols.append(col)
                basis.append(col)
                col += 1
        self.n_total = col
        for i in range(m):
            row = int_rows[i]
            row[-1:-1] = [0] * (self.n_total - self.n_with_slack)
            if art_col[i] is not None:
                row[art_col[i]] = 1

        # Dual reader per row: a column whose frozen coefficients are
        # tau * e_i with zero cost.
        self.reader: list[tuple[int, int]] = []
        for i in range(m):
            if art_col[i] is not None:
                self.reader.append((art_col[i], 1))
            else:
                self.reader.append((slack_col[i], slack_sign[i]))

        self.rows = int_rows
        self.basis0 = basis

        self.obj_scale = lcm(*(c.denominator for c in lp.objective), 1)
        cost2 = [0] * (self.n_total + 1)
        for j, c in enumerate(lp.objective):
            v = int(c * self.obj_scale) * self.sense_sign
            cost2[self.plus_col[j]] = v
            mc = self.minus_col[j]
            if mc is not None:
                cost2[mc] = -v
        self.cost2 = cost2

        cost1 = [0] * (self.n_total + 1)
        for c in self.art_cols:
            cost1[c] = 1
        for i in range(m):
            if art_col[i] is not None:
                cost1 = [a - b for a, b in zip(cost1, int_rows[i])]
        self.cost1 = cost1


def _tight_rows(lp: LinearProgram, x: Sequence[Fraction]) -> tuple[bool, ...]:
    return tuple(
        sum(a * xi for a, xi in zip(lp.rows[i], x) if a) == lp.rhs[i]
        for i in range(lp.num_rows)
    )


def _solve_primal(lp: LinearProgram, want_tight: bool = True) -> LpResult:
    can = _Canonical(lp)
    tab = _Tableau(can.rows, can.cost1, can.cost2, can.basis0)
    m = tab.m
    art_set = set(can.art_cols)

    status = tab.run(m, can.n_total)
    if status == UNBOUNDED:
        raise InternalError("phase-1 objective cannot be unbounded")
    if tab.mat[m][-1] != 0:
        return LpResult(status=INFEASIBLE)

    # Drive basic artificials out; rows where that is impossible are
    # redundant and keep their artificial basic at level zero.
    for r in range(m):
        if tab.basis[r] not in art_set:
            continue
        if tab.mat[r][-1] != 0:
            raise InternalError("artificial basic at nonzero level after phase 1")
        row = tab.mat[r]
        target = next(
            (j for j in range(can.n_with_slack) if row[j] > 0), None
        )
        if target is None:
            target = next(
                (j for j in range(can.n_with_slack) if row[j] < 0), None
            )
            if target is not None:
                tab.mat[r] = [-v for v in row]
        if target is not None:
            tab.pivot(r, target)

    status = tab.run(m + 1, can.n_with_slack)
    if status == UNBOUNDED:
        return LpResult(status=UNBOUNDED)

    div = tab.div
    zvals: dict[int, Fraction] = {}
    for r in range(m):
        zvals[tab.basis[r]] = Fraction(tab.mat[r][-1], div)
    x = []
    for j in range(lp.num_vars):
        v = zvals.get(can.plus_col[j], Fraction(0))
        mc = can.minus_col[j]
        if mc is not None:
            v -= zvals.get(mc, Fraction(0))
        x.append(v)

    K = can.obj_scale
    internal_value = Fraction(-tab.mat[m + 1][-1], div)
    value = can.sense_sign * internal_value / K

    cost_row = tab.mat[m + 1]
    duals = []
    for i in range(lp.num_rows):
        col, tau = can.reader[i]
        y_int = Fraction(-cost_row[col], tau * div)
        duals.append(can.sense_sign * can.row_mult[i] * y_int / K)

    tight = _tight_rows(lp, x) if want_tight else None
    return LpResult(OPTIMAL, value, tuple(x), tuple(duals), tight)


# ---------------------------------------------------------------------------
# dual construction
# ---------------------------------------------------------------------------


def dual_of(lp: LinearProgram) -> tuple[LinearProgram, tuple[int, ...]]:
    """Build the dual program.

    Returns (dual, flips) where flips[i] is -1 for rows whose inequality
    was reversed during normalization; the user dual of row i equals
    flips[i] times the dual program's variable i.
    """
    n, m = lp.num_vars, lp.num_rows
    keep = LE if lp.sense == MAX else GE
    flips, rows, rhs, doms = [], [], [], []
    for i in range(m):
        rel = lp.relations[i]
        if rel == EQ:
            flips.append(1)
            rows.append(lp.rows[i])
            rhs.append(lp.rhs[i])
            doms.append(FREE)
        elif rel == keep:
            flips.append(1)
            rows.append(lp.rows[i])
            rhs.append(lp.rhs[i])
            doms.append(NONNEG)
        else:
            flips.append(-1)
            rows.append(tuple(-a for a in lp.rows[i]))
            rhs.append(-lp.rhs[i])
            doms.append(NONNEG)

    dual_sense = MIN if lp.sense == MAX else MAX
    dual_rel = GE if lp.sense == MAX else LE
    dual_rows = []
    for j in range(n):
        col = tuple(rows[i][j] for i in range(m))
        rel = EQ if lp.domains[j] == FREE else dual_rel
        dual_rows.append((col, rel, lp.objective[j]))
    dual = linear_program(dual_sense, rhs, dual_rows, doms)
    return dual, tuple(flips)


def solve_lp(
    lp: LinearProgram, orientation: str = "auto", want_tight: bool = True
) -> LpResult:
    """Solve an LP exactly; deterministic for identical input.

    `orientation` picks the tableau the simplex pivots on: "primal",
    "dual", or "auto" (dual when constraints far outnumber variables).
    Either orientation certifies the program as given.  `want_tight`
    skips the per-row activity report when the caller has no use for it.
    """
    if not isinstance(lp, LinearProgram):
        raise InputError("solve_lp expects a LinearProgram")
    if orientation not in ("auto", "primal", "dual"):
        raise InputError(f"unknown orientation {orientation!r}")
    use_dual = orientation == "dual" or (
        orientation == "auto"
        and lp.num_rows >= max(16, 2 * max(lp.num_vars, 1))
    )
    if not use_dual:
        return _solve_primal(lp, want_tight)

    dual, flips = dual_of(lp)
    res = _solve_primal(dual, want_tight=False)
    if res.status == UNBOUNDED:
        return LpResult(status=INFEASIBLE)
    if res.status == INFEASIBLE:
        # primal is unbounded or infeasible; settle it directly
        return _solve_primal(lp, want_tight)
    x = res.duals
    duals = tuple(f * y for f, y in zip(flips, res.x))
    tight = _tight_rows(lp, x) if want_tight else None
    return LpResult(OPTIMAL, res.value, x, duals, tight)


# ---------------------------------------------------------------------------
# exact linear algebra helpers
# ---------------------------------------------------------------------------


class RowSpace:
    """Incremental exact row space (reduced echelon form) over Q."""

    def __init__(self):
        self._rows: list[list[Fraction]] = []
        self._pivots: list[int] = []

    @property
    def rank(self) -> int:
        return len(self._rows)

    def _residual(self, vec: Sequence[Fraction]) -> list[Fraction]:
        v = [Fraction(a) for a in vec]
        for row, p in zip(self._rows, self._pivots):
            if v[p]:
                f = v[p]
                v = [a - f * b for a, b in zip(v, row)]
        return v

    def contains(self, vec: Sequence[Fraction]) -> bool:
        return not any(self._residual(vec))

    def add(self, vec: Sequence[Fraction]) -> bool:
        """Insert vec; returns True if it increased the rank."""
        v = self._residual(vec)
        for p, a in enumerate(v):
            if a:
                v = [b / a for b in v]
                for i, row in enumerate(self._rows):
                    if row[p]:
                        f = row[p]
                        self._rows[i] = [x - f * y for x, y in zip(row, v)]
                self._rows.append(v)
                self._pivots.append(p)
                return True
        return False


def span_membership(target: Sequence, basis: Iterable[Sequence]) -> bool:
    """True iff target lies in the rational span of the basis vectors.

    Vectors are anything rat() accepts per entry; computed by exact
    Gaussian elimination.
    """
    tgt = [rat(a) for a in target]
    space = RowSpace()
    for vec in basis:
        row = [rat(a) for a in vec]
        if len(row) != len(tgt):
            raise InputError(
                f"dimension mismatch: basis vector of length {len(row)}, "
                f"target of length {len(tgt)}"
            )
        space.add(row)
    return space.contains(tgt)


def solve_linear_system(
    rows: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]
) -> tuple[Fraction, ...]:
    """Solve A x = b exactly for square nonsingular A."""
    n = len(rows)
    if any(len(r) != n for r in rows) or len(rhs) != n:
        raise InputError("solve_linear_system needs a square system")
    a = [[Fraction(v) for v in row] + [Fraction(b)] for row, b in zip(rows, rhs)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col]), None)
        if piv is None:
            raise InternalError("singular system in solve_linear_system")
        a[col], a[piv] = a[piv], a[col]
        f = a[col][col]
        a[col] = [v / f for v in a[col]]
        for r in range(n):
            if r != col and a[r][col]:
                g = a[r][col]
                a[r] = [v - g * w for v, w in zip(a[r], a[col])]
    return tuple(a[r][n] for r in range(n))
