"""Exact rational linear constraint solving.

Feasibility problems are solved by a phase-1 primal simplex with Bland's
anti-cycling rule over a fraction-free integer tableau, so results are
exact and deterministic.  On top of plain feasibility this module offers
the "maximize the number of strict inequalities" objective needed by the
bound analysis: strictness is normalized to "slack >= 1", which is
equivalent for solution sets closed under addition and positive scaling,
and the unique maximal strict set is found by tightening one candidate row
at a time; closure under addition guarantees all achievable tightenings
can then be solved at once.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm
from typing import Optional, Sequence


GE = ">="
EQ = "=="


class LpError(Exception):
    """Malformed problem or violated solver precondition."""


class LpInternalError(LpError):
    """A derived solution violates a row: the problem was not closed under
    addition (precondition violation), or the solver is buggy."""


@dataclass(frozen=True)
class LpRow:
    coeffs: tuple[Fraction, ...]
    relation: str
    rhs: Fraction

    @staticmethod
    def of(coeffs: Sequence, relation: str, rhs=0) -> "LpRow":
        return LpRow(tuple(Fraction(c) for c in coeffs), relation, Fraction(rhs))


@dataclass(frozen=True)
class LpProblem:
    """Constraint rows over named variables, each either free or >= 0.

    `strict_candidates` are indices of `>=` rows that the maximization
    objective may tighten to slack >= 1.
    """

    variables: tuple[str, ...]
    nonneg: tuple[bool, ...]
    rows: tuple[LpRow, ...]
    strict_candidates: frozenset[int] = frozenset()

    def __post_init__(self):
        if len(self.nonneg) != len(self.variables):
            raise LpError("sign flags do not match variables")
        for row in self.rows:
            if len(row.coeffs) != len(self.variables):
                raise LpError("row arity does not match variables")
            if row.relation not in (GE, EQ):
                raise LpError(f"bad relation {row.relation!r}")
        for i in self.strict_candidates:
            if not (0 <= i < len(self.rows)) or self.rows[i].relation != GE:
                raise LpError(f"strict candidate {i} is not a '>=' row")

    def tightened(self, row_index: int) -> "LpProblem":
        """Copy with one row's right-hand side raised by 1 (slack >= 1)."""
        rows = list(self.rows)
        row = rows[row_index]
        rows[row_index] = LpRow(row.coeffs, row.relation, row.rhs + 1)
        return LpProblem(self.variables, self.nonneg, tuple(rows), frozenset())


@dataclass(frozen=True)
class LpSolution:
    """A rational assignment satisfying every row of its problem.

    `strict_set` lists candidate rows satisfied with slack >= 1.
    """

    assignment: dict[str, Fraction]
    strict_set: frozenset[int] = frozenset()

    def vector(self, variables: Sequence[str]) -> tuple[Fraction, ...]:
        return tuple(self.assignment[x] for x in variables)


def _row_value(row: LpRow, values: Sequence[Fraction]) -> Fraction:
    return sum((c * v for c, v in zip(row.coeffs, values)), Fraction(0))


def satisfies(problem: LpProblem, values: Sequence[Fraction]) -> bool:
    """Exact check of every row (no tolerances)."""
    for row in problem.rows:
        lhs = _row_value(row, values)
        if row.relation == GE and lhs < row.rhs:
            return False
        if row.relation == EQ and lhs != row.rhs:
            return False
    return True


def _reduce_row(row: list[int]) -> list[int]:
    g = 0
    for a in row:
        g = gcd(g, a)
        if g == 1:
            return row
    if g > 1:
        return [a // g for a in row]
    return row


def _phase_one(columns: list[tuple[Fraction, ...]], rhs: list[Fraction]) -> Optional[list[Fraction]]:
    """Solve A x = b, x >= 0 for feasibility; returns x or None.

    Fraction-free tableau: every row is an integer vector that may carry an
    arbitrary positive scale, so pivoting uses integer cross-elimination
    followed by a gcd reduction, and ratio comparisons cross-multiply.
    Bland's rule (smallest eligible index) on entering and leaving variables
    keeps the pivoting finite and deterministic.
    """
    m = len(rhs)
    n = len(columns)
    denominators = [f.denominator for col in columns for f in col]
    denominators.extend(f.denominator for f in rhs)
    scale = lcm(*denominators) if denominators else 1
    # Tableau rows: structural columns, then artificial identity, then rhs;
    # rows are flipped so the rhs is non-negative.
    tableau: list[list[int]] = []
    for i in range(m):
        sign = -1 if rhs[i] < 0 else 1
        row = [sign * int(col[i] * scale) for col in columns]
        row.extend(1 if j == i else 0 for j in range(m))
        row.append(sign * int(rhs[i] * scale))
        tableau.append(_reduce_row(row))
    basis = [n + i for i in range(m)]
    # Phase-1 objective: minimize the sum of artificials.  The objective row
    # starts as cost minus the sum of constraint rows (pricing out the
    # artificial basis); its scale stays positive throughout.
    obj = [0] * (n + m + 1)
    for j in range(n + m):
        cost = 1 if j >= n else 0
        obj[j] = cost - sum(tableau[i][j] for i in range(m))
    obj[-1] = -sum(tableau[i][-1] for i in range(m))
    obj = _reduce_row(obj)

    while True:
        entering = -1
        for j in range(n + m):
            if obj[j] < 0:
                entering = j
                break
        if entering < 0:
            break
        pivot_row = -1
        best_num = best_den = 0
        for i in range(m):
            a = tableau[i][entering]
            if a > 0:
                num, den = tableau[i][-1], a
                if pivot_row < 0 or num * best_den < best_num * den or (
                        num * best_den == best_num * den and basis[i] < basis[pivot_row]):
                    best_num, best_den = num, den
                    pivot_row = i
        if pivot_row < 0:
            raise LpInternalError("phase-1 objective unbounded")
        pivot = tableau[pivot_row]
        piv = pivot[entering]
        for i in range(m):
            if i != pivot_row and tableau[i][entering] != 0:
                f = tableau[i][entering]
                tableau[i] = _reduce_row(
                    [piv * a - f * b for a, b in zip(tableau[i], pivot)])
        if obj[entering] != 0:
            f = obj[entering]
            obj = _reduce_row([piv * a - f * b for a, b in zip(obj, pivot)])
        basis[pivot_row] = entering

    if obj[-1] != 0:
        return None
    values = [Fraction(0)] * n
    for i, b in enumerate(basis):
        if b < n:
            values[b] = Fraction(tableau[i][-1], tableau[i][b])
    return values


def lp_feasible(problem: LpProblem) -> Optional[LpSolution]:
    """Some exact rational solution of the problem, or None if infeasible."""
    columns: list[tuple[Fraction, ...]] = []
    # (variable index, sign) per simplex column; free variables are split.
    origin: list[tuple[int, int]] = []
    nrows = len(problem.rows)
    for idx, (name, nn) in enumerate(zip(problem.variables, problem.nonneg)):
        col = tuple(row.coeffs[idx] for row in problem.rows)
        columns.append(col)
        origin.append((idx, 1))
        if not nn:
            columns.append(tuple(-c for c in col))
            origin.append((idx, -1))
    for i, row in enumerate(problem.rows):
        if row.relation == GE:
            columns.append(tuple(Fraction(-1) if j == i else Fraction(0)
                                 for j in range(nrows)))
            origin.append((-1, 0))

    raw = _phase_one(columns, [row.rhs for row in problem.rows])
    if raw is None:
        return None
    values = [Fraction(0)] * len(problem.variables)
    for column_value, (var_idx, sign) in zip(raw, origin):
        if var_idx >= 0:
            values[var_idx] += sign * column_value
    if not satisfies(problem, values):
        raise LpInternalError("simplex produced a non-solution")
    return LpSolution(dict(zip(problem.variables, values)))


def _tightened_all(problem: LpProblem, indices) -> LpProblem:
    rows = list(problem.rows)
    for i in indices:
        rows[i] = LpRow(rows[i].coeffs, rows[i].relation, rows[i].rhs + 1)
    return LpProblem(problem.variables, problem.nonneg, tuple(rows), frozenset())


def max_strict_set(problem: LpProblem) -> LpSolution:
    """A solution attaining the unique maximal set of strict candidate rows.

    Requires the solution set to be closed under addition (all rows
    homogeneous in the intended use).  Each candidate row is tightened to
    slack >= 1 and solved on its own to decide membership; closure under
    addition makes the union of the feasible candidates jointly achievable,
    so the returned assignment is a basic solution of the system with every
    member row tightened at once (a small representative; the sum of the
    per-row solutions would do as well but carries large entries).
    """
    base = lp_feasible(problem)
    if base is None:
        raise LpError("problem is infeasible")
    total = dict(base.assignment)
    strict = []
    for i in sorted(problem.strict_candidates):
        row = problem.rows[i]
        # The running sum is itself a solution, so a slack it already
        # achieves proves the candidate feasible without a solve.
        if _row_value(row, [total[x] for x in problem.variables]) >= row.rhs + 1:
            strict.append(i)
            continue
        sol = lp_feasible(problem.tightened(i))
        if sol is None:
            continue
        strict.append(i)
        for name, value in sol.assignment.items():
            total[name] += value
    joint = lp_feasible(_tightened_all(problem, strict))
    if joint is None:
        raise LpInternalError("jointly tightened strict rows are infeasible")
    values = [joint.assignment[x] for x in problem.variables]
    if not satisfies(problem, values):
        raise LpInternalError("joint solution violates a row")
    for i in strict:
        row = problem.rows[i]
        if _row_value(row, values) < row.rhs + 1:
            raise LpInternalError(f"joint solution lost strictness of row {i}")
    return LpSolution(joint.assignment, frozenset(strict))


def scale_to_integer(problem: LpProblem, solution: LpSolution) -> LpSolution:
    """Scale a solution of a homogeneous problem by the LCM of denominators.

    Satisfaction of every row and membership of the strict set are
    preserved because scaling by a positive integer fixes homogeneous rows
    and can only widen slacks that were already >= 1.
    """
    for row in problem.rows:
        if row.rhs != 0 and not (row.relation == GE and row.rhs == 1):
            raise LpError("scaling needs homogeneous rows")
    factor = lcm(*(v.denominator for v in solution.assignment.values())) \
        if solution.assignment else 1
    scaled = {name: value * factor for name, value in solution.assignment.items()}
    values = [scaled[x] for x in problem.variables]
    if not satisfies(problem, values):
        raise LpInternalError("integer scaling broke a row")
    return LpSolution(scaled, solution.strict_set)


def dump_problem(problem: LpProblem) -> str:
    """Plain-text `rows:` dump for bug reports."""
    out = ["vars: " + " ".join(
        (name if nn else f"{name}(free)")
        for name, nn in zip(problem.variables, problem.nonneg))]
    out.append("rows:")
    for i, row in enumerate(problem.rows):
        terms = " + ".join(f"{c}*{x}" for c, x in zip(row.coeffs, problem.variables) if c != 0)
        mark = " [strict?]" if i in problem.strict_candidates else ""
        out.append(f"  {i}: {terms or '0'} {row.relation} {row.rhs}{mark}")
    return "\n".join(out) + "\n"
