# ratlp.py

import logging
from dataclasses import dataclass, field
from fractions import Fraction as Frac
from typing import List, Optional, Sequence, Tuple

import numpy as np

try:
    from scipy.optimize import linprog
except ImportError:
    linprog = None

Bound = Optional[Frac]
Row = Tuple[List[Frac], str, Frac]

RELATIONS = ("<=", "=", ">=")
DEFAULT_DENOMINATOR_BOUND = 10 ** 4
FLOAT_TOLERANCE = 1e-7


class UncertifiedSolutionError(RuntimeError):
    """An optimum failed its exact primal/dual check."""


# ------------------------------------------------------------------
# DATA MODELS
# ------------------------------------------------------------------

@dataclass
class LinearProgram:
    """
    minimize constant + objective . x
    subject to rows (coefficients, relation, rhs) and lo <= x <= hi,
    where a bound of None is infinite.
    """
    objective: List[Frac]
    constraints: List[Row] = field(default_factory=list)
    bounds: List[Tuple[Bound, Bound]] = field(default_factory=list)
    constant: Frac = Frac(0)

    def __post_init__(self):
        nvars = len(self.objective)
        if not self.bounds:
            self.bounds = [(Frac(0), None)] * nvars
        if len(self.bounds) != nvars:
            raise ValueError("one bound pair per variable is required")
        for coeffs, relation, _ in self.constraints:
            if len(coeffs) != nvars:
                raise ValueError("constraint row length differs from variable count")
            if relation not in RELATIONS:
                raise ValueError(f"unknown relation {relation!r}")
        for lo, hi in self.bounds:
            if lo is not None and hi is not None and lo > hi:
                raise ValueError(f"empty bound interval [{lo}, {hi}]")

    @property
    def num_vars(self) -> int:
        return len(self.objective)


@dataclass
class LpSolution:
    status: str                       # "optimal" | "infeasible" | "unbounded"
    primal: List[Frac] = field(default_factory=list)
    dual: List[Frac] = field(default_factory=list)
    objective_value: Optional[Frac] = None
    method: str = "exact"             # "exact" | "presolve"


# ------------------------------------------------------------------
# PUBLIC API
# ------------------------------------------------------------------

def solve_lp(
    lp: LinearProgram,
    presolve: bool = False,
    denominator_bound: int = DEFAULT_DENOMINATOR_BOUND
) -> LpSolution:
    """
    Exact optimum with a dual certificate, or an exact infeasible /
    unbounded verdict. With presolve, a float HiGHS solution is tried
    first and kept only if it certifies exactly.
    """
    if presolve:
        fast = float_presolve(lp, denominator_bound)
        if fast is not None:
            return fast
    return _certified(lp, _StandardForm(lp).solve())


def verify_solution(lp: LinearProgram, sol: LpSolution) -> bool:
    """Primal feasibility, dual feasibility and equal objectives, exactly."""
    if sol.status != "optimal" or sol.objective_value is None:
        return False
    x, y = sol.primal, sol.dual
    if len(x) != lp.num_vars or len(y) != len(lp.constraints):
        return False

    for value, (lo, hi) in zip(x, lp.bounds):
        if (lo is not None and value < lo) or (hi is not None and value > hi):
            return False
    for (coeffs, relation, rhs), yc in zip(lp.constraints, y):
        lhs = _dot(coeffs, x)
        if relation == "<=" and (lhs > rhs or yc > 0):
            return False
        if relation == ">=" and (lhs < rhs or yc < 0):
            return False
        if relation == "=" and lhs != rhs:
            return False

    dual_value = lp.constant + sum((yc * rhs for (_, _, rhs), yc in zip(lp.constraints, y)), Frac(0))
    for j, (lo, hi) in enumerate(lp.bounds):
        reduced = lp.objective[j] - sum(
            (yc * coeffs[j] for (coeffs, _, _), yc in zip(lp.constraints, y) if coeffs[j]),
            Frac(0)
        )
        if reduced > 0:
            if lo is None:
                return False
            dual_value += reduced * lo
        elif reduced < 0:
            if hi is None:
                return False
            dual_value += reduced * hi

    primal_value = lp.constant + _dot(lp.objective, x)
    return primal_value == dual_value == sol.objective_value


def rationalize(
    x: float,
    bound: int,
    lo: Optional[Frac] = None,
    hi: Optional[Frac] = None
) -> Frac:
    """
    Best rational approximation with denominator <= bound, walking the
    continued-fraction convergents and the last semiconvergent.
    Optional lo/hi clamp the result (weights use [0, 1]).
    """
    if bound < 1:
        raise ValueError("denominator bound must be >= 1")
    target = Frac(x)
    if target.denominator <= bound:
        result = target
    else:
        p0, q0, p1, q1 = 0, 1, 1, 0
        num, den = target.numerator, target.denominator
        while True:
            a = num // den
            q2 = q0 + a * q1
            if q2 > bound:
                break
            p0, q0, p1, q1 = p1, q1, p0 + a * p1, q2
            num, den = den, num - a * den
        k = (bound - q0) // q1
        semi = Frac(p0 + k * p1, q0 + k * q1)
        conv = Frac(p1, q1)
        result = semi if abs(semi - target) < abs(conv - target) else conv
    if lo is not None and result < lo:
        result = lo
    if hi is not None and result > hi:
        result = hi
    return result


def float_presolve(lp: LinearProgram, denominator_bound: int = DEFAULT_DENOMINATOR_BOUND) -> Optional[LpSolution]:
    """
    HiGHS on a float copy, then rationalize and certify; on failure, repair
    on the active set in exact arithmetic. None when nothing certifies.
    """
    result = _highs(lp)
    if result is None:
        return None
    x_float, y_float = result

    x = [rationalize(v, denominator_bound, lo, hi) for v, (lo, hi) in zip(x_float, lp.bounds)]
    y = [rationalize(v, denominator_bound) for v in y_float]
    candidate = LpSolution("optimal", x, y, lp.constant + _dot(lp.objective, x), method="presolve")
    if verify_solution(lp, candidate):
        return candidate

    repaired = _repair_on_active_set(lp, x_float, y_float, x, y)
    if repaired is not None and verify_solution(lp, repaired):
        return repaired
    return None


class ProductionLPSolver:
    """
    FINAL – Certified rational LP engine
    Float pre-solve is an accelerator only; every optimum leaving this
    class has passed verify_solution.
    """

    def __init__(self, presolve: bool = True, denominator_bound: int = DEFAULT_DENOMINATOR_BOUND):
        self.presolve = presolve and linprog is not None
        self.denominator_bound = denominator_bound
        self.logger = self._setup_logging()
        self.stats = {"presolve_hits": 0, "exact_solves": 0}

    # ------------------------------------------------------------------
    # PUBLIC API
    # ------------------------------------------------------------------

    def solve(self, lp: LinearProgram) -> LpSolution:
        if self.presolve:
            fast = float_presolve(lp, self.denominator_bound)
            if fast is not None:
                self.stats["presolve_hits"] += 1
                return fast
            self.logger.debug("Float pre-solve did not certify; running exact simplex")

        sol = _StandardForm(lp).solve()
        self.stats["exact_solves"] += 1
        return _certified(lp, sol)

    def solve_primal(self, lp: LinearProgram) -> Optional[List[Frac]]:
        """
        Any exactly feasible point with the float optimum's support, skipping
        the dual certificate. None when the float route does not produce one.
        """
        if not self.presolve:
            return None
        result = _highs(lp)
        if result is None:
            return None
        x_float, y_float = result
        x = [rationalize(v, self.denominator_bound, lo, hi) for v, (lo, hi) in zip(x_float, lp.bounds)]
        if _primal_feasible(lp, x):
            return x
        repaired = _repair_on_active_set(lp, x_float, y_float, x, [Frac(0)] * len(lp.constraints))
        if repaired is not None and _primal_feasible(lp, repaired.primal):
            return repaired.primal
        return None

    # ------------------------------------------------------------------
    # INTERNAL HELPERS
    # ------------------------------------------------------------------

    def _setup_logging(self):
        logger = logging.getLogger("LPSolver")
        if not logger.handlers:
            handler = logging.StreamHandler()
            formatter = logging.Formatter(
                "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
            )
            handler.setFormatter(formatter)
            logger.addHandler(handler)
            logger.setLevel(logging.INFO)
        return logger


# ------------------------------------------------------------------
# EXACT SIMPLEX
# ------------------------------------------------------------------

class BoundedSimplexTableau:
    """
    Dense rational tableau for  min cost . y,  T y = rhs,  0 <= y <= upper.
    Nonbasic columns sit at 0 or at their upper bound; Bland's rule picks
    both the entering column and, among ratio-test ties, the leaving one.
    """

    def __init__(self, rows: List[List[Frac]], rhs: List[Frac], upper: List[Bound], basis: List[int]):
        self.T = rows
        self.val = list(rhs)
        self.upper = upper
        self.basis = basis
        self.ncols = len(upper)
        self.is_basic = [False] * self.ncols
        for b in basis:
            self.is_basic[b] = True
        self.at_upper = [False] * self.ncols
        self.d: List[Frac] = [Frac(0)] * self.ncols
        self.blocked = [False] * self.ncols

    def set_cost(self, cost: List[Frac]):
        d = list(cost)
        for i, b in enumerate(self.basis):
            cb = cost[b]
            if cb:
                row = self.T[i]
                for k in range(self.ncols):
                    if row[k]:
                        d[k] -= cb * row[k]
        self.d = d

    def run(self) -> str:
        while True:
            j = self._entering()
            if j is None:
                return "optimal"
            if not self._step(j):
                return "unbounded"

    def values(self) -> List[Frac]:
        out = [self.upper[k] if self.at_upper[k] else Frac(0) for k in range(self.ncols)]
        for i, b in enumerate(self.basis):
            out[b] = self.val[i]
        return out

    def _entering(self) -> Optional[int]:
        for k in range(self.ncols):
            if self.is_basic[k] or self.blocked[k] or self.upper[k] == 0:
                continue
            dk = self.d[k]
            if (dk < 0 and not self.at_upper[k]) or (dk > 0 and self.at_upper[k]):
                return k
        return None

    def _step(self, j: int) -> bool:
        delta = -1 if self.at_upper[j] else 1
        theta = self.upper[j]
        leave_row, leave_to_upper = None, False

        for i, row in enumerate(self.T):
            a = row[j]
            if not a:
                continue
            rate = -delta * a
            b = self.basis[i]
            if rate < 0:
                t, to_upper = self.val[i] / -rate, False
            else:
                ub = self.upper[b]
                if ub is None:
                    continue
                t, to_upper = (ub - self.val[i]) / rate, True
            if theta is None or t < theta:
                theta, leave_row, leave_to_upper = t, i, to_upper
            elif t == theta and leave_row is not None and b < self.basis[leave_row]:
                leave_row, leave_to_upper = i, to_upper

        if theta is None:
            return False

        if theta:
            for i, row in enumerate(self.T):
                if row[j]:
                    self.val[i] -= delta * row[j] * theta

        if leave_row is None:
            self.at_upper[j] = not self.at_upper[j]
            return True

        entering_value = theta if delta == 1 else self.upper[j] - theta
        leaving = self.basis[leave_row]
        self._pivot(leave_row, j)
        self.basis[leave_row] = j
        self.is_basic[j], self.is_basic[leaving] = True, False
        self.at_upper[leaving] = leave_to_upper
        self.at_upper[j] = False
        self.val[leave_row] = entering_value
        return True

    def _pivot(self, r: int, j: int):
        prow = self.T[r]
        piv = prow[j]
        if piv != 1:
            prow = [x / piv if x else x for x in prow]
            self.T[r] = prow
        nz = [k for k, x in enumerate(prow) if x]
        for i, row in enumerate(self.T):
            if i == r:
                continue
            f = row[j]
            if f:
                for k in nz:
                    row[k] -= f * prow[k]
        f = self.d[j]
        if f:
            for k in nz:
                self.d[k] -= f * prow[k]


class _StandardForm:
    """Maps a LinearProgram onto a BoundedSimplexTableau and back."""

    def __init__(self, lp: LinearProgram):
        self.lp = lp
        # x_j = offset_j + sum(sign * y_k) over the internal columns of j
        self.offset: List[Frac] = []
        self.columns: List[Tuple[int, int, Bound]] = []   # (variable, sign, upper)
        for j, (lo, hi) in enumerate(lp.bounds):
            if lo is not None:
                self.offset.append(lo)
                self.columns.append((j, 1, None if hi is None else hi - lo))
            elif hi is not None:
                self.offset.append(hi)
                self.columns.append((j, -1, None))
            else:
                self.offset.append(Frac(0))
                self.columns.append((j, 1, None))
                self.columns.append((j, -1, None))

        # every relation becomes one or two "<=" rows
        self.rows: List[Tuple[List[Frac], Frac, int, int]] = []   # (coeffs over y, rhs, constraint, sign)
        for c, (coeffs, relation, rhs) in enumerate(lp.constraints):
            shifted = rhs - _dot(coeffs, self.offset)
            internal = [coeffs[j] * s for j, s, _ in self.columns]
            if relation in ("<=", "="):
                self.rows.append((internal, shifted, c, 1))
            if relation in (">=", "="):
                self.rows.append(([-v for v in internal], -shifted, c, -1))

    def solve(self) -> LpSolution:
        ny, nr = len(self.columns), len(self.rows)
        artificial_rows = [i for i, (_, rhs, _, _) in enumerate(self.rows) if rhs < 0]
        ncols = ny + nr + len(artificial_rows)

        tableau, rhs_values, basis = [], [], []
        upper: List[Bound] = [u for _, _, u in self.columns] + [None] * (nr + len(artificial_rows))
        art_col = {i: ny + nr + t for t, i in enumerate(artificial_rows)}
        for i, (coeffs, rhs, _, _) in enumerate(self.rows):
            row = [Frac(0)] * ncols
            sign = -1 if i in art_col else 1
            for k, v in enumerate(coeffs):
                if v:
                    row[k] = sign * v
            row[ny + i] = Frac(sign)
            if i in art_col:
                row[art_col[i]] = Frac(1)
                basis.append(art_col[i])
            else:
                basis.append(ny + i)
            tableau.append(row)
            rhs_values.append(sign * rhs)

        tab = BoundedSimplexTableau(tableau, rhs_values, upper, basis)

        if artificial_rows:
            phase_one = [Frac(0)] * ncols
            for col in art_col.values():
                phase_one[col] = Frac(1)
            tab.set_cost(phase_one)
            tab.run()
            if sum((tab.values()[col] for col in art_col.values()), Frac(0)) > 0:
                return LpSolution("infeasible")
            for col in art_col.values():
                tab.upper[col] = Frac(0)
                tab.blocked[col] = True

        cost = [self.lp.objective[j] * s for j, s, _ in self.columns] + [Frac(0)] * (ncols - ny)
        tab.set_cost(cost)
        if tab.run() == "unbounded":
            return LpSolution("unbounded")

        y = tab.values()
        x = list(self.offset)
        for k, (j, s, _) in enumerate(self.columns):
            if y[k]:
                x[j] += s * y[k]

        duals = [Frac(0)] * len(self.lp.constraints)
        for i, (_, _, c, s) in enumerate(self.rows):
            duals[c] += s * -tab.d[ny + i]

        value = self.lp.constant + _dot(self.lp.objective, x)
        return LpSolution("optimal", x, duals, value, method="exact")


# ------------------------------------------------------------------
# FLOAT PRE-SOLVE HELPERS
# ------------------------------------------------------------------

def _highs(lp: LinearProgram) -> Optional[Tuple[List[float], List[float]]]:
    if linprog is None or lp.num_vars == 0:
        return None
    ub_rows, ub_rhs, ub_index = [], [], []
    eq_rows, eq_rhs, eq_index = [], [], []
    for c, (coeffs, relation, rhs) in enumerate(lp.constraints):
        if relation == "=":
            eq_rows.append([float(v) for v in coeffs])
            eq_rhs.append(float(rhs))
            eq_index.append(c)
        else:
            s = 1.0 if relation == "<=" else -1.0
            ub_rows.append([s * float(v) for v in coeffs])
            ub_rhs.append(s * float(rhs))
            ub_index.append((c, s))

    res = linprog(
        np.array([float(v) for v in lp.objective]),
        A_ub=np.array(ub_rows) if ub_rows else None,
        b_ub=np.array(ub_rhs) if ub_rows else None,
        A_eq=np.array(eq_rows) if eq_rows else None,
        b_eq=np.array(eq_rhs) if eq_rows else None,
        bounds=[(None if lo is None else float(lo), None if hi is None else float(hi)) for lo, hi in lp.bounds],
        method="highs-ds",
    )
    if res.status != 0:
        return None

    duals = [0.0] * len(lp.constraints)
    if ub_rows:
        for (c, s), marginal in zip(ub_index, res.ineqlin.marginals):
            duals[c] = s * float(marginal)
    if eq_rows:
        for c, marginal in zip(eq_index, res.eqlin.marginals):
            duals[c] = float(marginal)
    return [float(v) for v in res.x], duals


def _repair_on_active_set(
    lp: LinearProgram,
    x_float: Sequence[float],
    y_float: Sequence[float],
    x_guess: List[Frac],
    y_guess: List[Frac]
) -> Optional[LpSolution]:
    """
    Re-solve the float optimum's active set exactly: variables at a bound
    stay there, tight rows become equations, and the duals of slack rows
    are zero.
    """
    x = list(x_guess)
    free = []
    for j, ((lo, hi), v) in enumerate(zip(lp.bounds, x_float)):
        if lo is not None and abs(v - float(lo)) <= FLOAT_TOLERANCE:
            x[j] = lo
        elif hi is not None and abs(v - float(hi)) <= FLOAT_TOLERANCE:
            x[j] = hi
        else:
            free.append(j)

    tight = []
    for c, (coeffs, relation, rhs) in enumerate(lp.constraints):
        lhs = sum(float(a) * v for a, v in zip(coeffs, x_float) if a)
        if relation == "=" or abs(lhs - float(rhs)) <= FLOAT_TOLERANCE:
            tight.append(c)

    if free:
        system, rhs_values = [], []
        for c in tight:
            coeffs, _, rhs = lp.constraints[c]
            fixed = sum((coeffs[j] * x[j] for j in range(lp.num_vars) if j not in free and coeffs[j]), Frac(0))
            system.append([coeffs[j] for j in free])
            rhs_values.append(rhs - fixed)
        solved = _solve_linear(system, rhs_values, [x[j] for j in free])
        if solved is None:
            return None
        for j, v in zip(free, solved):
            x[j] = v

    y = [Frac(0)] * len(lp.constraints)
    if tight:
        system = [[lp.constraints[c][0][j] for c in tight] for j in free]
        rhs_values = [lp.objective[j] for j in free]
        guess = [y_guess[c] for c in tight]
        solved = _solve_linear(system, rhs_values, guess) if system else guess
        if solved is None:
            return None
        for c, v in zip(tight, solved):
            y[c] = v

    return LpSolution("optimal", x, y, lp.constant + _dot(lp.objective, x), method="presolve")


def _solve_linear(system: List[List[Frac]], rhs: List[Frac], guess: List[Frac]) -> Optional[List[Frac]]:
    """Gauss-Jordan; free unknowns keep their guessed value. None if inconsistent."""
    ncols = len(guess)
    rows = [list(r) + [b] for r, b in zip(system, rhs)]
    pivots: List[int] = []
    r = 0
    for col in range(ncols):
        p = next((i for i in range(r, len(rows)) if rows[i][col]), None)
        if p is None:
            continue
        rows[r], rows[p] = rows[p], rows[r]
        piv = rows[r][col]
        rows[r] = [v / piv for v in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][col]:
                f = rows[i][col]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(col)
        r += 1
        if r == len(rows):
            break
    for i in range(r, len(rows)):
        if rows[i][ncols]:
            return None

    solution = list(guess)
    pivot_set = set(pivots)
    for i, col in enumerate(pivots):
        value = rows[i][ncols]
        for k in range(ncols):
            if k not in pivot_set and rows[i][k]:
                value -= rows[i][k] * solution[k]
        solution[col] = value
    return solution


def _certified(lp: LinearProgram, sol: LpSolution) -> LpSolution:
    if sol.status == "optimal" and not verify_solution(lp, sol):
        raise UncertifiedSolutionError(f"{sol.method} solution fails its own certificate")
    return sol


def _primal_feasible(lp: LinearProgram, x: Sequence[Frac]) -> bool:
    for value, (lo, hi) in zip(x, lp.bounds):
        if (lo is not None and value < lo) or (hi is not None and value > hi):
            return False
    for coeffs, relation, rhs in lp.constraints:
        lhs = _dot(coeffs, x)
        if (relation == "<=" and lhs > rhs) or (relation == ">=" and lhs < rhs) or (relation == "=" and lhs != rhs):
            return False
    return True


def _dot(a: Sequence[Frac], b: Sequence[Frac]) -> Frac:
    return sum((x * y for x, y in zip(a, b) if x and y), Frac(0))
