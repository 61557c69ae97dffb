"""Dense linear-program kernel over the mass simplex.

Every program here optimizes (or merely satisfies) linear rows over
vectors constrained to ``x >= 0`` and ``sum(x) = 1``, with selected
coordinates pinned to zero (the empty-set coordinate of a mass vector).
The implementation is a textbook two-phase simplex on a dense tableau
with Bland's pivoting rule throughout, so runs are deterministic and
cycling-free.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import IterationLimit, SolverError

PIVOT_TOL = 1e-9
RESIDUAL_TOL = 1e-7
DEFAULT_MAX_PIVOTS = 1_000_000

INFEASIBLE = "infeasible"
FEASIBLE = "feasible"
OPTIMAL = "optimal"

_FLIP = {"<=": ">=", ">=": "<=", "=": "="}


class LinearProgram:
    """Rows over ``num_vars`` simplex-constrained variables.

    ``rows`` is a sequence of ``(coefficients, relop, constant)`` with
    relop one of ``<=``, ``>=``, ``=``.  ``objective`` is an optional
    coefficient vector, maximized unless ``maximize`` is false.
    ``zero_vars`` are coordinate indices pinned to zero.
    """

    __slots__ = ("num_vars", "row_coeffs", "relops", "consts", "objective", "maximize", "zero_vars")

    def __init__(self, num_vars: int, rows: Sequence[tuple], objective=None,
                 *, maximize: bool = True, zero_vars: Sequence[int] = ()):
        self.num_vars = int(num_vars)
        if self.num_vars < 1:
            raise SolverError("a program needs at least one variable")
        coeffs = []
        relops = []
        consts = []
        for row in rows:
            c, op, const = row
            c = np.asarray(c, dtype=float)
            if c.shape != (self.num_vars,):
                raise SolverError(f"row width {c.shape} does not match {self.num_vars} variables")
            if op not in _FLIP:
                raise SolverError(f"unknown relational operator {op!r}")
            if not np.isfinite(c).all() or not np.isfinite(const):
                raise SolverError("row coefficients must be finite")
            coeffs.append(c)
            relops.append(op)
            consts.append(float(const))
        self.row_coeffs = np.array(coeffs, dtype=float) if coeffs else np.zeros((0, self.num_vars))
        self.relops = relops
        self.consts = np.array(consts, dtype=float)
        self.objective = None if objective is None else np.asarray(objective, dtype=float)
        if self.objective is not None and self.objective.shape != (self.num_vars,):
            raise SolverError("objective width does not match the variable count")
        self.maximize = bool(maximize)
        self.zero_vars = tuple(sorted(set(int(z) for z in zero_vars)))


@dataclass(frozen=True, eq=False)
class SolveResult:
    status: str
    value: float | None = None
    point: np.ndarray | None = None
    dual_value: float | None = None
    pivots: int = 0

    @property
    def ok(self) -> bool:
        return self.status != INFEASIBLE


def _pivot(T: np.ndarray, z: np.ndarray, basis: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    factors = T[:, col].copy()
    factors[row] = 0.0
    T -= np.outer(factors, T[row])
    z -= z[col] * T[row]
    basis[row] = col


def _iterate(T: np.ndarray, z: np.ndarray, basis: np.ndarray, budget: int) -> int:
    """Run simplex pivots (minimization) until optimality; returns the
    pivot count.  Bland's rule: first improving column, leaving row by
    minimum ratio with ties broken on the smallest basis variable."""
    pivots = 0
    m = T.shape[0]
    while True:
        improving = np.nonzero(z[:-1] < -PIVOT_TOL)[0]
        if improving.size == 0:
            return pivots
        col = int(improving[0])
        column = T[:, col]
        positive = column > PIVOT_TOL
        if not positive.any():
            raise SolverError("unbounded direction on a simplex-constrained program")
        ratios = np.full(m, np.inf)
        ratios[positive] = T[positive, -1] / column[positive]
        best = ratios.min()
        ties = np.nonzero(ratios <= best + 1e-12)[0]
        row = int(ties[np.argmin(basis[ties])])
        if pivots >= budget:
            raise IterationLimit(f"pivot budget of {budget} exhausted")
        _pivot(T, z, basis, row, col)
        pivots += 1


def solve(lp: LinearProgram, *, max_pivots: int = DEFAULT_MAX_PIVOTS) -> SolveResult:
    """Two-phase simplex.

    Returns ``INFEASIBLE``, ``OPTIMAL`` (with value and point), or, when
    no objective was supplied, ``FEASIBLE`` with a satisfying point.
    Raises :class:`IterationLimit` when the pivot budget runs out, which
    is reported distinctly from infeasibility.
    """
    pinned = set(lp.zero_vars)
    keep = np.array([j for j in range(lp.num_vars) if j not in pinned], dtype=int)
    n = keep.size
    if n == 0:
        raise SolverError("every variable is pinned to zero")

    m = len(lp.relops) + 1
    A = np.zeros((m, n))
    b = np.zeros(m)
    ops = list(lp.relops) + ["="]
    if len(lp.relops):
        A[:-1] = lp.row_coeffs[:, keep]
        b[:-1] = lp.consts
    A[-1] = 1.0
    b[-1] = 1.0
    for i in range(m):
        if b[i] < 0:
            A[i] = -A[i]
            b[i] = -b[i]
            ops[i] = _FLIP[ops[i]]

    n_slack = sum(op != "=" for op in ops)
    n_art = sum(op != "<=" for op in ops)
    total = n + n_slack + n_art
    T = np.zeros((m, total + 1))
    T[:, :n] = A
    T[:, -1] = b
    basis = np.empty(m, dtype=int)
    art_cols: list[int] = []
    si, ai = n, n + n_slack
    for i, op in enumerate(ops):
        if op == "<=":
            T[i, si] = 1.0
            basis[i] = si
            si += 1
        elif op == ">=":
            T[i, si] = -1.0
            si += 1
            T[i, ai] = 1.0
            basis[i] = ai
            art_cols.append(ai)
            ai += 1
        else:
            T[i, ai] = 1.0
            basis[i] = ai
            art_cols.append(ai)
            ai += 1

    A_std = T[:, :total].copy()
    b_std = b.copy()

    # Phase 1: drive the artificial variables to zero.
    art_set = set(art_cols)
    z = np.zeros(total + 1)
    for c in art_cols:
        z[c] = 1.0
    for i in range(m):
        if basis[i] in art_set:
            z -= T[i]
    pivots = _iterate(T, z, basis, max_pivots)
    if -z[-1] > 1e-9:
        return SolveResult(INFEASIBLE, pivots=pivots)

    # Remove artificial variables: pivot basics out on the largest
    # available element (tiny pivots would blow residuals up), dropping
    # numerically redundant rows.
    drop_rows = []
    for i in range(m):
        if basis[i] in art_set:
            row = np.abs(T[i, :n + n_slack])
            col = int(np.argmax(row))
            if row[col] > 1e-7:
                _pivot(T, z, basis, i, col)
            else:
                drop_rows.append(i)
    if drop_rows:
        T = np.delete(T, drop_rows, axis=0)
        basis = np.delete(basis, drop_rows)
        A_std = np.delete(A_std, drop_rows, axis=0)
        b_std = np.delete(b_std, drop_rows)
        m = T.shape[0]
    T = np.hstack([T[:, :n + n_slack], T[:, -1:]])
    total = n + n_slack

    def extract_point() -> np.ndarray:
        x = np.zeros(lp.num_vars)
        for i in range(m):
            if basis[i] < n:
                x[keep[basis[i]]] = T[i, -1]
        return x

    if lp.objective is None:
        point = extract_point()
        _verify(lp, point)
        return SolveResult(FEASIBLE, point=point, pivots=pivots)

    # Phase 2: optimize the caller's objective.
    cost = np.zeros(total + 1)
    struct_cost = lp.objective[keep]
    cost[:n] = -struct_cost if lp.maximize else struct_cost
    z2 = cost.copy()
    for i in range(m):
        if cost[basis[i]] != 0.0:
            z2 -= cost[basis[i]] * T[i]
    pivots += _iterate(T, z2, basis, max_pivots - pivots)

    point = extract_point()
    _verify(lp, point)
    value = float(lp.objective @ point)
    dual = _dual_value(A_std[:, :total], b_std, cost[:total], basis, lp.maximize)
    return SolveResult(OPTIMAL, value=value, point=point, dual_value=dual, pivots=pivots)


def _dual_value(A_std: np.ndarray, b_std: np.ndarray, cost: np.ndarray,
                basis: np.ndarray, maximize: bool) -> float | None:
    """Objective value certified by the final basis multipliers."""
    try:
        B = A_std[:, basis]
        y = np.linalg.solve(B.T, cost[basis])
    except np.linalg.LinAlgError:
        return None
    dual_min = float(y @ b_std)
    return -dual_min if maximize else dual_min


def _verify(lp: LinearProgram, point: np.ndarray) -> None:
    """Surface numerical failures as diagnostics instead of silent garbage."""
    if point.min() < -RESIDUAL_TOL:
        raise SolverError(f"solution has negative coordinate {point.min()}")
    if abs(point.sum() - 1.0) > RESIDUAL_TOL:
        raise SolverError(f"solution mass {point.sum()} drifted from 1")
    if len(lp.relops):
        lhs = lp.row_coeffs @ point
        for i, op in enumerate(lp.relops):
            resid = lhs[i] - lp.consts[i]
            bad = (op == "=" and abs(resid) > RESIDUAL_TOL) or \
                  (op == "<=" and resid > RESIDUAL_TOL) or \
                  (op == ">=" and resid < -RESIDUAL_TOL)
            if bad:
                raise SolverError(f"row {i} violated by {resid} at the returned point")
