"""Dense two-phase primal simplex.

Every estimator in the package reduces to a linear program small enough for a
dense tableau.  The solver returns primal values, one dual value per input
row, and the optimal basis (needed for support-size diagnostics).

Pivoting uses Dantzig's rule.  Within a run of degenerate pivots the bases
visited are remembered; once Dantzig would step back to one of them, Bland's
smallest-index rule takes over until the run ends.  Cycling can only happen
inside such a run, so the solver terminates.  The basis inverse is kept explicitly (revised
simplex) and refactored every ``REFACTOR_EVERY`` pivots.

Dual values follow the marginal convention: ``duals[i]`` is the rate of
change of the optimal objective with respect to ``b[i]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .core import ChoiceError

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-7
COST_TOL = 1e-9
REFACTOR_EVERY = 100

RELATIONS = ("<=", "=", ">=")


class LpError(ChoiceError):
    """The solver could not reach a trustworthy answer (iteration limit, singular basis)."""


class LpCyclingError(LpError):
    pass


class LpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LpProblem:
    """``min/max c.x`` subject to ``A[i].x (rel_i) b[i]`` and ``lower <= x <= upper``."""

    c: np.ndarray
    A: np.ndarray
    relations: tuple[str, ...]
    b: np.ndarray
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    sense: str = "min"

    def __post_init__(self) -> None:
        c = np.asarray(self.c, dtype=float).ravel()
        n = c.size
        A = np.asarray(self.A, dtype=float).reshape(-1, n) if n else np.zeros((len(self.relations), 0))
        b = np.asarray(self.b, dtype=float).ravel()
        if A.shape[0] != b.size or len(self.relations) != b.size:
            raise ValueError("A, relations and b disagree on the number of rows")
        if not np.all(np.isfinite(b)):
            raise ValueError("rhs must be finite")
        if any(r not in RELATIONS for r in self.relations):
            raise ValueError(f"relations must be among {RELATIONS}")
        lower = np.zeros(n) if self.lower is None else np.asarray(self.lower, dtype=float).ravel()
        upper = np.full(n, np.inf) if self.upper is None else np.asarray(self.upper, dtype=float).ravel()
        if lower.size != n or upper.size != n:
            raise ValueError("bounds must match the number of variables")
        if np.any(lower > upper) or np.any(lower == np.inf) or np.any(upper == -np.inf):
            raise ValueError("inconsistent variable bounds")
        if self.sense not in ("min", "max"):
            raise ValueError("sense must be 'min' or 'max'")
        for name, val in (("c", c), ("A", A), ("b", b), ("lower", lower), ("upper", upper)):
            object.__setattr__(self, name, val)
        object.__setattr__(self, "relations", tuple(self.relations))

    @property
    def n_vars(self) -> int:
        return self.c.size

    @property
    def n_rows(self) -> int:
        return self.b.size

    @property
    def rows(self) -> list[tuple[np.ndarray, str, float]]:
        return [(self.A[i], self.relations[i], float(self.b[i])) for i in range(self.n_rows)]


@dataclass(frozen=True)
class LpSolution:
    status: LpStatus
    x: np.ndarray | None = None
    objective: float = math.nan
    duals: np.ndarray | None = None
    basis: tuple[int, ...] = ()
    iterations: int = 0
    phase1_objective: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status is LpStatus.OPTIMAL


class LpBuilder:
    """Assemble an :class:`LpProblem` block by block.

    >>> lp = LpBuilder()
    >>> x = lp.add_vars(2, cost=1.0)
    >>> _ = lp.add_row(x, [1.0, 1.0], ">=", 1.0)
    >>> solve(lp.build()).objective
    1.0
    """

    def __init__(self) -> None:
        self._cost: list[float] = []
        self._lower: list[float] = []
        self._upper: list[float] = []
        self._rows: list[tuple[np.ndarray, np.ndarray]] = []
        self._rel: list[str] = []
        self._rhs: list[float] = []

    @property
    def n_vars(self) -> int:
        return len(self._cost)

    @property
    def n_rows(self) -> int:
        return len(self._rhs)

    def add_vars(self, count: int, *, lower: float = 0.0, upper: float = math.inf,
                 cost: float | Sequence[float] = 0.0) -> np.ndarray:
        start = len(self._cost)
        costs = np.broadcast_to(np.asarray(cost, dtype=float), (count,))
        self._cost.extend(costs.tolist())
        self._lower.extend([lower] * count)
        self._upper.extend([upper] * count)
        return np.arange(start, start + count)

    def set_cost(self, idx, cost) -> None:
        for i, c in zip(np.atleast_1d(idx), np.broadcast_to(cost, np.shape(np.atleast_1d(idx)))):
            self._cost[int(i)] = float(c)

    def add_row(self, idx, coef, relation: str, rhs: float) -> int:
        idx = np.asarray(idx, dtype=int).ravel()
        coef = np.broadcast_to(np.asarray(coef, dtype=float), idx.shape)
        self._rows.append((idx, coef.copy()))
        self._rel.append(relation)
        self._rhs.append(float(rhs))
        return len(self._rhs) - 1

    def build(self, sense: str = "min") -> LpProblem:
        n = len(self._cost)
        A = np.zeros((len(self._rows), n))
        for r, (idx, coef) in enumerate(self._rows):
            np.add.at(A[r], idx, coef)
        return LpProblem(np.array(self._cost), A, tuple(self._rel), np.array(self._rhs),
                         np.array(self._lower), np.array(self._upper), sense)


@dataclass
class _Standard:
    """``min c.z, M z = b, z >= 0`` plus bookkeeping back to the user's variables."""

    M: np.ndarray
    b: np.ndarray
    cost: np.ndarray
    const: float
    n_struct: int
    artificial: np.ndarray
    basis: list[int]
    row_flip: np.ndarray
    n_user_rows: int
    col_var: np.ndarray  # user variable behind each structural column
    col_sign: np.ndarray  # x[col_var[j]] += col_sign[j] * z[j]
    shift: np.ndarray
    sign: float  # -1 for max problems
    stuck: set = field(default_factory=set)


def _standardize(p: LpProblem) -> _Standard:
    n = p.n_vars
    cols: list[tuple[int, float]] = []
    shift = np.zeros(n)
    bound_rows: list[tuple[int, float]] = []
    for k in range(n):
        lo, hi = p.lower[k], p.upper[k]
        if math.isfinite(lo):
            shift[k] = lo
            cols.append((k, 1.0))
            if math.isfinite(hi):
                bound_rows.append((len(cols) - 1, hi - lo))
        elif math.isfinite(hi):
            shift[k] = hi
            cols.append((k, -1.0))
        else:
            cols.append((k, 1.0))
            cols.append((k, -1.0))
    ns = len(cols)
    col_var = np.array([k for k, _ in cols], dtype=int)
    col_sign = np.array([s for _, s in cols])
    sign = -1.0 if p.sense == "max" else 1.0
    A = p.A[:, col_var] * col_sign
    b = p.b - p.A @ shift
    rel = list(p.relations)
    if bound_rows:
        extra = np.zeros((len(bound_rows), ns))
        for r, (j, ub) in enumerate(bound_rows):
            extra[r, j] = 1.0
        A = np.vstack([A, extra])
        b = np.concatenate([b, [ub for _, ub in bound_rows]])
        rel += ["<="] * len(bound_rows)
    m = b.size
    flip = np.where(b < 0, -1.0, 1.0)
    A = A * flip[:, None]
    b = b * flip
    rel = [r if f > 0 else {"<=": ">=", ">=": "<=", "=": "="}[r] for r, f in zip(rel, flip)]

    n_slack = sum(r != "=" for r in rel)
    n_art = sum(r != "<=" for r in rel)
    M = np.zeros((m, ns + n_slack + n_art))
    M[:, :ns] = A
    basis = [-1] * m
    s = ns
    a = ns + n_slack
    art = []
    for i, r in enumerate(rel):
        if r == "<=":
            M[i, s] = 1.0
            basis[i] = s
            s += 1
        elif r == ">=":
            M[i, s] = -1.0
            s += 1
        if r != "<=":
            M[i, a] = 1.0
            basis[i] = a
            art.append(a)
            a += 1
    cost = np.zeros(M.shape[1])
    cost[:ns] = sign * p.c[col_var] * col_sign
    const = sign * float(p.c @ shift)
    return _Standard(M, b, cost, const, ns, np.array(art, dtype=int), basis, flip, p.n_rows,
                     col_var, col_sign, shift, sign)


class SimplexSolver:
    """Single-use solver state for one problem."""

    def __init__(self, problem: LpProblem, *, max_iter: int | None = None, debug: bool = False):
        self.problem = problem
        self.std = _standardize(problem)
        m, ncols = self.std.M.shape
        self.max_iter = max_iter if max_iter is not None else 50_000 + 20 * (m + ncols)
        self.debug = debug
        self.iterations = 0
        # phase 1 accepts artificial residue up to this level, so basic values may sit that far below zero
        self.feas_tol = FEAS_TOL * (1.0 + float(np.max(np.abs(self.std.b), initial=0.0)))

    # -- basis maintenance ---------------------------------------------------
    # Revised simplex: keep B^-1 explicitly, price against the untouched M.

    def _refactor(self) -> None:
        std = self.std
        B = std.M[:, std.basis]
        try:
            self.Binv = np.linalg.inv(B) if std.basis else np.zeros((0, 0))
        except np.linalg.LinAlgError as exc:
            raise LpError("singular basis matrix") from exc
        self.rhs = self.Binv @ std.b
        self._since_refactor = 0

    def _column(self, q: int) -> np.ndarray:
        return self.Binv @ self.std.M[:, q]

    def _row(self, p: int) -> np.ndarray:
        return self.Binv[p] @ self.std.M

    def _pivot(self, p: int, q: int, col: np.ndarray | None = None) -> None:
        col = self._column(q) if col is None else col
        piv = col[p]
        self.Binv[p] /= piv
        self.rhs[p] /= piv
        nz = np.flatnonzero(col)
        nz = nz[nz != p]
        self.Binv[nz] -= col[nz, None] * self.Binv[p]
        self.rhs[nz] -= col[nz] * self.rhs[p]
        self.std.basis[p] = q
        self._since_refactor += 1
        self.iterations += 1
        if self._since_refactor >= REFACTOR_EVERY:
            self._refactor()

    def _run(self, cost: np.ndarray, allowed: np.ndarray) -> LpStatus:
        """Primal simplex from the current (feasible) basis.

        Dantzig pricing; Bland's rule for the rest of a degenerate run as
        soon as a Dantzig pivot would return to a basis visited in the run.
        """
        std = self.std
        seen = {tuple(sorted(std.basis))} if self.debug else set()
        refinements = 0
        in_bland = False
        run_seen: set[tuple[int, ...]] = set()
        while True:
            if self.iterations > self.max_iter:
                raise LpError(f"iteration limit {self.max_iter} reached")
            np.maximum(self.rhs, 0.0, out=self.rhs, where=self.rhs > -self.feas_tol)
            y = cost[std.basis] @ self.Binv
            d = cost - y @ std.M
            cand = np.flatnonzero(allowed & (d < -COST_TOL))
            if cand.size == 0:
                # confirm optimality on a freshly factored basis before returning
                if self._since_refactor == 0 or refinements >= 3:
                    if np.any(self.rhs < -self.feas_tol):
                        raise LpError("lost primal feasibility")
                    return LpStatus.OPTIMAL
                refinements += 1
                self._refactor()
                continue
            bland = in_bland
            while True:
                q = int(cand[0]) if bland else int(cand[np.argmin(d[cand])])
                col = self._column(q)
                rows = np.flatnonzero(col > PIVOT_TOL)
                if rows.size == 0:
                    return LpStatus.UNBOUNDED
                ratios = self.rhs[rows] / col[rows]
                theta = ratios.min()
                ties = rows[ratios <= theta + 1e-12 * (1.0 + abs(theta))]
                if bland:
                    p = int(min(ties, key=lambda i: std.basis[i]))
                else:
                    p = int(ties[np.argmax(col[ties])])
                if theta > PIVOT_TOL or bland:
                    break
                nxt = std.basis.copy()
                nxt[p] = q
                if tuple(sorted(nxt)) not in run_seen:
                    break
                bland = True  # Dantzig would return to a basis of this degenerate run
            if theta <= PIVOT_TOL:
                run_seen.add(tuple(sorted(std.basis)))
                in_bland = bland
            else:
                run_seen.clear()
                in_bland = False
            if self.debug:
                nxt = std.basis.copy()
                nxt[p] = q
                key = tuple(sorted(nxt))
                if key in seen:
                    raise LpCyclingError("basis revisited")
                seen.add(key)
            self._pivot(p, q, col)

    def solve(self) -> LpSolution:
        std = self.std
        m, ncols = std.M.shape
        self._refactor()
        phase1_obj = 0.0
        if std.artificial.size:
            cost1 = np.zeros(ncols)
            cost1[std.artificial] = 1.0
            allowed = np.ones(ncols, dtype=bool)
            self._run(cost1, allowed)
            phase1_obj = float(cost1[std.basis] @ self.rhs)
            if phase1_obj > self.feas_tol:
                return LpSolution(LpStatus.INFEASIBLE, iterations=self.iterations, phase1_objective=phase1_obj)
            self._drive_out_artificials()
        allowed = np.ones(ncols, dtype=bool)
        allowed[std.artificial] = False
        status = self._run(std.cost, allowed)
        if status is LpStatus.UNBOUNDED:
            return LpSolution(LpStatus.UNBOUNDED, iterations=self.iterations, phase1_objective=phase1_obj)
        return self._extract(phase1_obj)

    def _drive_out_artificials(self) -> None:
        std = self.std
        art = set(std.artificial.tolist())
        real = np.ones(std.M.shape[1], dtype=bool)
        real[std.artificial] = False
        for p in range(len(std.basis)):
            if std.basis[p] not in art:
                continue
            row = np.where(real, np.abs(self._row(p)), 0.0)
            q = int(np.argmax(row))
            if row[q] > PIVOT_TOL:
                self._pivot(p, q)
            else:
                std.stuck.add(p)  # redundant row: its artificial stays basic at ~0

    def _extract(self, phase1_obj: float) -> LpSolution:
        std = self.std
        z = np.zeros(std.M.shape[1])
        z[std.basis] = self.rhs
        x = std.shift.copy()
        np.add.at(x, std.col_var, std.col_sign * z[: std.n_struct])
        B = std.M[:, std.basis]
        y = np.linalg.solve(B.T, std.cost[std.basis])
        duals = (y * std.row_flip)[: std.n_user_rows] * std.sign
        objective = float(self.problem.c @ x)
        return LpSolution(LpStatus.OPTIMAL, x=x, objective=objective, duals=duals,
                          basis=tuple(std.basis), iterations=self.iterations,
                          phase1_objective=phase1_obj)


def solve(problem: LpProblem, *, max_iter: int | None = None, debug: bool = False) -> LpSolution:
    """Solve ``problem``; see :class:`LpSolution` for what comes back."""
    return SimplexSolver(problem, max_iter=max_iter, debug=debug).solve()


def primal_residual(problem: LpProblem, x: np.ndarray) -> float:
    """Largest violation of any row or bound at ``x``."""
    ax = problem.A @ x
    worst = 0.0
    for i, rel in enumerate(problem.relations):
        gap = ax[i] - problem.b[i]
        worst = max(worst, -gap if rel == ">=" else gap if rel == "<=" else abs(gap))
    worst = max(worst, float(np.max(problem.lower - x, initial=0.0)), float(np.max(x - problem.upper, initial=0.0)))
    return worst


def dump(problem: LpProblem) -> str:
    """Plain-text rendering, one line per row.

    Format::

        min: 1 x0 + 2 x1
        r0: 1 x0 + 1 x1 >= 3
        bounds: 0 <= x0 <= inf
    """

    def expr(coef: np.ndarray) -> str:
        terms = [f"{v:.12g} x{j}" for j, v in enumerate(coef) if v != 0]
        return " + ".join(terms) if terms else "0"

    lines = [f"{problem.sense}: {expr(problem.c)}"]
    for i, (coef, rel, rhs) in enumerate(problem.rows):
        lines.append(f"r{i}: {expr(coef)} {rel} {rhs:.12g}")
    for j in range(problem.n_vars):
        lines.append(f"bounds: {problem.lower[j]:.12g} <= x{j} <= {problem.upper[j]:.12g}")
    return "\n".join(lines) + "\n"
