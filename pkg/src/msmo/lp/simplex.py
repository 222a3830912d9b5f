"""Two-phase dense tableau simplex.

Variables are first mapped onto nonnegative standard-form columns
(shift for finite lower bounds, reflection for upper-only bounds, a +/- split
for free variables, an extra row for finite upper bounds).  Phase 1 minimises
the sum of artificials; phase 2 optimises the real cost.  Entering columns use
Dantzig's rule until a streak of degenerate pivots, after which Bland's rule
takes over until the objective moves again.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from msmo.lp.problem import LPProblem, SolveResult, Status

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-7
OPT_TOL = 1e-8
DEGENERACY_STREAK = 30


@dataclass
class SimplexOptions:
    pivot_tol: float = PIVOT_TOL
    feas_tol: float = FEAS_TOL
    opt_tol: float = OPT_TOL
    max_iter: int | None = None
    degeneracy_streak: int = DEGENERACY_STREAK


class _StandardForm:
    """x = shift + T @ y with y >= 0;  A_std y = b_std (b_std >= 0)."""

    def __init__(self, p: LPProblem):
        n = p.num_vars
        cols = []  # (original var, sign)
        shift = np.zeros(n)
        ub_rows = []  # (std col, bound)
        for j in range(n):
            lo, hi = p.lower[j], p.upper[j]
            if np.isfinite(lo):
                shift[j] = lo
                cols.append((j, 1.0))
                if np.isfinite(hi):
                    ub_rows.append((len(cols) - 1, hi - lo))
            elif np.isfinite(hi):
                shift[j] = hi
                cols.append((j, -1.0))
            else:
                cols.append((j, 1.0))
                cols.append((j, -1.0))
        ny = len(cols)
        T = np.zeros((n, ny))
        for k, (j, s) in enumerate(cols):
            T[j, k] = s
        self.T = T
        self.shift = shift
        self.ny = ny

        A = p.A @ T
        b = p.rhs - p.A @ shift
        rels = list(p.relations)
        if ub_rows:
            extra = np.zeros((len(ub_rows), ny))
            for r, (k, bound) in enumerate(ub_rows):
                extra[r, k] = 1.0
            A = np.vstack([A, extra])
            b = np.concatenate([b, [bd for _, bd in ub_rows]])
            rels += ["<="] * len(ub_rows)

        m = A.shape[0]
        n_slack = sum(1 for r in rels if r != "=")
        S = np.zeros((m, n_slack))
        slack_sign = np.zeros(m)
        k = 0
        for r, rel in enumerate(rels):
            if rel == "<=":
                S[r, k] = 1.0
                slack_sign[r] = 1.0
                k += 1
            elif rel == ">=":
                S[r, k] = -1.0
                slack_sign[r] = -1.0
                k += 1
        A = np.hstack([A, S])
        flip = b < 0
        A[flip] *= -1.0
        b = np.where(flip, -b, b)
        slack_sign = np.where(flip, -slack_sign, slack_sign)
        self.A = A
        self.b = b
        self.m = m
        self.n_cols = A.shape[1]
        # a row can start with its slack basic when that slack has coefficient +1
        self.slack_col = np.full(m, -1)
        k = 0
        for r, rel in enumerate(rels):
            if rel != "=":
                if slack_sign[r] > 0:
                    self.slack_col[r] = ny + k
                k += 1

        c = p.cost if p.sense == "min" else -p.cost
        self.c = np.concatenate([c @ T, np.zeros(n_slack)])

    def to_original(self, y) -> np.ndarray:
        return self.shift + self.T @ y[: self.ny]


REINVERT_EVERY = 50


class _Tableau:
    def __init__(self, M: np.ndarray, basis: list, opts: SimplexOptions, source=None, cost=None):
        self.M = M  # rows 0..m-1 constraints, last row reduced costs; last column rhs
        self.basis = basis
        self.opts = opts
        self.iterations = 0
        self.source = source  # original [A | b] rows, for periodic reinversion
        self.cost = cost

    def reinvert(self):
        """Rebuild the tableau from the original data and the current basis."""
        if self.source is None:
            return
        A = self.source
        B = A[:, self.basis]
        try:
            body = np.linalg.solve(B, A)
        except np.linalg.LinAlgError:
            return
        if not np.all(np.isfinite(body)):
            return
        body[:, -1] = np.maximum(body[:, -1], 0.0)
        c = np.concatenate([self.cost, [0.0]])
        self.M[:-1] = body
        self.M[-1] = c - c[self.basis] @ body
        self.M[-1, self.basis] = 0.0

    @property
    def m(self):
        return self.M.shape[0] - 1

    def pivot(self, r: int, j: int):
        M = self.M
        M[r] /= M[r, j]
        col = M[:, j].copy()
        col[r] = 0.0
        M -= np.outer(col, M[r])
        M[:, j] = 0.0
        M[r, j] = 1.0
        self.basis[r] = j
        self.iterations += 1

    def run(self, eligible: np.ndarray, max_iter: int):
        """Iterate to optimality; returns 'optimal', 'unbounded' or 'limit'."""
        o = self.opts
        streak = 0
        use_bland = False
        while True:
            if self.iterations >= max_iter:
                return "limit", None
            red = self.M[-1, :-1]
            cand = np.flatnonzero((red < -o.opt_tol) & eligible)
            if cand.size == 0:
                return "optimal", None
            j = int(cand[0]) if use_bland else int(cand[np.argmin(red[cand])])
            col = self.M[:-1, j]
            # entries tiny relative to the column are round-off, not pivots
            pos = np.flatnonzero(col > o.pivot_tol * max(1.0, float(np.abs(col).max())))
            if pos.size == 0:
                return "unbounded", j
            rhs = np.maximum(self.M[:-1, -1], 0.0)
            ratios = rhs[pos] / col[pos]
            best = ratios.min()
            # two-pass (Harris) choice: among nearly tied rows take the largest pivot
            bound = ((rhs[pos] + o.pivot_tol) / col[pos]).min()
            ties = pos[ratios <= bound]
            if ties.size > 1:
                r = int(min(ties, key=lambda i: self.basis[i])) if use_bland else int(ties[np.argmax(col[ties])])
            else:
                r = int(ties[0])
            if best <= o.pivot_tol:
                streak += 1
                if streak >= o.degeneracy_streak:
                    use_bland = True
            else:
                streak = 0
                use_bland = False
            self.pivot(r, j)
            self.M[:-1, -1] = np.maximum(self.M[:-1, -1], 0.0)
            if self.iterations % REINVERT_EVERY == 0:
                self.reinvert()


def solve(p: LPProblem, options: SimplexOptions | None = None) -> SolveResult:
    """Solve ``p`` with the two-phase simplex method."""
    opts = options or SimplexOptions()
    sf = _StandardForm(p)
    m, n = sf.m, sf.n_cols
    max_iter = opts.max_iter or max(1000, 50 * (m + n))

    if m == 0:
        # only sign constraints remain: optimum at y = 0 unless some cost is negative
        neg = np.flatnonzero(sf.c < -opts.opt_tol)
        if neg.size:
            ray = np.zeros(n)
            ray[neg[0]] = 1.0
            return SolveResult(Status.UNBOUNDED, iterations=0, ray=sf.T @ ray[: sf.ny])
        x = sf.to_original(np.zeros(n))
        return SolveResult(Status.OPTIMAL, x, p.objective(x), 0)

    # phase 1
    need_art = [r for r in range(m) if sf.slack_col[r] < 0]
    n_art = len(need_art)
    M = np.zeros((m + 1, n + n_art + 1))
    M[:m, :n] = sf.A
    M[:m, -1] = sf.b
    basis = [int(sf.slack_col[r]) for r in range(m)]
    for k, r in enumerate(need_art):
        M[r, n + k] = 1.0
        basis[r] = n + k
    for r in need_art:
        M[-1] -= M[r]
    for k in range(n_art):
        M[-1, n + k] = 0.0
    source = np.zeros((m, n + n_art + 1))
    source[:, :n] = sf.A
    source[:, -1] = sf.b
    for k, r in enumerate(need_art):
        source[r, n + k] = 1.0
    cost1 = np.concatenate([np.zeros(n), np.ones(n_art)])
    tab = _Tableau(M, basis, opts, source, cost1)
    eligible = np.ones(n + n_art, dtype=bool)
    status, _ = tab.run(eligible, max_iter)
    tab.reinvert()
    if status == "limit":
        return SolveResult(Status.ITERATION_LIMIT, iterations=tab.iterations)
    infeas = -tab.M[-1, -1]
    scale = max(1.0, float(np.max(np.abs(sf.b), initial=0.0)))
    if infeas > opts.feas_tol * scale:
        return SolveResult(Status.INFEASIBLE, iterations=tab.iterations)

    # drive zero-level artificials out of the basis; drop redundant rows
    keep = []
    for r in range(m):
        if tab.basis[r] >= n:
            row = tab.M[r, :n]
            cands = np.flatnonzero(np.abs(row) > opts.pivot_tol)
            if cands.size:
                j = int(cands[np.argmax(np.abs(row[cands]))])
                tab.pivot(r, j)
                keep.append(r)
        else:
            keep.append(r)
    M2 = np.zeros((len(keep) + 1, n + 1))
    M2[:-1, :n] = tab.M[keep, :n]
    M2[:-1, -1] = np.maximum(tab.M[keep, -1], 0.0)
    basis2 = [tab.basis[r] for r in keep]
    M2[-1, :n] = sf.c
    for r, bcol in enumerate(basis2):
        if sf.c[bcol] != 0.0:
            M2[-1] -= sf.c[bcol] * M2[r]
    source2 = np.hstack([sf.A[keep], sf.b[keep, None]])
    tab2 = _Tableau(M2, basis2, opts, source2, sf.c)
    tab2.iterations = tab.iterations
    status, entering = tab2.run(np.ones(n, dtype=bool), max_iter)
    if status == "optimal":
        # confirm optimality on a freshly rebuilt tableau
        tab2.reinvert()
        status, entering = tab2.run(np.ones(n, dtype=bool), max_iter)
    if status == "limit":
        return SolveResult(Status.ITERATION_LIMIT, iterations=tab2.iterations)
    if status == "unbounded":
        d = np.zeros(n)
        d[entering] = 1.0
        for r, bcol in enumerate(tab2.basis):
            d[bcol] = -tab2.M[r, entering]
        return SolveResult(Status.UNBOUNDED, iterations=tab2.iterations, ray=sf.T @ d[: sf.ny])

    y = np.zeros(n)
    basis_cols = list(tab2.basis)
    y[basis_cols] = tab2.M[:-1, -1]
    y = _refine(sf, keep, basis_cols, y, opts)
    x = sf.to_original(y)
    return SolveResult(Status.OPTIMAL, x, p.objective(x), tab2.iterations)


def _refine(sf: _StandardForm, keep, basis_cols, y, opts) -> np.ndarray:
    """Recompute basic values from the original data to shed pivot round-off."""
    B = sf.A[np.ix_(keep, basis_cols)]
    try:
        yb = np.linalg.solve(B, sf.b[keep])
    except np.linalg.LinAlgError:
        return np.maximum(y, 0.0)
    if not np.all(np.isfinite(yb)) or np.any(yb < -opts.feas_tol * 10):
        return np.maximum(y, 0.0)
    out = np.zeros_like(y)
    out[basis_cols] = np.maximum(yb, 0.0)
    # keep the refined point only if it is at least as feasible as the tableau one
    def resid(v):
        return float(np.max(np.abs(sf.A @ v - sf.b), initial=0.0))

    return out if resid(out) <= max(resid(np.maximum(y, 0.0)), opts.feas_tol) else np.maximum(y, 0.0)
