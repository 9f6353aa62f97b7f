"""Additive regraduation: find xi with xi(S(x, y)) = xi(x) + xi(y).

Two solvers share one result type:

* ``solve_constraints`` treats each distinct amplitude met in a set of states
  as an unknown and solves the homogeneous linear system
  ``xi(joint) - xi(first) - xi(second) = 0`` with ``xi(anchor) = 1``.
* ``regraduate_combinator`` does the same on a real grid for a closed-form
  combinator, reading xi between knots by piecewise-linear interpolation.

Any solution can be rescaled, so results are reported with xi(anchor) = 1.
When that is infeasible the result is only called Trivial if the system has
no non-zero solution at all.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.spatial import cKDTree

from . import _kernels
from .analysis import CombinatorRule, check_associativity, pair_phis
from .errors import DomainEscape, NonMonotone, NotAssociative, SingularSystem
from .theory import Theory, WaveState

MERGE_TOL = 1e-10
FEASIBILITY_TOL = 1e-6
TRIVIALITY_TOL = 1e-8
RCOND_MIN = 1e-10


# -- xi tables ----------------------------------------------------------------

@dataclass
class XiTable:
    """Sampled xi.

    ``interval`` tables hold increasing real knots and interpolate linearly
    between them; ``points`` tables hold isolated complex points and only
    answer at those points (within ``merge_tol``).
    """

    kind: str
    knots: np.ndarray
    values: np.ndarray
    merge_tol: float = MERGE_TOL

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.kind == "interval":
            self.knots = np.asarray(self.knots, dtype=float)
            if np.any(np.diff(self.knots) <= 0):
                raise ValueError("interval knots must be strictly increasing")
        elif self.kind == "points":
            self.knots = np.asarray(self.knots, dtype=np.complex128)
        else:
            raise ValueError(f"unknown xi table kind {self.kind!r}")

    @property
    def domain(self):
        if self.kind == "interval":
            return float(self.knots[0]), float(self.knots[-1])
        return None

    def scaled(self, c: float) -> "XiTable":
        return XiTable(self.kind, self.knots, c * self.values, self.merge_tol)

    def __call__(self, t):
        t = np.asarray(t, dtype=np.complex128)
        flat = t.ravel()
        if self.kind == "interval":
            lo, hi = self.domain
            slack = 1e-12 * max(1.0, hi - lo)
            outside = (np.abs(flat.imag) > slack) | (flat.real < lo - slack) | (flat.real > hi + slack)
            if outside.any():
                raise DomainEscape(f"{int(outside.sum())} value(s) outside the xi domain [{lo:g}, {hi:g}]",
                                   flat[outside][:10])
            return np.interp(flat.real, self.knots, self.values).reshape(t.shape)
        tree = cKDTree(np.column_stack([self.knots.real, self.knots.imag]))
        dist, idx = tree.query(np.column_stack([flat.real, flat.imag]))
        outside = dist > self.merge_tol
        if outside.any():
            raise DomainEscape(f"{int(outside.sum())} value(s) are not points of the xi table",
                               flat[outside][:10])
        return self.values[idx].reshape(t.shape)


@dataclass
class RegraduationResult:
    status: str  # "Found" | "Trivial"
    xi: XiTable
    additivity_residual: float
    anchor: complex
    anchor_value: float = 1.0
    constrained_fit: XiTable | None = None
    constrained_residual: float = 0.0
    unconstrained_sup: float | None = None
    min_singular_value: float | None = None
    details: dict = field(default_factory=dict)

    @property
    def found(self) -> bool:
        return self.status == "Found"


# -- constraint systems from states -------------------------------------------

@dataclass
class ConstraintSet:
    """Unknowns ``xi(points[k])``; row ``(u, v, w)`` reads xi(u) = xi(v) + xi(w)."""

    points: np.ndarray
    equations: np.ndarray
    merge_tol: float = MERGE_TOL
    states: list = field(default_factory=list)

    def __len__(self):
        return len(self.equations)

    def matrix(self) -> np.ndarray:
        A = np.zeros((len(self.equations), len(self.points)))
        rows = np.arange(len(self.equations))
        if len(rows):
            np.add.at(A, (rows, self.equations[:, 0]), 1.0)
            np.add.at(A, (rows, self.equations[:, 1]), -1.0)
            np.add.at(A, (rows, self.equations[:, 2]), -1.0)
        return A

    def index_of(self, value: complex) -> int:
        d = np.abs(self.points - complex(value))
        k = int(np.argmin(d)) if len(d) else -1
        if k < 0 or d[k] > self.merge_tol:
            raise ValueError(f"{value} is not an unknown of this system")
        return k


def _merge_points(values: np.ndarray, tol: float):
    """Greedy clustering in input order; returns (representatives, labels)."""
    tree = cKDTree(np.column_stack([values.real, values.imag]))
    labels = np.full(values.size, -1, dtype=np.int64)
    reps = []
    for i in range(values.size):
        if labels[i] >= 0:
            continue
        for j in tree.query_ball_point([values[i].real, values[i].imag], tol):
            if labels[j] < 0:
                labels[j] = len(reps)
        reps.append(values[i])
    return np.array(reps, dtype=np.complex128), labels


def build_constraints(theory: Theory, states, slits, merge_tol: float = MERGE_TOL) -> ConstraintSet:
    """One equation xi(phi(a v a')) = xi(phi(a)) + xi(phi(a')) per state."""
    states = list(states)
    if not states:
        raise ValueError("need at least one state")
    vals = []
    for s in states:
        pa, pb, pab = pair_phis(theory, s, slits)
        vals += [pab, pa, pb]
    points, labels = _merge_points(np.array(vals, dtype=np.complex128), merge_tol)
    return ConstraintSet(points, labels.reshape(-1, 3), merge_tol, states)


def _null_projection(A, x):
    """Project ``x`` onto the numerical null space of ``A``; also return sigma_min."""
    _, s, vt = np.linalg.svd(A)
    sig = np.zeros(A.shape[1])
    sig[: s.size] = s
    thr = max(A.shape) * np.finfo(float).eps * sig.max()
    null = vt[sig <= thr]
    return null.T @ (null @ x), float(sig.min())


def solve_constraints(cs: ConstraintSet, anchor: complex, tol: float = FEASIBILITY_TOL,
                      trivial_tol: float = TRIVIALITY_TOL) -> RegraduationResult:
    """Anchored least squares; Found, Trivial, or SingularSystem."""
    if len(cs) == 0:
        raise SingularSystem("no equations")
    a = cs.index_of(anchor)
    A = cs.matrix()
    n = A.shape[1]
    rest = [k for k in range(n) if k != a]
    xi = np.zeros(n)
    xi[a] = 1.0
    if rest:
        sol, *_ = np.linalg.lstsq(A[:, rest], -A[:, a], rcond=None)
        xi[rest] = sol
    residual = float(np.max(np.abs(A @ xi)))
    fit = XiTable("points", cs.points, xi, cs.merge_tol)

    if residual <= tol:
        rank = np.linalg.matrix_rank(A[:, rest]) if rest else 0
        if rank < len(rest):
            raise SingularSystem(
                f"xi is not determined: rank {rank} for {len(rest)} free unknowns ({len(cs)} equations)"
            )
        if np.ptp(xi) <= 0.1:
            raise SingularSystem("only a near-constant xi satisfies the system")
        return RegraduationResult("Found", fit, residual, complex(cs.points[a]),
                                  constrained_fit=fit, constrained_residual=residual)

    unconstrained, smin = _null_projection(A, xi)
    sup = float(np.max(np.abs(unconstrained)))
    if sup > trivial_tol:
        raise SingularSystem("non-zero solutions exist but all vanish at the anchor; pick another anchor")
    return RegraduationResult(
        "Trivial", XiTable("points", cs.points, unconstrained, cs.merge_tol), residual,
        complex(cs.points[a]), constrained_fit=fit, constrained_residual=residual,
        unconstrained_sup=sup, min_singular_value=smin,
    )


# -- grid construction for closed-form combinators ----------------------------

def regraduate_combinator(S: CombinatorRule, domain, m: int = 1601, anchor: float | None = None,
                          tol: float = FEASIBILITY_TOL, trivial_tol: float = TRIVIALITY_TOL,
                          assoc_tol: float = 1e-9) -> RegraduationResult:
    """Tabulate xi on ``m`` equispaced knots of a real interval.

    Every knot pair (x, y) with S(x, y) inside the interval contributes
    ``interp(xi)(S(x, y)) = xi(x) + xi(y)``.  ``anchor`` (default: the upper
    end) is pinned to xi = 1.
    """
    lo, hi = map(float, domain)
    if not lo < hi:
        raise ValueError(f"empty domain [{lo}, {hi}]")
    if m < 3:
        raise ValueError("need at least 3 grid points")
    grid = np.linspace(lo, hi, m)

    coarse = grid[:: max(1, (m - 1) // 20)]
    assoc = check_associativity(S, _triples(coarse), assoc_tol, relative=True)
    if not assoc.passed:
        raise NotAssociative(f"S is not associative on [{lo:g}, {hi:g}]: residual {assoc.max_residual:.3g}", assoc)

    X, Y = np.meshgrid(grid, grid, indexing="ij")
    SV = np.asarray(S(X, Y))
    if np.iscomplexobj(SV):
        if np.any(np.abs(SV.imag) > 0):
            raise ValueError("combinator must be real-valued on a real domain")
        SV = SV.real
    if np.any(np.diff(SV, axis=0) <= 0) or np.any(np.diff(SV, axis=1) <= 0):
        raise NonMonotone("S is not strictly increasing in each argument on the domain")

    slack = 1e-12 * (hi - lo)
    inside = (SV >= lo - slack) & (SV <= hi + slack)
    ii, jj = np.nonzero(inside)
    s = np.clip(SV[ii, jj], lo, hi)
    k = np.clip(np.searchsorted(grid, s, side="right") - 1, 0, m - 2).astype(np.int64)
    w = (s - grid[k]) / (grid[k + 1] - grid[k])
    ii = ii.astype(np.int64)
    jj = jj.astype(np.int64)
    if ii.size < m - 1:
        raise SingularSystem(f"only {ii.size} grid pairs land inside the domain")

    N = _kernels.normal_matrix(m, k, w, ii, jj)
    a = int(np.argmin(np.abs(grid - (hi if anchor is None else float(anchor)))))
    rest = np.array([r for r in range(m) if r != a])
    xi = np.zeros(m)
    xi[a] = 1.0
    Nrr = N[np.ix_(rest, rest)]
    try:
        c, low = sla.cho_factor(Nrr)
        xi[rest] = sla.cho_solve((c, low), -N[rest, a])
        rcond = float(sla.lapack.dpocon(c, np.linalg.norm(Nrr, 1), uplo="L" if low else "U")[0])
    except np.linalg.LinAlgError:
        xi[rest] = np.linalg.lstsq(Nrr, -N[rest, a], rcond=None)[0]
        rcond = 0.0
    # dpocon jitters in the last ulp with buffer alignment; an estimate needs few digits
    rcond = float(f"{rcond:.6g}")

    def residuals(v):
        return (1.0 - w) * v[k] + w * v[k + 1] - v[ii] - v[jj]

    residual = float(np.max(np.abs(residuals(xi))))
    fit = XiTable("interval", grid, xi)
    details = {"grid_size": m, "equations": int(ii.size), "rcond": rcond,
               "associativity_residual": assoc.max_residual}

    if residual <= tol:
        if rcond < RCOND_MIN:
            raise SingularSystem(f"xi is not determined on this grid (rcond {rcond:.2e}); try another grid size")
        if np.ptp(xi) <= 0.1:
            raise SingularSystem("only a near-constant xi satisfies the system")
        if not (np.all(np.diff(xi) > 0) or np.all(np.diff(xi) < 0)):
            raise NonMonotone("constructed xi is not monotone")
        return RegraduationResult("Found", fit, residual, complex(grid[a]), constrained_fit=fit,
                                  constrained_residual=residual, details=details)

    evals, evecs = np.linalg.eigh(N)
    thr = m * np.finfo(float).eps * evals[-1]
    null = evecs[:, evals <= thr]
    unconstrained = null @ (null.T @ xi)
    sup = float(np.max(np.abs(unconstrained))) if null.size else 0.0
    if sup > trivial_tol:
        raise SingularSystem(
            f"best anchored residual {residual:.3g} exceeds {tol:g}, yet near-solutions exist "
            "(refine the grid, relax the tolerance, or move the anchor off a zero of xi)"
        )
    return RegraduationResult(
        "Trivial", XiTable("interval", grid, unconstrained), residual, complex(grid[a]),
        constrained_fit=fit, constrained_residual=residual, unconstrained_sup=sup,
        min_singular_value=float(np.sqrt(max(evals[0], 0.0))), details=details,
    )


def _triples(values):
    v = np.asarray(values, dtype=float)
    g = np.stack(np.meshgrid(v, v, v, indexing="ij"), axis=-1)
    return g.reshape(-1, 3)


# -- verification -------------------------------------------------------------

@dataclass(frozen=True)
class AdditivityStats:
    max: float
    mean: float
    max_relative: float
    worst_index: int
    n: int


def verify_additivity(xi, theory: Theory, states, slits) -> AdditivityStats:
    """``|xi(phi(a v a')) - xi(phi(a)) - xi(phi(a'))|`` over ``states``.

    ``xi`` is any vectorized callable; XiTable raises DomainEscape for
    amplitudes it does not cover.  ``max_relative`` divides by the largest
    |xi| met, so it does not change when xi is rescaled.
    """
    states = list(states)
    if not states:
        raise ValueError("need at least one state")
    phis = np.array([pair_phis(theory, s, slits) for s in states], dtype=np.complex128)
    vals = np.asarray(xi(phis))
    res = np.abs(vals[:, 2] - vals[:, 0] - vals[:, 1])
    scale = float(np.max(np.abs(vals)))
    w = int(np.argmax(res))
    return AdditivityStats(
        max=float(res[w]),
        mean=float(res.mean()),
        max_relative=float(res[w] / scale) if scale > 0 else 0.0,
        worst_index=w,
        n=len(states),
    )


def sign_family_states(slits, alphas, phases=(1, -1)) -> list[WaveState]:
    """States (alpha, r*alpha) for each alpha and relative phase r."""
    a, b = slits
    return [WaveState((a, b), (al, r * al)) for al in alphas for r in phases]
