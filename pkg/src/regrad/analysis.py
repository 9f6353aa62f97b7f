"""Representation and associativity checks on sampled amplitudes.

An assignment is a *representation* when the joint amplitude is a function
of the two single-slit amplitudes.  We can only ever refute that from
samples: ``check_representation`` searches for two states that agree on
both single-slit amplitudes but not on the joint one.  A positive verdict
means "no witness among the samples tried", nothing more.
"""
from __future__ import annotations

import cmath
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from . import _kernels
from .errors import BadTolerance, EvaluationGap, NonFunctional, TableMiss
from .setup_algebra import Configuration
from .theory import Sampler, Theory, WaveState, phi, phi_batch, sample_batch

REPRESENTATION_STREAM = 0
COMBINATOR_STREAM = 1


# -- closed-form combinators --------------------------------------------------

@dataclass(frozen=True)
class CombinatorRule:
    name: str
    display: str
    fn: Callable

    def __call__(self, x, y):
        return self.fn(x, y)


RULES: dict[str, CombinatorRule] = {
    r.name: r
    for r in (
        CombinatorRule("sum", "x+y", lambda x, y: x + y),
        CombinatorRule("product", "x*y", lambda x, y: x * y),
        CombinatorRule("sum_plus_product", "x+y+x*y", lambda x, y: x + y + x * y),
        CombinatorRule("sum_plus_square", "x+y^2", lambda x, y: x + y * y),
    )
}


def get_rule(name: str) -> CombinatorRule:
    try:
        return RULES[name]
    except KeyError:
        raise ValueError(f"unknown combinator rule {name!r}; known: {sorted(RULES)}") from None


# -- witnesses ----------------------------------------------------------------

@dataclass(frozen=True)
class Witness:
    """Two states with matching single-slit amplitudes and different joint ones."""

    first: WaveState
    second: WaveState
    phis_first: tuple[complex, complex, complex]
    phis_second: tuple[complex, complex, complex]
    source: str = "random"


def _pair_configs(slits):
    a, b = slits
    return Configuration.of([a]), Configuration.of([b]), Configuration.of([a, b])


def pair_phis(theory: Theory, state: WaveState, slits) -> tuple[complex, complex, complex]:
    ca, cb, cab = _pair_configs(slits)
    return phi(theory, state, ca), phi(theory, state, cb), phi(theory, state, cab)


def witness_holds(phis1, phis2, tol: float) -> bool:
    return (
        abs(phis1[0] - phis2[0]) <= tol
        and abs(phis1[1] - phis2[1]) <= tol
        and abs(phis1[2] - phis2[2]) > 10 * tol
    )


def verify_witness(theory: Theory, witness: Witness, slits, tol: float) -> bool:
    """Recompute every amplitude of ``witness`` from scratch and re-check it."""
    return witness_holds(
        pair_phis(theory, witness.first, slits), pair_phis(theory, witness.second, slits), tol
    )


def root_of_unity(k: int, q: int) -> complex:
    k %= q
    if (4 * k) % q == 0:
        return (1, 1j, -1, -1j)[(4 * k) // q]
    return cmath.exp(2j * cmath.pi * k / q)


def probe_pairs(theory: Theory, slits, bases=(1.0, 0.5, 2.0), orders=(2, 3, 4, 5, 6, 8)):
    """Relative-phase probes: (alpha, alpha) against (alpha, w*alpha), w a root of unity.

    Order 2 is the sign flip alpha' = -alpha.  A power theory's own exponent
    is tried right after it, since that phase leaves single-slit powers fixed.
    """
    qs = [2]
    if theory.exponent and theory.exponent > 2:
        qs.append(theory.exponent)
    qs += [q for q in orders if q not in qs]
    a, b = slits
    for alpha in bases:
        for q in qs:
            for k in range(1, q):
                w = root_of_unity(k, q)
                yield (
                    WaveState((a, b), (alpha, alpha)),
                    WaveState((a, b), (alpha, w * alpha)),
                )


def _probe_witness(theory, slits, tol):
    tried = 0
    for s1, s2 in probe_pairs(theory, slits):
        try:
            p1 = pair_phis(theory, s1, slits)
            p2 = pair_phis(theory, s2, slits)
        except TableMiss:
            continue
        tried += 1
        if witness_holds(p1, p2, tol):
            return Witness(s1, s2, p1, p2, source="probe"), tried
    return None, tried


def _batch_phis(theory, slits, rows):
    ca, cb, cab = _pair_configs(slits)
    return (
        phi_batch(theory, slits, rows, ca),
        phi_batch(theory, slits, rows, cb),
        phi_batch(theory, slits, rows, cab),
    )


def _witness_from_rows(slits, rows, x, y, z, i, j):
    s1 = WaveState(tuple(slits), tuple(rows[i]))
    s2 = WaveState(tuple(slits), tuple(rows[j]))
    return Witness(s1, s2, (x[i], y[i], z[i]), (x[j], y[j], z[j]), source="random")


@dataclass(frozen=True)
class RepresentationVerdict:
    status: str  # "Representation" | "NotRepresentation"
    witness: Witness | None
    agreement_tolerance: float
    samples_used: int
    probes_used: int

    @property
    def is_representation(self) -> bool:
        return self.status == "Representation"


def check_representation(theory: Theory, slits, sampler: Sampler, n: int, tol: float) -> RepresentationVerdict:
    """Search for a non-functionality witness: relative-phase probes first,
    then collisions among ``n`` seeded random states."""
    if not (tol > 0 and np.isfinite(tol)):
        raise BadTolerance(f"tolerance must be positive and finite, got {tol!r}")
    if n < 1:
        raise ValueError("need at least one sample")
    slits = tuple(slits)
    witness, probes = _probe_witness(theory, slits, tol)
    if witness is not None:
        return RepresentationVerdict("NotRepresentation", witness, tol, 0, probes)
    rows = sample_batch(sampler.seed, REPRESENTATION_STREAM, slits, sampler, n)
    x, y, z = _batch_phis(theory, slits, rows)
    i, j = _kernels.collision_search(x, y, z, tol)
    if i >= 0:
        return RepresentationVerdict(
            "NotRepresentation", _witness_from_rows(slits, rows, x, y, z, i, j), tol, n, probes
        )
    return RepresentationVerdict("Representation", None, tol, n, probes)


# -- sampled combinator -------------------------------------------------------

class CombinatorTable:
    """Sampled ``(x, y) -> z`` with nearest-key lookup inside ``key_tol``."""

    def __init__(self, x, y, z, key_tol: float):
        self.x = np.asarray(x, dtype=np.complex128)
        self.y = np.asarray(y, dtype=np.complex128)
        self.z = np.asarray(z, dtype=np.complex128)
        self.key_tol = float(key_tol)
        self._tree = cKDTree(_keys(self.x, self.y)) if self.x.size else None

    def __len__(self):
        return self.x.size

    def __call__(self, x, y):
        x = np.asarray(x, dtype=np.complex128)
        y = np.asarray(y, dtype=np.complex128)
        shape = np.broadcast(x, y).shape
        xb, yb = np.broadcast_to(x, shape).ravel(), np.broadcast_to(y, shape).ravel()
        if self._tree is None:
            raise EvaluationGap("empty table")
        dist, idx = self._tree.query(_keys(xb, yb), k=1)
        bad = dist > self.key_tol
        if bad.any():
            r = int(np.argmax(bad))
            raise EvaluationGap(
                f"no table key within {self.key_tol:g} of ({xb[r]}, {yb[r]}); nearest is {dist[r]:.3g} away"
            )
        return self.z[idx].reshape(shape)

    def max_deviation(self, rule) -> float:
        if not len(self):
            return 0.0
        return float(np.max(np.abs(self.z - rule(self.x, self.y))))


def _keys(x, y):
    return np.column_stack([x.real, x.imag, y.real, y.imag])


def fit_combinator(theory: Theory, slits, sampler: Sampler, n: int, key_tol: float) -> CombinatorTable:
    """Tabulate ``(phi(a), phi(a')) -> phi(a v a')`` from probe and sampled states.

    Raises NonFunctional if two keys within ``key_tol`` carry values more
    than ``10*key_tol`` apart.  States with both single-slit amplitudes 0 are
    left out of the table.
    """
    if not (key_tol > 0 and np.isfinite(key_tol)):
        raise BadTolerance(f"key tolerance must be positive and finite, got {key_tol!r}")
    slits = tuple(slits)
    rows = [s.amps for pair in probe_pairs(theory, slits) for s in pair]
    rows = [r for r in rows if _table_covers(theory, slits, r)]
    rows = np.array(rows + list(sample_batch(sampler.seed, COMBINATOR_STREAM, slits, sampler, n)),
                    dtype=np.complex128).reshape(-1, 2)
    x, y, z = _batch_phis(theory, slits, rows)
    keep = ~((x == 0) & (y == 0))
    rows, x, y, z = rows[keep], x[keep], y[keep], z[keep]

    keys = _keys(x, y)
    uniq, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.ravel()
    # exact duplicates first, then distinct keys closer than key_tol
    far = np.abs(z - z[first][inverse]) > 10 * key_tol
    if far.any():
        j = int(np.argmax(far))
        i = int(first[inverse[j]])
        raise NonFunctional("equal keys carry different joint amplitudes",
                            _witness_from_rows(slits, rows, x, y, z, i, j))
    pairs = cKDTree(uniq).query_pairs(key_tol, output_type="ndarray")
    if len(pairs):
        zi, zj = z[first[pairs[:, 0]]], z[first[pairs[:, 1]]]
        bad = np.abs(zi - zj) > 10 * key_tol
        if bad.any():
            a, b = pairs[int(np.argmax(bad))]
            i, j = sorted((int(first[a]), int(first[b])))
            raise NonFunctional("nearby keys carry different joint amplitudes",
                                _witness_from_rows(slits, rows, x, y, z, i, j))
    return CombinatorTable(x[first], y[first], z[first], key_tol)


def _table_covers(theory, slits, row) -> bool:
    if theory.kind != "user_table":
        return True
    try:
        pair_phis(theory, WaveState(slits, row), slits)
    except TableMiss:
        return False
    return True


def identify_closed_form(table: CombinatorTable, tol: float = 1e-10):
    """First built-in rule matching every table entry within ``tol`` (scaled by max(1, |z|))."""
    if not len(table):
        return None, None
    scale = np.maximum(1.0, np.abs(table.z))
    for rule in RULES.values():
        with np.errstate(all="ignore"):
            dev = np.abs(table.z - rule(table.x, table.y)) / scale
        if np.all(dev <= tol):
            return rule, float(dev.max())
    return None, None


# -- associativity ------------------------------------------------------------

@dataclass(frozen=True)
class AssociativityReport:
    max_residual: float
    worst_triple: tuple[complex, complex, complex]
    grid_size: int
    tolerance: float
    lhs: complex
    rhs: complex
    relative: bool = False

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tolerance


def check_associativity(S, grid, tol: float, relative: bool = False) -> AssociativityReport:
    """Max over triples of ``|S(S(x,y),z) - S(x,S(y,z))|``.

    With ``relative`` the residual is divided by ``max(1, |lhs|, |rhs|)``.
    Tables raise EvaluationGap for intermediate values they do not cover.
    """
    if not (tol > 0):
        raise BadTolerance(f"tolerance must be positive, got {tol!r}")
    grid = np.asarray(grid, dtype=np.complex128).reshape(-1, 3)
    if not len(grid):
        raise ValueError("empty triple grid")
    x, y, z = grid[:, 0], grid[:, 1], grid[:, 2]
    lhs = np.asarray(S(S(x, y), z), dtype=np.complex128)
    rhs = np.asarray(S(x, S(y, z)), dtype=np.complex128)
    res = np.abs(lhs - rhs)
    if relative:
        res = res / np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(rhs)))
    w = int(np.argmax(res))
    return AssociativityReport(
        max_residual=float(res[w]),
        worst_triple=(complex(x[w]), complex(y[w]), complex(z[w])),
        grid_size=len(grid),
        tolerance=tol,
        lhs=complex(lhs[w]),
        rhs=complex(rhs[w]),
        relative=relative,
    )


def product_grid(values: Sequence) -> np.ndarray:
    v = np.asarray(values, dtype=np.complex128)
    g = np.stack(np.meshgrid(v, v, v, indexing="ij"), axis=-1)
    return g.reshape(-1, 3)
