"""Amplitude-assignment theories over slit wavefunctions.

A theory turns a wavefunction ``sum_i c_i |slit_i>`` and a configuration of
open slits into one complex number: closed slits are projected out (their
coefficient set to 0) and a detector functional is applied to what is left.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import _kernels
from .errors import BadDistribution, TableMiss, TooManySlits, UnknownSlit
from .setup_algebra import Configuration

MAX_SLITS = 12


@dataclass(frozen=True)
class WaveState:
    """Slit coefficients plus inert detector labels ``(x_f, t_f)``."""

    slits: tuple[str, ...]
    amps: tuple[complex, ...]
    detector: tuple[str, str] = ("x_f", "t_f")

    def __post_init__(self):
        if len(self.slits) != len(self.amps):
            raise ValueError("one coefficient per slit required")
        if len(set(self.slits)) != len(self.slits):
            raise ValueError(f"duplicate slit labels in {self.slits}")
        object.__setattr__(self, "amps", tuple(complex(a) for a in self.amps))

    @classmethod
    def of(cls, coeffs: Mapping[str, complex], detector=("x_f", "t_f")) -> "WaveState":
        return cls(tuple(coeffs), tuple(coeffs.values()), tuple(detector))

    def coeff(self, label: str) -> complex:
        try:
            return self.amps[self.slits.index(label)]
        except ValueError:
            raise UnknownSlit(label) from None

    def as_dict(self) -> dict[str, complex]:
        return dict(zip(self.slits, self.amps))


@dataclass(frozen=True)
class Theory:
    """``kind`` is one of linear, quadratic, power, user_table.

    ``table`` (user_table only) maps ``(configuration labels, open-slit
    coefficients in configuration order)`` to the amplitude.  ``rule`` names
    the closed-form combinator a surrogate table was generated from, if any.
    """

    kind: str
    p: int = 1
    table: Mapping = field(default_factory=dict, compare=False, hash=False)
    rule: str | None = None

    def __post_init__(self):
        if self.kind not in ("linear", "quadratic", "power", "user_table"):
            raise ValueError(f"unknown theory kind {self.kind!r}")
        if self.kind == "power" and (not isinstance(self.p, int) or self.p < 1):
            raise ValueError(f"power theory needs a positive integer p, got {self.p!r}")

    @classmethod
    def linear(cls):
        return cls("linear")

    @classmethod
    def quadratic(cls):
        return cls("quadratic", p=2)

    @classmethod
    def power(cls, p: int):
        return cls("power", p=p)

    @classmethod
    def user_table(cls, entries, rule=None):
        """``entries``: iterable of ``(config_labels, coeffs, value)``."""
        table = {}
        for labels, coeffs, value in entries:
            config = Configuration.of(labels)
            if len(coeffs) != len(config):
                raise ValueError(f"{config} needs {len(config)} coefficients, got {len(coeffs)}")
            table[(config.open, tuple(complex(c) for c in coeffs))] = complex(value)
        return cls("user_table", table=table, rule=rule)

    @property
    def exponent(self) -> int | None:
        if self.kind == "linear":
            return 1
        if self.kind == "quadratic":
            return 2
        if self.kind == "power":
            return self.p
        return None

    def describe(self) -> str:
        if self.kind == "power":
            return f"power(p={self.p})"
        if self.kind == "user_table":
            extra = f", rule={self.rule}" if self.rule else ""
            return f"user_table({len(self.table)} entries{extra})"
        return self.kind


def project_closed(state: WaveState, config: Configuration) -> WaveState:
    """Zero the coefficients of every slit not open in ``config``."""
    missing = [s for s in config if s not in state.slits]
    if missing:
        raise UnknownSlit(f"configuration {config} names slits absent from the state: {missing}")
    amps = tuple(a if s in config else 0j for s, a in zip(state.slits, state.amps))
    return WaveState(state.slits, amps, state.detector)


def _power(z: complex, p: int) -> complex:
    acc = z
    for _ in range(p - 1):
        acc = acc * z
    return acc


def detector_amplitude(theory: Theory, state: WaveState, config: Configuration | None = None) -> complex:
    """The amplitude at the detection point for an (already projected) state.

    ``config`` only matters for table theories, whose keys name the open
    slits; it defaults to the state's full slit set.
    """
    p = theory.exponent
    if p is not None:
        s = 0j
        for a in state.amps:
            s = s + a
        return _power(s, p)
    if config is None:
        config = Configuration.of(state.slits)
    key = (config.open, tuple(state.coeff(s) for s in config))
    try:
        return theory.table[key]
    except KeyError:
        raise TableMiss(f"no table entry for {config} with coefficients {key[1]}") from None


def phi(theory: Theory, state: WaveState, config: Configuration) -> complex:
    return detector_amplitude(theory, project_closed(state, config), config)


def sub_configurations(slits: Sequence[str]) -> list[Configuration]:
    out = []
    for r in range(1, len(slits) + 1):
        out.extend(Configuration.of(c) for c in itertools.combinations(slits, r))
    return out


def full_assignment(theory: Theory, state: WaveState) -> dict[Configuration, complex]:
    if len(state.slits) > MAX_SLITS:
        raise TooManySlits(f"{len(state.slits)} slits exceeds the cap of {MAX_SLITS}")
    return {c: phi(theory, state, c) for c in sub_configurations(state.slits)}


def phi_batch(theory: Theory, slits: Sequence[str], coeffs: np.ndarray, config: Configuration) -> np.ndarray:
    """Vectorized ``phi`` over the rows of ``coeffs`` (one row per state)."""
    slits = list(slits)
    missing = [s for s in config if s not in slits]
    if missing:
        raise UnknownSlit(f"configuration {config} names unknown slits {missing}")
    coeffs = np.ascontiguousarray(coeffs, dtype=np.complex128)
    p = theory.exponent
    if p is not None:
        cols = np.array([slits.index(s) for s in config], dtype=np.int64)
        return _kernels.power_of_sums(coeffs, cols, p)
    cols = [slits.index(s) for s in config]
    out = np.empty(coeffs.shape[0], dtype=np.complex128)
    for r, row in enumerate(coeffs):
        key = (config.open, tuple(complex(row[c]) for c in cols))
        try:
            out[r] = theory.table[key]
        except KeyError:
            raise TableMiss(f"no table entry for {config} with coefficients {key[1]}") from None
    return out


# -- sampling -----------------------------------------------------------------

SAMPLER_KINDS = ("complex-gaussian", "real-uniform", "grid")


@dataclass(frozen=True)
class Sampler:
    """Distribution of each slit coefficient, drawn independently.

    complex-gaussian: real and imaginary parts N(0, sigma^2/2), so E|c|^2 = sigma^2.
    real-uniform: U(lo, hi).  grid: uniform choice from ``points``.
    """

    kind: str
    sigma: float = 1.0
    lo: float = -1.0
    hi: float = 1.0
    points: tuple[complex, ...] = ()
    seed: int = 0

    def __post_init__(self):
        if self.kind not in SAMPLER_KINDS:
            raise BadDistribution(f"unknown sampler {self.kind!r}; expected one of {SAMPLER_KINDS}")
        if self.kind == "complex-gaussian" and not self.sigma > 0:
            raise BadDistribution("complex-gaussian needs sigma > 0")
        if self.kind == "real-uniform" and not self.lo < self.hi:
            raise BadDistribution("real-uniform needs lo < hi")
        if self.kind == "grid":
            if not self.points:
                raise BadDistribution("grid sampler needs at least one point")
            object.__setattr__(self, "points", tuple(complex(p) for p in self.points))

    def draw(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.kind == "complex-gaussian":
            s = self.sigma / np.sqrt(2.0)
            return rng.normal(0.0, s, size) + 1j * rng.normal(0.0, s, size)
        if self.kind == "real-uniform":
            return rng.uniform(self.lo, self.hi, size).astype(np.complex128)
        pts = np.asarray(self.points, dtype=np.complex128)
        return pts[rng.integers(0, pts.size, size)]


def sample_wavestate(seed, slits: Sequence[str], dist: Sampler) -> WaveState:
    """Deterministic in ``(seed, slits, dist)``; ``seed`` may be an int or a tuple of ints."""
    if not isinstance(dist, Sampler):
        raise BadDistribution(f"expected a Sampler, got {type(dist).__name__}")
    rng = np.random.default_rng(list(np.atleast_1d(seed)))
    return WaveState(tuple(slits), tuple(dist.draw(rng, len(slits))))


def sample_batch(seed: int, stream: int, slits: Sequence[str], dist: Sampler, n: int, start: int = 0) -> np.ndarray:
    """Rows ``start .. start+n-1`` of a sample stream, shape ``(n, len(slits))``.

    Row ``i`` equals ``sample_wavestate((seed, stream, i), slits, dist)``, so
    results do not depend on how a stream is split into batches.
    """
    out = np.empty((n, len(slits)), dtype=np.complex128)
    for r in range(n):
        rng = np.random.default_rng([seed, stream, start + r])
        out[r] = dist.draw(rng, len(slits))
    return out


def states_from_rows(slits: Sequence[str], rows: np.ndarray) -> list[WaveState]:
    slits = tuple(slits)
    return [WaveState(slits, tuple(row)) for row in rows]
