"""Seeded Brownian drivers on dyadic grids with exact coarse-grid restriction.

All refinement levels of one driver share a single realization: coarse
increments are pairwise sums of fine ones, applied one halving at a time.
The dyadic tree order makes restriction transitive bit for bit, which is
what couples consecutive levels in the convergence measurements.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
from numpy.random import Generator, Philox
from scipy.special import ndtri

from .errors import IncompatibleGridError, InvalidParameterError

_MAGIC = b"SVEB"
_DUMP_VERSION = 1

# ndtri(0) = -inf; random() yields [0, 1), the half-ulp shift maps into (0, 1)
_OPEN_SHIFT = 2.0 ** -54


@dataclass(frozen=True)
class DyadicGrid:
    """Uniform grid with base * 2**level steps on [0, horizon]."""

    horizon: float
    level: int
    base: int = 1

    def __post_init__(self):
        if self.horizon <= 0:
            raise InvalidParameterError("horizon must be positive")
        if self.level < 0 or self.base < 1:
            raise InvalidParameterError("level must be >= 0 and base >= 1")

    @property
    def n_steps(self) -> int:
        return self.base * 2 ** self.level

    @property
    def dt(self) -> float:
        return self.horizon / self.n_steps

    def times(self) -> np.ndarray:
        n = self.n_steps
        return np.arange(n + 1) * self.horizon / n

    def contains(self, coarse: "DyadicGrid") -> bool:
        """True when every point of `coarse` is a point of this grid."""
        return (coarse.horizon == self.horizon and coarse.base == self.base
                and coarse.level <= self.level)


@dataclass(frozen=True)
class BrownianDriver:
    """Increments of one Brownian path on the finest grid.

    Reproducible from (seed, finest) alone; the array is read-only so many
    workers can share one driver.
    """

    seed: int
    finest: DyadicGrid
    increments: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.increments.shape != (self.finest.n_steps,):
            raise InvalidParameterError("increment count does not match grid")
        self.increments.setflags(write=False)


def _normal_from_counter(seed: int, start: int, count: int, scale: float) -> np.ndarray:
    """count N(0, scale^2) variates at counter positions start..start+count.

    Philox keyed by the seed is counter-based: any window of the stream is
    reproducible without generating its prefix (the generator buffers four
    64-bit words per counter block, hence the advance/discard split).
    """
    bit = Philox(key=seed & (2 ** 64 - 1))
    bit.advance(start // 4)
    gen = Generator(bit)
    for _ in range(start % 4):
        gen.random()
    u = gen.random(count)
    return ndtri(u + _OPEN_SHIFT) * scale


def sample_driver(seed: int, finest: DyadicGrid) -> BrownianDriver:
    """Draw i.i.d. Normal(0, T/n) increments for the finest grid."""
    n = finest.n_steps
    inc = _normal_from_counter(seed, 0, n, np.sqrt(finest.dt))
    return BrownianDriver(seed=seed, finest=finest, increments=inc)


def sample_increment_window(seed: int, finest: DyadicGrid, i0: int, i1: int) -> np.ndarray:
    """Increments i0..i1 of the driver, generated without the prefix."""
    if not 0 <= i0 <= i1 <= finest.n_steps:
        raise InvalidParameterError("window out of range")
    return _normal_from_counter(seed, i0, i1 - i0, np.sqrt(finest.dt))


def halve(increments: np.ndarray) -> np.ndarray:
    """One refinement step down: sum adjacent pairs (exactly one add each)."""
    n = increments.shape[-1]
    if n % 2:
        raise IncompatibleGridError("cannot halve an odd number of steps")
    shape = increments.shape[:-1] + (n // 2, 2)
    return increments.reshape(shape).sum(axis=-1)


def restrict_increments(increments: np.ndarray, levels_down: int) -> np.ndarray:
    """Apply `levels_down` halvings; identity when zero."""
    out = increments
    for _ in range(levels_down):
        out = halve(out)
    return out


def restrict(d: BrownianDriver, coarse: DyadicGrid) -> np.ndarray:
    """Exact coarse increments of the driver's realization.

    Pairwise partial sums applied per halving keep restriction transitive
    bit for bit: going fine -> mid -> coarse equals fine -> coarse.
    """
    if not d.finest.contains(coarse):
        raise IncompatibleGridError(
            f"grid (T={coarse.horizon}, level={coarse.level}, base={coarse.base}) "
            f"is not a sub-grid of the driver's finest "
            f"(T={d.finest.horizon}, level={d.finest.level}, base={d.finest.base})")
    if coarse.level == d.finest.level:
        return d.increments.copy()
    return restrict_increments(d.increments, d.finest.level - coarse.level)


def dump_driver(d: BrownianDriver, path) -> None:
    """Write the optional binary dump: SVEB header + little-endian f64 payload."""
    header = struct.pack("<4sIQIId", _MAGIC, _DUMP_VERSION,
                         d.seed & (2 ** 64 - 1), d.finest.level,
                         d.finest.base, d.finest.horizon)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(d.increments, dtype="<f8").tobytes())


def load_driver(path) -> BrownianDriver:
    with open(path, "rb") as fh:
        header = fh.read(struct.calcsize("<4sIQIId"))
        magic, version, seed, level, base, horizon = struct.unpack("<4sIQIId", header)
        if magic != _MAGIC:
            raise InvalidParameterError(f"not a driver dump: bad magic {magic!r}")
        if version != _DUMP_VERSION:
            raise InvalidParameterError(f"unsupported dump version {version}")
        grid = DyadicGrid(horizon=horizon, level=level, base=base)
        payload = fh.read(grid.n_steps * 8)
    inc = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    if inc.shape[0] != grid.n_steps:
        raise InvalidParameterError("truncated driver dump")
    return BrownianDriver(seed=seed, finest=grid, increments=inc)
