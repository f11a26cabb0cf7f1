"""Mode frequencies of spherical and rectangular enclosures."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping

import numpy as np

from .bessel import RootTable, find_roots

Triplet = tuple[int, int, int]

T_MIN, T_MAX = -40.0, 60.0


def speed_of_sound(t: float) -> float:
    """Speed of sound in air (m/s) at ``t`` degrees Celsius: 331.8 sqrt((t+273)/273)."""
    if not T_MIN < t < T_MAX:
        raise ValueError(f"temperature {t} C outside ({T_MIN}, {T_MAX})")
    return 331.8 * math.sqrt((t + 273.0) / 273.0)


@dataclass(frozen=True)
class SphereSpec:
    radius: float
    temperature: float = 23.0
    max_order: int = 6
    roots_per_order: int = 8

    def __post_init__(self):
        if not 0.01 < self.radius < 10.0:
            raise ValueError(f"radius {self.radius} m outside (0.01, 10)")
        if not T_MIN < self.temperature < T_MAX:
            raise ValueError(f"temperature {self.temperature} C outside ({T_MIN}, {T_MAX})")
        if self.max_order < 0 or self.roots_per_order < 1:
            raise ValueError("max_order must be >= 0 and roots_per_order >= 1")

    @property
    def c(self) -> float:
        return speed_of_sound(self.temperature)


def _check_triplet(triplet) -> Triplet:
    t = tuple(int(v) for v in triplet)
    if len(t) != 3 or any(v < 0 for v in t) or t != tuple(triplet):
        raise ValueError(f"triplet must be three non-negative integers, got {triplet!r}")
    if t == (0, 0, 0):
        raise ValueError("triplet (0, 0, 0) has no mode")
    if math.gcd(*t) != 1:
        raise ValueError(f"triplet {t} shares the common divisor {math.gcd(*t)}")
    return t


@dataclass(frozen=True)
class BoxSpec:
    X: float
    Y: float
    Z: float
    temperature: float = 23.0
    triplets: tuple[Triplet, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if min(self.X, self.Y, self.Z) <= 0:
            raise ValueError("box dimensions must be positive")
        if not T_MIN < self.temperature < T_MAX:
            raise ValueError(f"temperature {self.temperature} C outside ({T_MIN}, {T_MAX})")
        object.__setattr__(self, "triplets", tuple(_check_triplet(t) for t in self.triplets))

    @property
    def c(self) -> float:
        return speed_of_sound(self.temperature)


@dataclass(frozen=True)
class ModeSeries:
    """One resonance series. ``label`` is a Bessel order or an (l, m, n) triplet."""

    label: int | Triplet
    frequencies: tuple[float, ...]

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=float)
        if np.any(f < 0) or np.any(np.diff(f) < 0):
            raise ValueError(f"series {self.label}: frequencies must be ascending and >= 0")


def root_tables(spec: SphereSpec) -> dict[int, RootTable]:
    return {n: find_roots(n, spec.roots_per_order) for n in range(spec.max_order + 1)}


def sphere_mode_series(spec: SphereSpec, roots: Mapping[int, RootTable] | None = None) -> list[ModeSeries]:
    """f_ns = c z_ns / (2 pi a), one series per order 0..max_order."""
    if roots is None:
        roots = root_tables(spec)
    scale = spec.c / (2.0 * math.pi * spec.radius)
    out = []
    for n in range(spec.max_order + 1):
        table = roots.get(n)
        if table is None:
            raise ValueError(f"no root table for order {n}")
        if len(table) < spec.roots_per_order:
            raise ValueError(f"root table for order {n} has {len(table)} < {spec.roots_per_order} roots")
        z = np.asarray(table.roots[: spec.roots_per_order])
        out.append(ModeSeries(label=n, frequencies=tuple(scale * z)))
    return out


def box_delay_seconds(spec: BoxSpec, triplet) -> float:
    """Round-trip delay 2 / (c sqrt((l/X)^2 + (m/Y)^2 + (n/Z)^2)) of a plane-wave path."""
    l, m, n = _check_triplet(triplet)
    return 2.0 / (spec.c * math.sqrt((l / spec.X) ** 2 + (m / spec.Y) ** 2 + (n / spec.Z) ** 2))


class ModeKind(str, Enum):
    AXIAL = "axial"
    TANGENTIAL = "tangential"
    OBLIQUE = "oblique"


def classify_triplet(triplet) -> ModeKind:
    zeros = _check_triplet(triplet).count(0)
    return {2: ModeKind.AXIAL, 1: ModeKind.TANGENTIAL, 0: ModeKind.OBLIQUE}[zeros]


def enumerate_triplets(max_component: int, spec: BoxSpec | None = None) -> list[Triplet]:
    """Coprime triplets with entries <= max_component.

    With a ``spec`` they are sorted by fundamental 1/d (lowest first);
    without one, by the same quantity for a unit cube.
    """
    if not 1 <= max_component <= 8:
        raise ValueError(f"max_component must be in [1, 8], got {max_component}")
    X, Y, Z = (spec.X, spec.Y, spec.Z) if spec is not None else (1.0, 1.0, 1.0)
    rng = range(max_component + 1)
    found = [t for t in itertools.product(rng, rng, rng) if t != (0, 0, 0) and math.gcd(*t) == 1]

    def key(t):
        l, m, n = t
        return ((l / X) ** 2 + (m / Y) ** 2 + (n / Z) ** 2, tuple(-v for v in t))

    return sorted(found, key=key)


def box_mode_series(spec: BoxSpec, triplet, f_max: float) -> ModeSeries:
    """Harmonic series k/d (k >= 1) of one triplet, up to ``f_max`` Hz."""
    f0 = 1.0 / box_delay_seconds(spec, triplet)
    count = int(f_max // f0)
    return ModeSeries(label=tuple(triplet), frequencies=tuple(f0 * k for k in range(1, count + 1)))


def series_below(series: ModeSeries, f_max: float) -> ModeSeries:
    return ModeSeries(series.label, tuple(f for f in series.frequencies if f < f_max))

