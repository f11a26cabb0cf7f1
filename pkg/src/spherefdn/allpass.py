"""Inharmonic comb design: integer delay plus a cascade of second-order allpass sections.

A loop sustains a mode wherever its phase is a multiple of 2 pi. The loop
phase is split into a pure delay (linear part) and an allpass ladder whose
poles sit at rho*exp(+-i theta_k), theta_1 the first ("knee") pole and the
rest spaced by a common separation. Only (delay, theta_1, separation) are
optimised; the pole radius stays fixed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .acoustics import ModeSeries

DEFAULT_POLE_RADIUS = 0.95
DEFAULT_SAMPLE_RATE = 44100.0
RELEVANT_BAND_HZ = 4000.0
FAILURE_THRESHOLD = 1.0  # rad^2

_GRID = 400
_SEEDS = 12
_MAX_ITER = 500
_MIN_STEP = 1e-9
_TOL = 1e-8


class DesignFailure(RuntimeError):
    """The optimiser could not bring the weighted phase error below threshold."""

    def __init__(self, residual: float, design: "LoopDesign"):
        super().__init__(f"loop design failed: residual {residual:.4g} rad^2 > {FAILURE_THRESHOLD}")
        self.residual = residual
        self.design = design


class RetuneError(ValueError):
    pass


@dataclass(frozen=True)
class PhaseTarget:
    omegas: tuple[float, ...]
    target_phases: tuple[float, ...]

    def __post_init__(self):
        om = np.asarray(self.omegas, dtype=float)
        if len(self.omegas) != len(self.target_phases):
            raise ValueError("omegas and target_phases differ in length")
        if np.any(np.diff(om) <= 0) or (om.size and (om[0] < 0 or om[-1] >= math.pi)):
            raise ValueError("omegas must be ascending in [0, pi)")

    @property
    def size(self) -> int:
        return len(self.omegas)


@dataclass(frozen=True)
class LoopDesign:
    """One inharmonic comb channel.

    Pole angles are ``first_pole_angle`` followed by
    ``origin + k * pole_separation`` for k = 1 .. n_pole_pairs - 1, where
    ``origin`` is ``ladder_origin`` when set and ``first_pole_angle``
    otherwise. ``ladder_origin`` is only set by retuning, which moves the
    first pole and leaves the rest where they were.
    """

    delay_samples: int
    pole_radius: float = DEFAULT_POLE_RADIUS
    first_pole_angle: float = 0.0
    pole_separation: float = 0.0
    n_pole_pairs: int = 0
    loop_gain: float = 1.0
    loss_fir: tuple[float, float] | None = None
    ladder_origin: float | None = None
    residual: float = 0.0

    def __post_init__(self):
        if int(self.delay_samples) != self.delay_samples or self.delay_samples < 1:
            raise ValueError(f"delay_samples must be a positive integer, got {self.delay_samples}")
        object.__setattr__(self, "delay_samples", int(self.delay_samples))
        if not 0.0 <= self.pole_radius < 1.0:
            raise ValueError(f"pole radius {self.pole_radius} not in [0, 1)")
        if self.n_pole_pairs < 0:
            raise ValueError("n_pole_pairs must be >= 0")
        if not 0.0 < self.loop_gain <= 1.0:
            raise ValueError(f"loop gain {self.loop_gain} not in (0, 1]")
        if self.n_pole_pairs:
            ang = self.pole_angles()
            if np.any(ang <= 0.0) or np.any(ang >= math.pi):
                raise ValueError(f"pole angles {np.round(ang, 4)} must lie in (0, pi)")
            if self.n_pole_pairs > 1 and self.pole_separation <= 0.0:
                raise ValueError("pole separation must be positive")
        if self.loss_fir is not None:
            object.__setattr__(self, "loss_fir", tuple(float(v) for v in self.loss_fir))
            if len(self.loss_fir) != 2:
                raise ValueError("loss_fir must have two taps")

    def pole_angles(self) -> np.ndarray:
        if self.n_pole_pairs == 0:
            return np.empty(0)
        origin = self.first_pole_angle if self.ladder_origin is None else self.ladder_origin
        k = np.arange(1, self.n_pole_pairs)
        return np.concatenate(([self.first_pole_angle], origin + k * self.pole_separation))


def default_pole_pairs(radius: float) -> int:
    """Three pairs below 0.5 m, one more per further 0.25 m."""
    if radius < 0.5:
        return 3
    return 4 + int((radius - 0.5) // 0.25)


def default_weights(count: int, dc_mode: bool = True) -> np.ndarray:
    """w_k = 1/(1+k)^2 with the first resonance boosted 4x; index 0 is dc."""
    k = np.arange(count)
    w = 1.0 / (1.0 + k) ** 2
    if count > 1:
        w[1] *= 4.0
    if not dc_mode:
        w[0] = 0.0
    return w


def build_phase_targets(series: ModeSeries | Sequence[float], sample_rate: float = DEFAULT_SAMPLE_RATE) -> PhaseTarget:
    """Map resonances to normalised frequencies with target phases -2 pi k.

    A dc resonance is prepended when the series does not start at 0.
    """
    freqs = list(series.frequencies if isinstance(series, ModeSeries) else series)
    if not freqs:
        raise ValueError("empty mode series")
    nyq = sample_rate / 2.0
    for f in freqs:
        if f >= nyq:
            raise ValueError(f"resonance {f:.3f} Hz is not below Nyquist ({nyq:g} Hz)")
    if freqs[0] != 0.0:
        freqs = [0.0] + freqs
    om = 2.0 * math.pi * np.asarray(freqs) / sample_rate
    tg = -2.0 * math.pi * np.arange(len(freqs))
    return PhaseTarget(tuple(om), tuple(tg))


def _section_phase(omega: np.ndarray, rho: float, theta) -> np.ndarray:
    # continuous phase of (rho^2 - 2 rho cos(t) z^-1 + z^-2) / (1 - 2 rho cos(t) z^-1 + rho^2 z^-2)
    a = np.arctan2(-rho * np.sin(theta - omega), 1.0 - rho * np.cos(theta - omega))
    b = np.arctan2(rho * np.sin(theta + omega), 1.0 - rho * np.cos(theta + omega))
    return -2.0 * omega - 2.0 * (a + b)


def allpass_phase(design: LoopDesign, omega) -> np.ndarray:
    """Unwrapped phase of the allpass cascade alone."""
    om = np.asarray(omega, dtype=float)
    out = np.zeros_like(om)
    for theta in design.pole_angles():
        out = out + _section_phase(om, design.pole_radius, theta)
    return out


def allpass_loop_phase(design: LoopDesign, omega):
    """Loop phase -omega*D + allpass phase, in radians, unwrapped (0 at dc)."""
    om = np.asarray(omega, dtype=float)
    phi = -om * design.delay_samples + allpass_phase(design, om)
    return float(phi) if phi.ndim == 0 else phi


def sections(design: LoopDesign) -> list[tuple[float, float]]:
    """Denominator coefficients (a1, a2) of each second-order allpass section.

    Section k is (a2 + a1 z^-1 + z^-2) / (1 + a1 z^-1 + a2 z^-2) with
    a1 = -2 rho cos(theta_k), a2 = rho^2.
    """
    rho = design.pole_radius
    return [(-2.0 * rho * math.cos(t), rho * rho) for t in design.pole_angles()]


def allpass_response(design: LoopDesign, omega) -> np.ndarray:
    """Complex frequency response of the section cascade, evaluated directly."""
    z1 = np.exp(-1j * np.asarray(omega, dtype=float))
    h = np.ones_like(z1)
    for a1, a2 in sections(design):
        h = h * (a2 + a1 * z1 + z1 * z1) / (1.0 + a1 * z1 + a2 * z1 * z1)
    return h


def weighted_error(design: LoopDesign, target: PhaseTarget, weights) -> float:
    om = np.asarray(target.omegas)
    err = allpass_loop_phase(design, om) - np.asarray(target.target_phases)
    return float(np.sum(np.asarray(weights) * err * err))


class _Objective:
    def __init__(self, om, tg, w, rho, pairs):
        self.om, self.tg, self.w, self.rho, self.pairs = om, tg, w, rho, pairs

    def valid(self, theta1, sep) -> bool:
        if theta1 <= 0.0:
            return False
        if self.pairs > 1 and (sep <= 0.0 or theta1 + (self.pairs - 1) * sep >= math.pi):
            return False
        return theta1 < math.pi

    def allpass(self, theta1, sep):
        ph = 0.0
        for k in range(self.pairs):
            ph = ph + _section_phase(self.om, self.rho, theta1 + k * sep)
        return ph

    def __call__(self, delay, theta1, sep) -> float:
        if delay < 1 or not self.valid(theta1, sep):
            return math.inf
        r = self.allpass(theta1, sep) - self.om * delay - self.tg
        return float(np.sum(self.w * r * r))

    def best_delay(self, theta1, sep) -> tuple[int, float]:
        r = self.allpass(theta1, sep) - self.tg
        wo = self.w * self.om
        d = float(np.sum(wo * r) / np.sum(wo * self.om))
        best = (1, math.inf)
        for cand in {max(1, math.floor(d)), max(1, math.ceil(d))}:
            e = self(cand, theta1, sep)
            if e < best[1]:
                best = (cand, e)
        return best


def _grid_seeds(obj: _Objective, count: int) -> list[tuple[int, float, float]]:
    pairs = obj.pairs
    th = np.linspace(1e-3, math.pi - 1e-3, _GRID)[:, None, None]
    if pairs > 1:
        sep = np.linspace(1e-3, math.pi / (pairs - 1), _GRID)[None, :, None]
    else:
        sep = np.zeros((1, 1, 1))
    om = obj.om[None, None, :]
    ap = 0.0
    for k in range(pairs):
        ap = ap + _section_phase(om, obj.rho, th + k * sep)
    r = ap - obj.tg
    wo = obj.w * obj.om
    d = np.sum(wo * r, axis=-1) / np.sum(wo * obj.om)
    err = np.full(d.shape, np.inf)
    best_d = np.ones(d.shape)
    for cand in (np.floor(d), np.ceil(d)):
        cand = np.maximum(cand, 1.0)
        e = np.sum(obj.w * (r - obj.om * cand[..., None]) ** 2, axis=-1)
        better = e < err
        err[better] = e[better]
        best_d[better] = cand[better]
    ok = (th + (pairs - 1) * sep < math.pi)[..., 0]
    err[~ok] = np.inf
    order = np.argsort(err, axis=None, kind="stable")[:count]
    seeds = []
    for flat in order:
        i, j = np.unravel_index(flat, err.shape)
        seeds.append((int(best_d[i, j]), float(th[i, 0, 0]), float(sep[0, j, 0])))
    return seeds


def _coordinate_search(obj: _Objective, delay, theta1, sep, step):
    e = obj(delay, theta1, sep)
    moves = [(step_sign, 0) for step_sign in (1, -1)]
    if obj.pairs > 1:
        moves += [(0, s) for s in (1, -1)]
    for _ in range(_MAX_ITER):
        e_start = e
        for dd in (1, -1):
            while (en := obj(delay + dd, theta1, sep)) < e:
                delay, e = delay + dd, en
        for a, b in moves:
            while (en := obj(delay, theta1 + a * step, sep + b * step)) < e:
                theta1, sep, e = theta1 + a * step, sep + b * step, en
        if e_start - e < _TOL:
            if step < _MIN_STEP:
                break
            step *= 0.5
    return e, delay, theta1, sep


def fit_loop(
    target: PhaseTarget,
    n_pole_pairs: int = 3,
    pole_radius: float = DEFAULT_POLE_RADIUS,
    weights=None,
    loop_gain: float = 1.0,
) -> LoopDesign:
    """Fit delay, first pole angle and pole separation to the target phases.

    Minimises sum_k w_k (phi(omega_k) - target_k)^2 with the pole radius
    held fixed. The starting point from the linear-fit slope, the first
    resonance and the asymptotic spacing is refined together with the best
    points of a coarse (theta_1, separation) grid; each start is polished
    by cyclic coordinate search. Raises DesignFailure above 1 rad^2.
    """
    om = np.asarray(target.omegas, dtype=float)
    tg = np.asarray(target.target_phases, dtype=float)
    nonzero = om > 0
    if np.count_nonzero(nonzero) < 2:
        raise ValueError("need at least two nonzero resonances to fit a loop")
    w = default_weights(om.size) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != om.shape or np.any(w < 0) or not np.any(w[nonzero] > 0):
        raise ValueError("weights must be non-negative, one per target point")

    slope = -float(np.sum(om * tg) / np.sum(om * om))
    d0 = max(1, int(round(slope)))

    if n_pole_pairs == 0:
        obj = _Objective(om, tg, w, pole_radius, 0)
        r = -tg
        d = float(np.sum(w * om * r) / np.sum(w * om * om))
        cands = {max(1, math.floor(d)), max(1, math.ceil(d)), d0}
        delay = min(cands, key=lambda c: float(np.sum(w * (om * c + tg) ** 2)))
        e = float(np.sum(w * (om * delay + tg) ** 2))
        design = LoopDesign(delay, pole_radius, n_pole_pairs=0, loop_gain=loop_gain, residual=e)
        return _accept(design, e)

    obj = _Objective(om, tg, w, pole_radius, n_pole_pairs)
    first = float(om[nonzero][0])
    spacing = float(om[-1] - om[-2])
    sep0 = spacing
    if n_pole_pairs > 1 and first + (n_pole_pairs - 1) * sep0 >= math.pi:
        sep0 = (math.pi - first) / n_pole_pairs
    seeds = [(d0, first, sep0 if n_pole_pairs > 1 else 0.0)]
    seeds += _grid_seeds(obj, _SEEDS)

    best = None
    step = math.pi / _GRID
    for d, t1, sp in seeds:
        if not obj.valid(t1, sp):
            continue
        result = _coordinate_search(obj, d, t1, sp, step)
        if best is None or result[0] < best[0]:
            best = result
    e, delay, theta1, sep = best
    design = LoopDesign(
        delay_samples=delay,
        pole_radius=pole_radius,
        first_pole_angle=theta1,
        pole_separation=sep if n_pole_pairs > 1 else 0.0,
        n_pole_pairs=n_pole_pairs,
        loop_gain=loop_gain,
        residual=e,
    )
    return _accept(design, e)


def _accept(design: LoopDesign, e: float) -> LoopDesign:
    grid = np.linspace(0.0, math.pi, 4097)[:-1]
    if np.any(np.diff(allpass_loop_phase(design, grid)) >= 0):
        raise DesignFailure(e, design)
    if e > FAILURE_THRESHOLD:
        raise DesignFailure(e, design)
    return design


def loop_resonances(design: LoopDesign, sample_rate: float = DEFAULT_SAMPLE_RATE, count: int | None = None) -> np.ndarray:
    """Frequencies (Hz) where the loop phase crosses -2 pi k, k = 1, 2, ...

    The dc resonance is not included.
    """
    phi_end = allpass_loop_phase(design, math.pi)
    available = int(math.floor(-phi_end / (2.0 * math.pi) - 1e-12))
    if count is not None:
        available = min(available, count)
    out = []
    for k in range(1, available + 1):
        g = lambda w, k=k: allpass_loop_phase(design, w) + 2.0 * math.pi * k
        out.append(brentq(g, 0.0, math.pi, xtol=1e-14) * sample_rate / (2.0 * math.pi))
    return np.asarray(out)


def retune_first_pole(design: LoopDesign, measured_fundamental: float, sample_rate: float = DEFAULT_SAMPLE_RATE) -> LoopDesign:
    """Move only the first pole so the first nonzero resonance lands on a measured value.

    The remaining poles, delay, radius and gain are kept. Deviations of more
    than 25% from the current fundamental are refused: the series assignment
    is ambiguous that far out.
    """
    if design.n_pole_pairs == 0:
        raise RetuneError("a delay-only channel has no pole to move")
    current = loop_resonances(design, sample_rate, count=1)
    if current.size == 0:
        raise RetuneError("design has no resonance below Nyquist")
    f1 = float(current[0])
    if abs(measured_fundamental - f1) > 0.25 * f1:
        raise RetuneError(
            f"measured {measured_fundamental:.1f} Hz deviates {100 * (measured_fundamental / f1 - 1):+.1f}% "
            f"from the design fundamental {f1:.1f} Hz (limit 25%)"
        )
    if abs(measured_fundamental - f1) < 1e-6:
        return design

    origin = design.first_pole_angle if design.ladder_origin is None else design.ladder_origin
    base = replace(design, ladder_origin=origin if design.n_pole_pairs > 1 else None)

    def miss(theta):
        trial = replace(base, first_pole_angle=theta)
        return float(loop_resonances(trial, sample_rate, count=1)[0]) - measured_fundamental

    thetas = np.linspace(1e-4, math.pi - 1e-4, 512)
    vals = np.array([miss(t) for t in thetas])
    brackets = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
    if brackets.size == 0:
        raise RetuneError(f"no first-pole angle puts the fundamental at {measured_fundamental:.1f} Hz")
    roots = [brentq(miss, thetas[i], thetas[i + 1], xtol=1e-13) for i in brackets]
    theta = min(roots, key=lambda t: abs(t - design.first_pole_angle))
    return replace(base, first_pole_angle=theta)


def design_targets(
    series: ModeSeries,
    sample_rate: float = DEFAULT_SAMPLE_RATE,
    f_max: float = RELEVANT_BAND_HZ,
    max_resonances: int | None = None,
) -> PhaseTarget:
    """Phase targets for the part of a series that matters: below ``f_max``, at most ``max_resonances`` nonzero."""
    freqs = [f for f in series.frequencies if f < f_max and f > 0.0]
    if max_resonances is not None:
        freqs = freqs[:max_resonances]
    return build_phase_targets([0.0] + freqs, sample_rate)
