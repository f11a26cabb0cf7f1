"""Feedback delay network runtime and builders.

Per sample and channel i the line output v_i (delayed by D_i samples) runs
through the allpass cascade, the optional two-tap loss FIR and the loop
gain g_i, giving s_i. The network output is y = d x + sum_i c_i s_i, and
every line is fed u = b x + A s. A one-pole lowpass may follow the summed
output. With a diagonal A the channels are independent comb filters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numba
import numpy as np

from .acoustics import BoxSpec, box_delay_seconds, enumerate_triplets
from .allpass import DEFAULT_SAMPLE_RATE, LoopDesign, sections

DEFAULT_LOOP_GAIN = 0.997


class StabilityError(ValueError):
    pass


def _readonly(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


def spectral_radius(matrix) -> float:
    m = np.asarray(matrix, dtype=float)
    return float(np.max(np.abs(np.linalg.eigvals(m)))) if m.size else 0.0


def _channel_peak_gain(design: LoopDesign) -> float:
    fir = design.loss_fir
    return design.loop_gain * (abs(fir[0]) + abs(fir[1]) if fir is not None else 1.0)


@dataclass(frozen=True)
class FdnConfig:
    channels: tuple[LoopDesign, ...]
    matrix: np.ndarray
    b: np.ndarray
    c: np.ndarray
    direct_gain: float = 0.0
    global_lowpass: float | None = None
    sample_rate: float = DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))
        n = len(self.channels)
        if n == 0:
            raise ValueError("an FDN needs at least one channel")
        object.__setattr__(self, "matrix", _readonly(self.matrix))
        object.__setattr__(self, "b", _readonly(self.b))
        object.__setattr__(self, "c", _readonly(self.c))
        if self.matrix.shape != (n, n) or self.b.shape != (n,) or self.c.shape != (n,):
            raise ValueError(f"matrix must be {n}x{n} and b, c of length {n}")
        if self.global_lowpass is not None and not 0.0 <= self.global_lowpass < 1.0:
            raise ValueError("global one-pole coefficient must be in [0, 1)")
        if self.sample_rate <= 0:
            raise ValueError("sample rate must be positive")
        radius = spectral_radius(self.matrix)
        if radius > 1.0 + 1e-9:
            raise StabilityError(f"feedback matrix spectral radius {radius:.6f} exceeds 1")
        lossy = any(ch.loop_gain < 1.0 or ch.loss_fir is not None for ch in self.channels)
        if lossy:
            worst = radius * max(_channel_peak_gain(ch) for ch in self.channels)
            if worst >= 1.0:
                raise StabilityError(f"loop magnitude bound {worst:.6f} is not below 1")

    @property
    def size(self) -> int:
        return len(self.channels)

    def delays(self) -> np.ndarray:
        return np.array([ch.delay_samples for ch in self.channels], dtype=np.int64)

    def __eq__(self, other):
        if not isinstance(other, FdnConfig):
            return NotImplemented
        return (
            self.channels == other.channels
            and np.array_equal(self.matrix, other.matrix)
            and np.array_equal(self.b, other.b)
            and np.array_equal(self.c, other.c)
            and self.direct_gain == other.direct_gain
            and self.global_lowpass == other.global_lowpass
            and self.sample_rate == other.sample_rate
        )

    __hash__ = None


def _pack(config: FdnConfig):
    n = config.size
    pmax = max(1, max(ch.n_pole_pairs for ch in config.channels))
    coeffs = np.zeros((n, pmax, 2))
    counts = np.zeros(n, dtype=np.int64)
    fir = np.zeros((n, 2))
    gains = np.zeros(n)
    for i, ch in enumerate(config.channels):
        sec = sections(ch)
        counts[i] = len(sec)
        if sec:
            coeffs[i, : len(sec)] = sec
        fir[i] = ch.loss_fir if ch.loss_fir is not None else (1.0, 0.0)
        gains[i] = ch.loop_gain
    return coeffs, counts, fir, gains


@dataclass
class FdnState:
    """Mutable runtime state: delay rings, section states, FIR memory, clock."""

    delays: np.ndarray
    n_sections: int
    buffers: np.ndarray = field(init=False)
    positions: np.ndarray = field(init=False)
    ap_state: np.ndarray = field(init=False)
    fir_state: np.ndarray = field(init=False)
    lowpass_state: np.ndarray = field(init=False)
    clock: int = field(init=False, default=0)

    def __post_init__(self):
        self.delays = np.asarray(self.delays, dtype=np.int64)
        self.reset()

    @classmethod
    def for_config(cls, config: FdnConfig) -> "FdnState":
        return cls(config.delays(), max(1, max(ch.n_pole_pairs for ch in config.channels)))

    def reset(self) -> None:
        n = self.delays.size
        self.buffers = np.zeros((n, int(self.delays.max())))
        self.positions = np.zeros(n, dtype=np.int64)
        self.ap_state = np.zeros((n, self.n_sections, 2))
        self.fir_state = np.zeros(n)
        self.lowpass_state = np.zeros(1)
        self.clock = 0

    def matches(self, config: FdnConfig) -> bool:
        return np.array_equal(self.delays, config.delays()) and self.n_sections == max(
            1, max(ch.n_pole_pairs for ch in config.channels)
        )


@numba.njit(cache=True)
def _run(x, matrix, b, c, d, lp, delays, coeffs, counts, fir, gains, buffers, positions, ap_state, fir_state, lp_state):
    n = delays.shape[0]
    y = np.empty_like(x)
    s = np.empty(n)
    for t in range(x.shape[0]):
        xt = x[t]
        acc = d * xt
        for i in range(n):
            v = buffers[i, positions[i]]
            for k in range(counts[i]):
                a1 = coeffs[i, k, 0]
                a2 = coeffs[i, k, 1]
                out = a2 * v + ap_state[i, k, 0]
                ap_state[i, k, 0] = a1 * v - a1 * out + ap_state[i, k, 1]
                ap_state[i, k, 1] = v - a2 * out
                v = out
            w = fir[i, 0] * v + fir[i, 1] * fir_state[i]
            fir_state[i] = v
            s[i] = gains[i] * w
            acc += c[i] * s[i]
        if lp >= 0.0:
            acc = (1.0 - lp) * acc + lp * lp_state[0]
            lp_state[0] = acc
        y[t] = acc
        for i in range(n):
            u = b[i] * xt
            for j in range(n):
                u += matrix[i, j] * s[j]
            buffers[i, positions[i]] = u
            positions[i] += 1
            if positions[i] >= delays[i]:
                positions[i] = 0
    return y


def process(config: FdnConfig, state: FdnState, x) -> np.ndarray:
    """Run one block through the network, advancing ``state`` in place.

    Results do not depend on how a signal is split into blocks.
    """
    if not state.matches(config):
        raise ValueError("state was not initialised for this configuration")
    xa = np.ascontiguousarray(x, dtype=float)
    if xa.ndim != 1:
        raise ValueError("input must be one-dimensional (mono)")
    coeffs, counts, fir, gains = _pack(config)
    lp = -1.0 if config.global_lowpass is None else float(config.global_lowpass)
    y = _run(
        xa, np.ascontiguousarray(config.matrix), config.b, config.c, float(config.direct_gain), lp,
        state.delays, coeffs, counts, fir, gains,
        state.buffers, state.positions, state.ap_state, state.fir_state, state.lowpass_state,
    )
    state.clock += xa.size
    return y


def render(config: FdnConfig, x=None, seconds: float | None = None) -> np.ndarray:
    """Process ``x`` from zero state, or the impulse response of length ``seconds``."""
    if x is None:
        if seconds is None or seconds <= 0:
            raise ValueError("give an input signal or a positive duration")
        x = np.zeros(int(round(seconds * config.sample_rate)))
        x[0] = 1.0
    return process(config, FdnState.for_config(config), x)


def diagonal_matrix(gains: Sequence[float]) -> np.ndarray:
    g = np.asarray(gains, dtype=float)
    if g.ndim != 1 or g.size == 0:
        raise ValueError("gains must be a nonempty list")
    if np.any(np.abs(g) > 1.0):
        raise StabilityError(f"diagonal gains must satisfy |g| <= 1, got max {np.max(np.abs(g))}")
    return np.diag(g)


def lambertian_matrix(n: int, gain: float = 1.0) -> np.ndarray:
    """gain * H / sqrt(n) with H the Sylvester-Hadamard sign pattern; n a power of two."""
    if n < 1 or n & (n - 1):
        raise ValueError(f"Lambertian matrix needs a power-of-two size, got {n}")
    if abs(gain) > 1.0:
        raise StabilityError("Lambertian gain must satisfy |gain| <= 1")
    h = np.ones((1, 1))
    while h.shape[0] < n:
        h = np.block([[h, h], [h, -h]])
    return gain * h / math.sqrt(n)


def diffusion_blend(alpha: float, diag, lamb) -> np.ndarray:
    """(1 - alpha) diag + alpha lamb, rescaled so the spectral radius does not exceed the inputs'."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must be in [0, 1]")
    d = np.asarray(diag, dtype=float)
    lm = np.asarray(lamb, dtype=float)
    if d.shape != lm.shape or d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError("matrices must be square and of equal shape")
    if alpha == 0.0:
        return d.copy()
    if alpha == 1.0:
        return lm.copy()
    m = (1.0 - alpha) * d + alpha * lm
    limit = max(spectral_radius(d), spectral_radius(lm))
    # the 2-norm bounds the spectral radius and keeps the blend non-expansive
    norm = np.linalg.norm(m, 2)
    if norm > limit:
        m = m * (limit / norm)
    return m


def _matrix_for(choice, n: int):
    if isinstance(choice, str):
        if choice == "diagonal":
            return diagonal_matrix(np.ones(n))
        if choice == "lambertian":
            return lambertian_matrix(n)
        raise ValueError(f"unknown matrix choice {choice!r}")
    return np.asarray(choice, dtype=float)


def build_sphere_fdn(
    designs: Sequence[LoopDesign],
    matrix="diagonal",
    b=None,
    c=None,
    sample_rate: float = DEFAULT_SAMPLE_RATE,
    loop_gain: float | None = None,
    direct_gain: float = 0.0,
) -> FdnConfig:
    """One channel per Bessel order, summed with unit gains by default."""
    designs = list(designs)
    if not designs:
        raise ValueError("need at least one channel design")
    if loop_gain is not None:
        designs = [replace(dsg, loop_gain=loop_gain) for dsg in designs]
    n = len(designs)
    return FdnConfig(
        channels=tuple(designs),
        matrix=_matrix_for(matrix, n),
        b=np.ones(n) if b is None else b,
        c=np.ones(n) if c is None else c,
        direct_gain=direct_gain,
        sample_rate=sample_rate,
    )


def build_box_fdn(
    spec: BoxSpec,
    n: int,
    matrix="diagonal",
    sample_rate: float = DEFAULT_SAMPLE_RATE,
    loop_gain: float = DEFAULT_LOOP_GAIN,
) -> FdnConfig:
    """Harmonic comb per triplet (lowest fundamentals first unless ``spec.triplets`` is given)."""
    pool = list(spec.triplets) if spec.triplets else enumerate_triplets(4, spec)
    if not 1 <= n <= len(pool):
        raise ValueError(f"need 1 <= N <= {len(pool)} available triplets, got {n}")
    channels = []
    for t in pool[:n]:
        delay = int(round(box_delay_seconds(spec, t) * sample_rate))
        if delay < 1:
            raise ValueError(f"triplet {t} rounds to a zero-sample delay")
        channels.append(LoopDesign(delay, n_pole_pairs=0, loop_gain=loop_gain))
    return FdnConfig(tuple(channels), _matrix_for(matrix, n), np.ones(n), np.ones(n), sample_rate=sample_rate)


def attach_losses(config: FdnConfig, fir2=None, global_onepole: float | None = None) -> FdnConfig:
    """Insert a two-tap FIR in each loop and/or a one-pole lowpass on the output.

    ``fir2`` is one (h0, h1) pair for all channels or one pair per channel.
    A unit FIR (1, 0) leaves a channel as it is.
    """
    channels = list(config.channels)
    if fir2 is not None:
        taps = np.asarray(fir2, dtype=float)
        if taps.shape == (2,):
            taps = np.tile(taps, (config.size, 1))
        if taps.shape != (config.size, 2):
            raise ValueError(f"fir2 must be one pair or {config.size} pairs")
        radius = spectral_radius(config.matrix)
        for i, (h0, h1) in enumerate(taps):
            if h0 == 1.0 and h1 == 0.0:
                continue
            bound = channels[i].loop_gain * (abs(h0) + abs(h1)) * radius
            if bound >= 1.0:
                raise StabilityError(f"channel {i}: loop magnitude bound {bound:.6f} is not below 1")
            channels[i] = replace(channels[i], loss_fir=(float(h0), float(h1)))
    lowpass = config.global_lowpass if global_onepole is None else global_onepole
    return replace(config, channels=tuple(channels), global_lowpass=lowpass)


def harmonic_fallback_channel(fundamental: float, sample_rate: float = DEFAULT_SAMPLE_RATE, loop_gain: float = 1.0) -> LoopDesign:
    """Plain comb tuned to ``fundamental``: delay round(fs / f0), no allpass."""
    if not 0.0 < fundamental < sample_rate / 4.0:
        raise ValueError(f"fundamental {fundamental} Hz must be in (0, fs/4)")
    return LoopDesign(int(round(sample_rate / fundamental)), n_pole_pairs=0, loop_gain=loop_gain)
