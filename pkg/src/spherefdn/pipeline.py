"""From a ProjectConfig to channel designs, an FdnConfig and design documents."""

from __future__ import annotations

import io
import math
from dataclasses import asdict, dataclass, replace

import numpy as np
import yaml

from .acoustics import box_mode_series, enumerate_triplets, sphere_mode_series
from .allpass import (
    LoopDesign,
    allpass_loop_phase,
    design_targets,
    fit_loop,
    retune_first_pole,
)
from .analysis import reference_modes
from .config import ConfigError, ProjectConfig
from .fdn import (
    FdnConfig,
    attach_losses,
    build_box_fdn,
    build_sphere_fdn,
    diagonal_matrix,
    diffusion_blend,
    harmonic_fallback_channel,
    lambertian_matrix,
)


@dataclass(frozen=True)
class Channel:
    label: str
    kind: str  # allpass | fallback | delay
    design: LoopDesign
    retuned_to: float | None = None


def _sphere_channels(cfg: ProjectConfig) -> list[Channel]:
    pairs = cfg.resolved_pole_pairs()
    limit = cfg.resolved_max_resonances()
    measured = dict(cfg.measured)
    out = []
    for series in sphere_mode_series(cfg.sphere):
        n = series.label
        in_band = [f for f in series.frequencies if 0.0 < f < cfg.band_hz]
        if len(in_band) >= 2 and pairs > 0:
            target = design_targets(series, cfg.sample_rate, cfg.band_hz, limit)
            design = fit_loop(target, pairs, cfg.pole_radius, loop_gain=cfg.loop_gain)
            kind = "allpass"
        else:
            fundamental = next((f for f in series.frequencies if f > 0.0), None)
            if fundamental is None or fundamental >= cfg.sample_rate / 4:
                continue
            design = harmonic_fallback_channel(fundamental, cfg.sample_rate, cfg.loop_gain)
            kind = "fallback"
        retuned = None
        if n in measured:
            retuned = measured[n]
            if kind == "allpass":
                design = retune_first_pole(design, retuned, cfg.sample_rate)
            else:
                design = harmonic_fallback_channel(retuned, cfg.sample_rate, cfg.loop_gain)
        out.append(Channel(str(n), kind, design, retuned))
    return out


def _box_triplets(cfg: ProjectConfig):
    pool = list(cfg.box.triplets) if cfg.box.triplets else enumerate_triplets(4, cfg.box)
    if cfg.box_channels > len(pool):
        raise ConfigError(f"channels = {cfg.box_channels} exceeds the {len(pool)} available triplets")
    return pool[: cfg.box_channels]


def design_channels(cfg: ProjectConfig) -> list[Channel]:
    """Fit every sphere order (or quantise every box path), applying measured overrides."""
    if cfg.shape == "sphere":
        return _sphere_channels(cfg)
    fdn = build_box_fdn(replace(cfg.box, triplets=tuple(_box_triplets(cfg))), cfg.box_channels, "diagonal",
                        cfg.sample_rate, cfg.loop_gain)
    return [Channel(":".join(map(str, t)), "delay", d) for t, d in zip(_box_triplets(cfg), fdn.channels)]


def feedback_matrix(cfg: ProjectConfig, n: int) -> np.ndarray:
    if cfg.matrix.kind == "diagonal":
        return diagonal_matrix(np.ones(n))
    try:
        lamb = lambertian_matrix(n)
    except ValueError as exc:
        raise ConfigError(f"matrix: {exc} (this design has {n} channels)") from None
    if cfg.matrix.kind == "lambertian":
        return lamb
    return diffusion_blend(cfg.matrix.alpha, diagonal_matrix(np.ones(n)), lamb)


def assemble(cfg: ProjectConfig, channels: list[Channel]) -> FdnConfig:
    designs = [ch.design for ch in channels]
    fdn = build_sphere_fdn(designs, feedback_matrix(cfg, len(designs)), sample_rate=cfg.sample_rate)
    return attach_losses(fdn, cfg.losses.fir, cfg.losses.onepole)


def references(cfg: ProjectConfig, max_index: int = 4):
    """(frequency, label) list used to verify a render.

    Theory throughout, except that a measured override replaces the
    fundamental of its order.
    """
    if cfg.shape == "sphere":
        refs = reference_modes(sphere_mode_series(cfg.sphere), max_index=max_index, f_max=cfg.band_hz)
        measured = dict(cfg.measured)
        out, seen = [], set()
        for f, (n, s) in refs:
            if n in measured and n not in seen:
                seen.add(n)
                f = measured[n]
            out.append((f, (n, s)))
        return sorted(out, key=lambda r: r[0])
    series = [box_mode_series(cfg.box, t, cfg.band_hz) for t in _box_triplets(cfg)]
    refs = []
    for ser in series:
        refs += [(f, (":".join(map(str, ser.label)), k)) for k, f in enumerate(ser.frequencies, start=1)]
    return sorted(refs, key=lambda r: r[0])


# --- design documents ---------------------------------------------------------------------------

DOC_VERSION = 1


def design_document(cfg: ProjectConfig, channels: list[Channel]) -> dict:
    fdn = assemble(cfg, channels)
    chans = []
    for ch in channels:
        d = asdict(ch.design)
        d["loss_fir"] = list(d["loss_fir"]) if d["loss_fir"] is not None else None
        chans.append({"label": ch.label, "kind": ch.kind, "retuned_to_hz": ch.retuned_to, **d})
    return {
        "version": DOC_VERSION,
        "sample_rate_hz": cfg.sample_rate,
        "direct_gain": float(fdn.direct_gain),
        "global_lowpass": fdn.global_lowpass,
        "b": [float(v) for v in fdn.b],
        "c": [float(v) for v in fdn.c],
        "matrix": [[float(v) for v in row] for row in fdn.matrix],
        "channels": chans,
    }


def dump_document(doc: dict) -> str:
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None)


def is_design_document(text: str) -> bool:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError:
        return False
    return isinstance(data, dict) and "channels" in data and "version" in data


def fdn_from_document(text: str, source: str = "<design>") -> FdnConfig:
    data = yaml.safe_load(text)
    try:
        fields = {f for f in LoopDesign.__dataclass_fields__}
        designs = []
        for ch in data["channels"]:
            kw = {k: v for k, v in ch.items() if k in fields}
            if kw.get("loss_fir") is not None:
                kw["loss_fir"] = tuple(kw["loss_fir"])
            designs.append(LoopDesign(**kw))
        return FdnConfig(
            channels=tuple(designs),
            matrix=np.array(data["matrix"], dtype=float),
            b=np.array(data["b"], dtype=float),
            c=np.array(data["c"], dtype=float),
            direct_gain=float(data.get("direct_gain", 0.0)),
            global_lowpass=data.get("global_lowpass"),
            sample_rate=float(data["sample_rate_hz"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid design document: {exc}", source) from None


def phase_csv(cfg: ProjectConfig, channels: list[Channel], points: int = 256) -> str:
    """Loop phase of each channel on a grid up to the design band, plottable."""
    buf = io.StringIO()
    buf.write("label,frequency_hz,loop_phase_rad\n")
    f = np.linspace(0.0, cfg.band_hz, points)
    om = 2.0 * math.pi * f / cfg.sample_rate
    for ch in channels:
        phi = allpass_loop_phase(ch.design, om)
        for fi, p in zip(f, phi):
            buf.write(f"{ch.label},{fi:.6f},{p:.9f}\n")
    return buf.getvalue()

