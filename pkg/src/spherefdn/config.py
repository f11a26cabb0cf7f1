"""Project configuration documents (YAML) with line-precise validation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import yaml

from .acoustics import T_MAX, T_MIN, BoxSpec, SphereSpec, _check_triplet
from .allpass import DEFAULT_POLE_RADIUS, RELEVANT_BAND_HZ, default_pole_pairs
from .bessel import MAX_ORDER, MAX_ROOTS
from .fdn import DEFAULT_LOOP_GAIN


class ConfigError(ValueError):
    def __init__(self, message: str, source: str = "<config>", line: int | None = None):
        where = f"{source}:{line}" if line is not None else source
        super().__init__(f"{where}: {message}")
        self.line = line


@dataclass(frozen=True)
class MatrixChoice:
    kind: str = "diagonal"  # diagonal | lambertian | blend
    alpha: float = 0.0


@dataclass(frozen=True)
class LossSettings:
    fir: tuple[float, float] | None = None
    onepole: float | None = None


@dataclass(frozen=True)
class ProjectConfig:
    shape: str
    sphere: SphereSpec | None = None
    box: BoxSpec | None = None
    box_channels: int = 0
    sample_rate: float = 44100.0
    pole_pairs: int | None = None  # None: chosen from the radius
    pole_radius: float = DEFAULT_POLE_RADIUS
    band_hz: float = RELEVANT_BAND_HZ
    max_resonances: int | None = None  # None: pole_pairs + 1
    matrix: MatrixChoice = field(default_factory=MatrixChoice)
    loop_gain: float = DEFAULT_LOOP_GAIN
    losses: LossSettings = field(default_factory=LossSettings)
    measured: tuple[tuple[int, float], ...] = ()
    tolerance_percent: float = 3.0
    render_seconds: float = 2.0

    def resolved_pole_pairs(self) -> int:
        if self.pole_pairs is not None:
            return self.pole_pairs
        return default_pole_pairs(self.sphere.radius) if self.sphere else 0

    def resolved_max_resonances(self) -> int:
        return self.max_resonances if self.max_resonances is not None else self.resolved_pole_pairs() + 1


def _line_map(node, path=(), out=None) -> dict:
    out = {} if out is None else out
    out[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            _line_map(v, path + (k.value,), out)
            out[path + (k.value,)] = k.start_mark.line + 1
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            _line_map(v, path + (i,), out)
    return out


class _Reader:
    def __init__(self, data: dict, lines: dict, source: str):
        self.data, self.lines, self.source = data, lines, source
        self.seen: set[tuple] = set()

    def fail(self, path: tuple, message: str):
        line = None
        p = tuple(path)
        while p and p not in self.lines:
            p = p[:-1]
        line = self.lines.get(p)
        name = ".".join(str(k) for k in path) or "document"
        raise ConfigError(f"{name}: {message}", self.source, line)

    def get(self, *path, default=Any, kind=None, check=None, why=""):
        node = self.data
        for i, key in enumerate(path):
            if not isinstance(node, dict):
                self.fail(path[:i], "expected a mapping")
            if key not in node:
                if default is Any:
                    self.fail(path[:i] or path, f"missing required key '{key}'")
                return default
            node = node[key]
        self.seen.add(tuple(path))
        if node is None and default is not Any:
            return default
        if kind is float:
            if isinstance(node, bool) or not isinstance(node, (int, float)) or not math.isfinite(node):
                self.fail(path, f"expected a number, got {node!r}")
            node = float(node)
        elif kind is int:
            if isinstance(node, bool) or not isinstance(node, int):
                self.fail(path, f"expected an integer, got {node!r}")
        elif kind is str and not isinstance(node, str):
            self.fail(path, f"expected a string, got {node!r}")
        if check is not None and not check(node):
            self.fail(path, why or f"invalid value {node!r}")
        return node


_KNOWN = {
    "shape", "radius_m", "diameter_m", "temperature_c", "sample_rate_hz", "max_order", "roots_per_order",
    "dimensions_m", "channels", "triplets", "design", "matrix", "loop_gain", "losses", "measured", "verify",
}


def parse_config(text: str, source: str = "<config>") -> ProjectConfig:
    try:
        root = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"not valid YAML: {getattr(exc, 'problem', exc)}", source,
                          mark.line + 1 if mark else None) from None
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", source, 1)
    r = _Reader(data, _line_map(root), source)
    for key in data:
        if key not in _KNOWN:
            r.fail((key,), "unknown key")

    shape = r.get("shape", kind=str, check=lambda s: s in ("sphere", "box"), why="must be 'sphere' or 'box'")
    temp = r.get("temperature_c", default=23.0, kind=float, check=lambda t: T_MIN < t < T_MAX,
                 why=f"temperature must be in ({T_MIN}, {T_MAX}) C")
    fs = r.get("sample_rate_hz", default=44100.0, kind=float, check=lambda v: 8000 <= v <= 384000,
               why="sample rate must be in [8000, 384000] Hz")

    sphere = box = None
    box_channels = 0
    if shape == "sphere":
        if "radius_m" in data and "diameter_m" in data:
            r.fail(("diameter_m",), "give radius_m or diameter_m, not both")
        if "diameter_m" in data:
            radius = r.get("diameter_m", kind=float, check=lambda v: 0.02 < v < 20, why="diameter out of range") / 2
        else:
            radius = r.get("radius_m", kind=float, check=lambda v: 0.01 < v < 10, why="radius must be in (0.01, 10) m")
        max_order = r.get("max_order", default=6, kind=int, check=lambda v: 0 <= v <= MAX_ORDER,
                          why=f"max_order must be in [0, {MAX_ORDER}]")
        per_order = r.get("roots_per_order", default=8, kind=int, check=lambda v: 2 <= v <= MAX_ROOTS,
                          why=f"roots_per_order must be in [2, {MAX_ROOTS}]")
        sphere = SphereSpec(radius, temp, max_order, per_order)
    else:
        dims = r.get("dimensions_m", check=lambda d: isinstance(d, list) and len(d) == 3, why="need [X, Y, Z]")
        for i, v in enumerate(dims):
            if isinstance(v, bool) or not isinstance(v, (int, float)) or v <= 0:
                r.fail(("dimensions_m", i), "dimensions must be positive numbers")
        triplets = []
        for i, t in enumerate(r.get("triplets", default=[], check=lambda v: isinstance(v, list), why="must be a list")):
            try:
                triplets.append(_check_triplet(t if isinstance(t, (list, tuple)) else ()))
            except (ValueError, TypeError) as exc:
                r.fail(("triplets", i), str(exc))
        box = BoxSpec(*(float(v) for v in dims), temperature=temp, triplets=tuple(triplets))
        box_channels = r.get("channels", default=len(triplets) or 4, kind=int, check=lambda v: v >= 1,
                             why="channels must be >= 1")

    pole_pairs = r.get("design", "pole_pairs", default=None)
    if pole_pairs == "auto":
        pole_pairs = None
    elif pole_pairs is not None:
        pole_pairs = r.get("design", "pole_pairs", kind=int, check=lambda v: 0 <= v <= 16,
                           why="pole_pairs must be 'auto' or an integer in [0, 16]")
    pole_radius = r.get("design", "pole_radius", default=DEFAULT_POLE_RADIUS, kind=float,
                        check=lambda v: 0 <= v < 1, why="pole radius must be in [0, 1)")
    band = r.get("design", "band_hz", default=RELEVANT_BAND_HZ, kind=float, check=lambda v: 0 < v < fs / 2,
                 why="band must be positive and below Nyquist")
    max_res = r.get("design", "max_resonances", default=None)
    if max_res == "auto":
        max_res = None
    elif max_res is not None:
        max_res = r.get("design", "max_resonances", kind=int, check=lambda v: v >= 2, why="need at least 2")

    m = r.get("matrix", default="diagonal")
    if isinstance(m, dict):
        alpha = r.get("matrix", "blend", kind=float, check=lambda a: 0 <= a <= 1, why="blend must be in [0, 1]")
        matrix = MatrixChoice("blend", alpha)
    elif m in ("diagonal", "lambertian"):
        matrix = MatrixChoice(m)
    else:
        r.fail(("matrix",), "must be 'diagonal', 'lambertian' or {blend: alpha}")

    gain = r.get("loop_gain", default=DEFAULT_LOOP_GAIN, kind=float, check=lambda g: 0 < g <= 1,
                 why="loop gain must be in (0, 1]")
    fir = r.get("losses", "fir", default=None)
    if fir is not None:
        if not (isinstance(fir, list) and len(fir) == 2 and all(isinstance(v, (int, float)) for v in fir)):
            r.fail(("losses", "fir"), "fir must be two numbers [h0, h1]")
        if gain * (abs(fir[0]) + abs(fir[1])) >= 1.0:
            r.fail(("losses", "fir"), "loop magnitude would reach 1 (unstable)")
        fir = (float(fir[0]), float(fir[1]))
    onepole = r.get("losses", "onepole", default=None)
    if onepole is not None:
        onepole = r.get("losses", "onepole", kind=float, check=lambda p: 0 <= p < 1, why="must be in [0, 1)")

    measured = []
    raw = r.get("measured", default=[], check=lambda v: isinstance(v, list), why="must be a list of [order, Hz]")
    for i, item in enumerate(raw):
        ok = isinstance(item, list) and len(item) == 2 and isinstance(item[0], int) and isinstance(item[1], (int, float))
        if not ok or item[1] <= 0:
            r.fail(("measured", i), "each entry must be [order, frequency_hz > 0]")
        if shape != "sphere" or not 0 <= item[0] <= sphere.max_order:
            r.fail(("measured", i), f"order {item[0]} is not a designed sphere channel")
        if item[1] >= fs / 2:
            r.fail(("measured", i), "frequency must be below Nyquist")
        measured.append((int(item[0]), float(item[1])))
    if len({n for n, _ in measured}) != len(measured):
        r.fail(("measured",), "each order may be listed once")

    tol = r.get("verify", "tolerance_percent", default=3.0, kind=float, check=lambda v: v > 0, why="must be > 0")
    secs = r.get("verify", "seconds", default=2.0, kind=float, check=lambda v: 2 <= v <= 60,
                 why="verification renders must be 2..60 s long")

    return ProjectConfig(
        shape=shape, sphere=sphere, box=box, box_channels=box_channels, sample_rate=fs,
        pole_pairs=pole_pairs, pole_radius=pole_radius, band_hz=band, max_resonances=max_res,
        matrix=matrix, loop_gain=gain, losses=LossSettings(fir, onepole), measured=tuple(measured),
        tolerance_percent=tol, render_seconds=secs,
    )


def load_config(path) -> ProjectConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read: {exc.strerror}", str(p)) from None
    return parse_config(text, str(p))


def with_sample_rate(cfg: ProjectConfig, sample_rate: float) -> ProjectConfig:
    if not 8000 <= sample_rate <= 384000:
        raise ConfigError("sample rate override must be in [8000, 384000] Hz", "--sample-rate")
    return replace(cfg, sample_rate=float(sample_rate))
