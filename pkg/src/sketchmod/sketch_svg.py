"""Vector sketches: SVG I/O, stochastic stroke stylization and rasterization.

Stylization deforms each stroke independently:

* global transform about the stroke centroid, applied as
  rotate -> per-axis scale -> translate;
* coherent local noise, a smooth offset field along the stroke's arc length;
* over-sketching, i.e. the stroke is traced several times with fresh draws;
* stroke width jitter.
"""

from __future__ import annotations

import math
import re
import xml.etree.ElementTree as ET
from dataclasses import asdict, dataclass, field

import numpy as np

from .seeding import make_rng

DEFAULT_CANVAS = 256.0
FLATTEN_TOLERANCE = 0.1
MIN_WIDTH = 0.5
SVG_NS = "http://www.w3.org/2000/svg"


class SvgError(ValueError):
    """Malformed or unsupported SVG content."""


@dataclass(frozen=True, eq=False)
class Stroke:
    points: np.ndarray  # (K, 2) px
    width: float = 1.0

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64).reshape(-1, 2)
        if len(pts) < 2:
            raise ValueError("a stroke needs at least 2 points")
        if not np.all(np.isfinite(pts)):
            raise ValueError("stroke points must be finite")
        if not self.width > 0:
            raise ValueError("stroke width must be positive")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "width", float(self.width))


@dataclass(frozen=True, eq=False)
class Sketch:
    strokes: tuple[Stroke, ...] = ()
    width: float = DEFAULT_CANVAS
    height: float = DEFAULT_CANVAS

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ValueError("canvas dimensions must be positive")
        object.__setattr__(self, "strokes", tuple(self.strokes))


@dataclass(frozen=True)
class StylizeParams:
    rot_max: float = 2.5  # degrees
    scale_range: tuple[float, float] = (0.9, 1.1)
    trans_radius: float = 2.5  # px
    local_noise_max: float = 1.3  # px
    max_traces: int = 2
    width_mean: float = 2.5  # px
    width_var: float = 1.5  # px^2
    noise_wavelength: float = 16.0  # px

    def __post_init__(self):
        lo, hi = self.scale_range
        object.__setattr__(self, "scale_range", (float(lo), float(hi)))
        if self.rot_max < 0:
            raise ValueError("rot_max must be >= 0")
        if not 0 < lo <= hi:
            raise ValueError("scale_range must satisfy 0 < lo <= hi")
        if self.trans_radius < 0 or self.local_noise_max < 0 or self.width_var < 0:
            raise ValueError("radii, amplitudes and variances must be >= 0")
        if int(self.max_traces) != self.max_traces or self.max_traces < 1:
            raise ValueError("max_traces must be an integer >= 1")
        if not self.width_mean > 0:
            raise ValueError("width_mean must be positive")
        if not self.noise_wavelength > 0:
            raise ValueError("noise_wavelength must be positive")

    @classmethod
    def identity(cls, width: float = 2.5) -> "StylizeParams":
        return cls(
            rot_max=0.0,
            scale_range=(1.0, 1.0),
            trans_radius=0.0,
            local_noise_max=0.0,
            max_traces=1,
            width_mean=width,
            width_var=0.0,
        )

    @property
    def width_bounds(self) -> tuple[float, float]:
        hi = self.width_mean + 3.0 * math.sqrt(self.width_var)
        return min(MIN_WIDTH, hi), hi


@dataclass
class TraceRecord:
    """Parameters drawn for one emitted stroke."""

    stroke_index: int
    trace_index: int
    rotation_deg: float
    scale: tuple[float, float]
    translation: tuple[float, float]
    noise_controls: list = field(repr=False)
    width: float

    def to_dict(self) -> dict:
        return asdict(self)


# --------------------------------------------------------------------------
# transforms

_TRANSFORM_RE = re.compile(r"([A-Za-z]+)\s*\(([^)]*)\)")
_NUMBER_RE = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"


def _numbers(text: str) -> list[float]:
    return [float(t) for t in re.findall(_NUMBER_RE, text)]


def parse_transform(text: str | None) -> np.ndarray:
    """3x3 affine matrix of an SVG transform list (applied right to left)."""
    m = np.eye(3)
    if not text:
        return m
    consumed = 0
    for match in _TRANSFORM_RE.finditer(text):
        if text[consumed : match.start()].strip(" \t\r\n,"):
            raise SvgError(f"malformed transform {text!r}")
        consumed = match.end()
        name, args = match.group(1), _numbers(match.group(2))
        t = np.eye(3)
        if name == "translate" and len(args) in (1, 2):
            t[0, 2] = args[0]
            t[1, 2] = args[1] if len(args) == 2 else 0.0
        elif name == "scale" and len(args) in (1, 2):
            t[0, 0] = args[0]
            t[1, 1] = args[1] if len(args) == 2 else args[0]
        elif name == "rotate" and len(args) in (1, 3):
            a = math.radians(args[0])
            c, s = math.cos(a), math.sin(a)
            r = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
            if len(args) == 3:
                cx, cy = args[1], args[2]
                pre = np.array([[1, 0, cx], [0, 1, cy], [0, 0, 1.0]])
                post = np.array([[1, 0, -cx], [0, 1, -cy], [0, 0, 1.0]])
                r = pre @ r @ post
            t = r
        elif name == "matrix" and len(args) == 6:
            a, b, c, d, e, f = args
            t = np.array([[a, c, e], [b, d, f], [0.0, 0.0, 1.0]])
        else:
            raise SvgError(f"unsupported transform {match.group(0)!r}")
        m = m @ t
    if text[consumed:].strip(" \t\r\n,"):
        raise SvgError(f"malformed transform {text!r}")
    return m


def _apply(m: np.ndarray, pts: np.ndarray) -> np.ndarray:
    return pts @ m[:2, :2].T + m[:2, 2]


# --------------------------------------------------------------------------
# path data

def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _length(value: str | None, default: float | None = None) -> float | None:
    if value is None:
        return default
    nums = re.match(r"\s*(" + _NUMBER_RE + r")\s*(px)?\s*$", value)
    if not nums:
        raise SvgError(f"unsupported length {value!r}")
    return float(nums.group(1))


def _style_width(elem: ET.Element) -> str | None:
    style = elem.get("style")
    if style:
        for decl in style.split(";"):
            if ":" in decl:
                key, val = decl.split(":", 1)
                if key.strip() == "stroke-width":
                    return val.strip()
    return elem.get("stroke-width")


def _segment_distance(p, a, b) -> float:
    d = b - a
    dd = float(d @ d)
    t = 0.0 if dd == 0 else min(max(float((p - a) @ d) / dd, 0.0), 1.0)
    return math.dist(p, a + t * d)


def flatten_cubic(p0, p1, p2, p3, tol: float = FLATTEN_TOLERANCE, depth: int = 0) -> list[np.ndarray]:
    """Polyline points (excluding ``p0``) approximating a cubic Bezier.

    Subdivides until both inner control points lie within ``tol`` of the
    chord; by the convex hull property the curve then stays within ``tol``
    of the emitted segments.
    """
    flat = max(_segment_distance(p1, p0, p3), _segment_distance(p2, p0, p3)) <= tol
    if flat or depth >= 24:
        return [p3]
    p01, p12, p23 = (p0 + p1) / 2, (p1 + p2) / 2, (p2 + p3) / 2
    p012, p123 = (p01 + p12) / 2, (p12 + p23) / 2
    mid = (p012 + p123) / 2
    return flatten_cubic(p0, p01, p012, mid, tol, depth + 1) + flatten_cubic(mid, p123, p23, p3, tol, depth + 1)


_PATH_TOKEN = re.compile(r"([A-Za-z])|(" + _NUMBER_RE + r")|([\s,]+)|(.)")


def parse_path(d: str, transform: np.ndarray, tol: float = FLATTEN_TOLERANCE) -> list[np.ndarray]:
    """Subpaths of an SVG path (M/L/C/Z commands) as transformed polylines."""
    tokens: list[str | float] = []
    for cmd, num, _, bad in _PATH_TOKEN.findall(d):
        if bad:
            raise SvgError(f"unexpected character {bad!r} in path data")
        if cmd:
            if cmd not in "MmLlCcZz":
                raise SvgError(f"unsupported path command {cmd!r}")
            tokens.append(cmd)
        elif num:
            tokens.append(float(num))

    subpaths: list[list[np.ndarray]] = []
    current: list[np.ndarray] = []
    pos = np.zeros(2)
    start = np.zeros(2)
    i = 0
    cmd = None

    def take(k):
        nonlocal i
        vals = tokens[i : i + k]
        if len(vals) < k or any(isinstance(v, str) for v in vals):
            raise SvgError(f"path command {cmd!r} is missing arguments")
        i += k
        return np.array(vals, dtype=np.float64)

    def flush():
        if len(current) >= 2:
            subpaths.append(current.copy())
        current.clear()

    while i < len(tokens):
        tok = tokens[i]
        if isinstance(tok, str):
            cmd = tok
            i += 1
        elif cmd is None:
            raise SvgError("path data must start with a command")
        elif cmd in "Zz":
            raise SvgError("numbers after closepath")
        rel = cmd.islower()
        c = cmd.upper()
        if c == "M":
            flush()
            pos = take(2) + (pos if rel else 0)
            start = pos.copy()
            current.append(_apply(transform, pos))
            # further coordinate pairs are implicit lineto
            cmd = "l" if rel else "L"
        elif c == "L":
            if not current:
                current.append(_apply(transform, pos))
            pos = take(2) + (pos if rel else 0)
            current.append(_apply(transform, pos))
        elif c == "C":
            if not current:
                current.append(_apply(transform, pos))
            ctrl = take(6).reshape(3, 2) + (pos if rel else 0)
            q = _apply(transform, np.vstack([pos, ctrl]))
            current.extend(flatten_cubic(q[0], q[1], q[2], q[3], tol))
            pos = ctrl[2]
        elif c == "Z":
            if current:
                current.append(_apply(transform, start))
            flush()
            pos = start.copy()
    flush()
    return [np.array(sp) for sp in subpaths]


# --------------------------------------------------------------------------
# SVG read / write

def parse_svg_string(text: str, tol: float = FLATTEN_TOLERANCE) -> Sketch:
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise SvgError(f"malformed XML: {exc}") from exc
    if _local(root.tag) != "svg":
        raise SvgError("root element is not <svg>")

    width = _length(root.get("width"))
    height = _length(root.get("height"))
    base = np.eye(3)
    view_box = root.get("viewBox")
    if view_box:
        vb = _numbers(view_box)
        if len(vb) != 4 or vb[2] <= 0 or vb[3] <= 0:
            raise SvgError(f"bad viewBox {view_box!r}")
        width = vb[2] if width is None else width
        height = vb[3] if height is None else height
        base = np.array([[width / vb[2], 0, -vb[0] * width / vb[2]],
                         [0, height / vb[3], -vb[1] * height / vb[3]],
                         [0, 0, 1.0]])
    width = DEFAULT_CANVAS if width is None else width
    height = DEFAULT_CANVAS if height is None else height

    strokes: list[Stroke] = []
    counter = 0

    def visit(elem: ET.Element, m: np.ndarray, stroke_width: float):
        nonlocal counter
        m = m @ parse_transform(elem.get("transform"))
        sw = _style_width(elem)
        if sw is not None:
            stroke_width = _length(sw)
        tag = _local(elem.tag)
        lines: list[np.ndarray] = []
        if tag in ("path", "line", "polyline", "polygon"):
            index = counter
            counter += 1
            try:
                if tag == "path":
                    lines = parse_path(elem.get("d", ""), m, tol)
                elif tag == "line":
                    pts = np.array([[_length(elem.get("x1"), 0.0), _length(elem.get("y1"), 0.0)],
                                    [_length(elem.get("x2"), 0.0), _length(elem.get("y2"), 0.0)]])
                    lines = [_apply(m, pts)]
                else:
                    vals = _numbers(elem.get("points", ""))
                    if len(vals) % 2:
                        raise SvgError("odd number of coordinates in points")
                    pts = np.array(vals, dtype=np.float64).reshape(-1, 2)
                    if tag == "polygon" and len(pts):
                        pts = np.vstack([pts, pts[:1]])
                    lines = [_apply(m, pts)] if len(pts) >= 2 else []
            except SvgError as exc:
                raise SvgError(f"element {index} <{tag}>: {exc}") from None
            # stroke width follows the transform's mean linear scale
            w = stroke_width * math.sqrt(abs(np.linalg.det(m[:2, :2])))
            for pts in lines:
                strokes.append(Stroke(pts, w if w > 0 else 1.0))
        for child in elem:
            visit(child, m, stroke_width)

    visit(root, base, 1.0)
    return Sketch(tuple(strokes), float(width), float(height))


def parse_svg(path, tol: float = FLATTEN_TOLERANCE) -> Sketch:
    """Read an SVG file; every subpath / line / polyline becomes one stroke."""
    with open(path, "r", encoding="utf-8") as fh:
        return parse_svg_string(fh.read(), tol)


def _fmt(x: float) -> str:
    return repr(float(x))


def svg_string(sketch: Sketch) -> str:
    w, h = _fmt(sketch.width), _fmt(sketch.height)
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="{SVG_NS}" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
    ]
    for s in sketch.strokes:
        pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in s.points.tolist())
        lines.append(
            f'  <polyline points="{pts}" fill="none" stroke="black" '
            f'stroke-width="{_fmt(s.width)}" stroke-linecap="round" stroke-linejoin="round"/>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def write_svg(sketch: Sketch, path) -> None:
    """One black, unfilled ``polyline`` per stroke; coordinates written exactly."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(svg_string(sketch))


# --------------------------------------------------------------------------
# stylization

def densify(points: np.ndarray, spacing: float) -> np.ndarray:
    """Insert evenly spaced points so no segment is longer than ``spacing``.

    Original vertices are kept.
    """
    out = [points[:1]]
    for a, b in zip(points[:-1], points[1:]):
        k = max(1, math.ceil(math.dist(a, b) / spacing))
        t = np.arange(1, k + 1)[:, None] / k
        out.append(a + t * (b - a))
    return np.vstack(out)


def arc_length(points: np.ndarray) -> np.ndarray:
    seg = np.linalg.norm(np.diff(points, axis=0), axis=1)
    return np.concatenate([[0.0], np.cumsum(seg)])


def local_noise(s: np.ndarray, controls: np.ndarray, wavelength: float) -> np.ndarray:
    """Offsets at arc lengths ``s``, cosine-interpolated between controls.

    Control ``k`` sits at arc length ``k * wavelength``.
    """
    u = np.asarray(s, dtype=np.float64) / wavelength
    k = np.minimum(np.floor(u).astype(int), len(controls) - 2)
    frac = u - k
    w = (0.5 * (1.0 - np.cos(np.pi * frac)))[:, None]
    return controls[k] * (1.0 - w) + controls[k + 1] * w


def _trace(points, centroid, s, rng, params: StylizeParams):
    sign = 1.0 if rng.random() < 0.5 else -1.0
    angle = sign * rng.uniform(0.0, params.rot_max)
    sx, sy = rng.uniform(*params.scale_range, size=2)
    r = params.trans_radius * math.sqrt(rng.random())
    phi = 2.0 * math.pi * rng.random()
    tx, ty = r * math.cos(phi), r * math.sin(phi)
    n_ctrl = int(math.floor(s[-1] / params.noise_wavelength)) + 2
    controls = rng.uniform(0.0, params.local_noise_max, size=(n_ctrl, 2))
    lo, hi = params.width_bounds
    width = min(max(rng.normal(params.width_mean, math.sqrt(params.width_var)), lo), hi)

    a = math.radians(angle)
    c, sn = math.cos(a), math.sin(a)
    lin = np.array([[sx, 0.0], [0.0, sy]]) @ np.array([[c, -sn], [sn, c]])
    out = (points - centroid) @ lin.T + centroid + (tx, ty)
    if params.local_noise_max > 0:
        out = out + local_noise(s, controls, params.noise_wavelength)
    return out, angle, (sx, sy), (tx, ty), controls, width


def stylize_stroke(stroke: Stroke, params: StylizeParams, rng: np.random.Generator, index: int = 0):
    """All traces of one stroke plus the parameters drawn for each."""
    points = stroke.points
    if params.local_noise_max > 0:
        points = densify(points, params.noise_wavelength / 4.0)
    centroid = stroke.points.mean(axis=0)
    s = arc_length(points)
    n_traces = int(rng.integers(1, params.max_traces + 1))
    strokes, records = [], []
    for t in range(n_traces):
        pts, angle, scale, trans, controls, width = _trace(points, centroid, s, rng, params)
        strokes.append(Stroke(pts, width))
        records.append(
            TraceRecord(index, t, float(angle), tuple(map(float, scale)), tuple(map(float, trans)),
                        controls.tolist(), float(width))
        )
    return strokes, records


def stylize_with_record(sketch: Sketch, params: StylizeParams | None = None, seed: int = 0):
    """Stylize and return ``(sketch, records)``; one record per emitted stroke.

    Every input stroke draws from its own stream keyed by ``(seed, index)``.
    """
    params = params or StylizeParams()
    strokes, records = [], []
    for i, stroke in enumerate(sketch.strokes):
        out, rec = stylize_stroke(stroke, params, make_rng(seed, "stroke", i), i)
        strokes.extend(out)
        records.extend(rec)
    return Sketch(tuple(strokes), sketch.width, sketch.height), records


def stylize(sketch: Sketch, params: StylizeParams | None = None, seed: int = 0) -> Sketch:
    return stylize_with_record(sketch, params, seed)[0]


# --------------------------------------------------------------------------
# rasterization

def rasterize(sketch: Sketch) -> np.ndarray:
    """Boolean (H, W) bitmap; a pixel is set iff its center is within width/2 of a stroke."""
    h, w = int(round(sketch.height)), int(round(sketch.width))
    img = np.zeros((h, w), dtype=bool)
    for stroke in sketch.strokes:
        r = stroke.width / 2.0
        for a, b in zip(stroke.points[:-1], stroke.points[1:]):
            x0 = max(int(math.floor(min(a[0], b[0]) - r)), 0)
            x1 = min(int(math.ceil(max(a[0], b[0]) + r)), w)
            y0 = max(int(math.floor(min(a[1], b[1]) - r)), 0)
            y1 = min(int(math.ceil(max(a[1], b[1]) + r)), h)
            if x0 >= x1 or y0 >= y1:
                continue
            cx = np.arange(x0, x1) + 0.5
            cy = np.arange(y0, y1) + 0.5
            px, py = np.meshgrid(cx, cy)
            d = b - a
            dd = float(d @ d)
            if dd > 0:
                t = np.clip(((px - a[0]) * d[0] + (py - a[1]) * d[1]) / dd, 0.0, 1.0)
            else:
                t = np.zeros_like(px)
            dist2 = (px - a[0] - t * d[0]) ** 2 + (py - a[1] - t * d[1]) ** 2
            img[y0:y1, x0:x1] |= dist2 <= r * r
    return img
