"""Daily precipitation intensity maps: loading, preprocessing, synthesis.

A raw observation is a dated grid of rainfall intensity levels 0..15
(a 16-step dimensionless index, 0 = no rain). Maps are cropped at full
resolution, converted to grayscale in [0, 1], and downscaled by area
averaging. The synthetic generator stands in for a real radar archive:
drifting Gaussian rain cells with per-day stochastic wander and a
sinusoidal seasonal cycle in peak intensity.

File contracts:
  * image file: binary 8-bit single-channel PGM (P5), pixel = level;
  * manifest:   CSV with header ``date,path``, ISO dates, one row per
                day, paths resolved relative to the manifest directory.

All operations are pure functions on effectively immutable values and
are safe to call concurrently.
"""

from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

MAX_LEVEL = 15

# Synthetic series start at a fixed epoch so a (seed, days) pair fully
# determines every date in the output.
SYNTH_EPOCH = dt.date(2012, 1, 1)


@dataclass(frozen=True, eq=False)
class IntensityMap:
    """Dated 2-D grid of rainfall intensity levels, row-major, in [0, 15]."""

    date: dt.date
    levels: np.ndarray  # (height, width) uint8

    def __post_init__(self):
        lv = np.asarray(self.levels)
        if lv.ndim != 2:
            raise ValueError(f"levels must be a 2-D grid, got shape {lv.shape}")
        if lv.size == 0:
            raise ValueError("levels must be non-empty")
        if lv.min() < 0 or lv.max() > MAX_LEVEL:
            raise ValueError("intensity levels must lie in [0, 15]")
        object.__setattr__(self, "levels", lv.astype(np.uint8))

    @property
    def width(self) -> int:
        return self.levels.shape[1]

    @property
    def height(self) -> int:
        return self.levels.shape[0]


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Dated 2-D grid of normalized pixel values in [0, 1], row-major."""

    date: dt.date
    pixels: np.ndarray  # (height, width) float64

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim != 2:
            raise ValueError(f"pixels must be a 2-D grid, got shape {px.shape}")
        if px.size == 0:
            raise ValueError("pixels must be non-empty")
        if px.min() < 0.0 or px.max() > 1.0:
            raise ValueError("pixel values must lie in [0.0, 1.0]")
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class CropRect:
    """Axis-aligned crop window: offsets (x0, y0), extents (cw, ch)."""

    x0: int
    y0: int
    cw: int
    ch: int

    def check_within(self, width: int, height: int) -> None:
        if self.cw <= 0 or self.ch <= 0:
            raise ValueError(f"crop extents must be positive, got {self.cw}x{self.ch}")
        if self.x0 < 0 or self.y0 < 0:
            raise ValueError(f"crop offsets must be non-negative, got ({self.x0},{self.y0})")
        if self.x0 + self.cw > width or self.y0 + self.ch > height:
            raise ValueError(
                f"crop rect {self} exceeds source dimensions {width}x{height}"
            )


@dataclass(frozen=True)
class SynthParams:
    """Generator settings for a synthetic daily intensity-map series.

    ``vel_x``/``vel_y`` are the advection velocity in pixels/day (positive
    x is eastward drift); ``seasonal_amplitude`` in [0, 1) modulates peak
    cell intensity over the calendar year.
    """

    seed: int
    days: int
    width: int
    height: int
    blob_count: int = 4
    blob_radius: float = 12.0
    vel_x: float = 5.0
    vel_y: float = 0.0
    seasonal_amplitude: float = 0.5

    def validate(self) -> None:
        if self.days < 1:
            raise ValueError("days must be >= 1")
        if self.width < 5 or self.height < 5:
            raise ValueError("width and height must be >= 5")
        if self.blob_count < 0:
            raise ValueError("blob_count must be >= 0")
        if self.blob_radius <= 0:
            raise ValueError("blob_radius must be positive")
        if not 0.0 <= self.seasonal_amplitude < 1.0:
            raise ValueError("seasonal_amplitude must lie in [0, 1)")


# ---------------------------------------------------------------------------
# PGM + manifest I/O


def read_pgm(path: str | Path) -> np.ndarray:
    """Read a binary (P5) PGM file into a (height, width) uint8 grid."""
    data = Path(path).read_bytes()
    pos = 0

    def next_token() -> bytes:
        nonlocal pos
        while pos < len(data):
            if data[pos : pos + 1].isspace():
                pos += 1
            elif data[pos : pos + 1] == b"#":  # comment runs to end of line
                while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                    pos += 1
            else:
                break
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError(f"{path}: truncated PGM header")
        return data[start:pos]

    if next_token() != b"P5":
        raise ValueError(f"{path}: not a binary PGM (P5) file")
    width = int(next_token())
    height = int(next_token())
    maxval = int(next_token())
    if width <= 0 or height <= 0:
        raise ValueError(f"{path}: bad PGM dimensions {width}x{height}")
    if not 0 < maxval <= 255:
        raise ValueError(f"{path}: unsupported PGM maxval {maxval}")
    pos += 1  # single whitespace between header and raster
    raster = data[pos : pos + width * height]
    if len(raster) != width * height:
        raise ValueError(f"{path}: truncated PGM raster")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width)


def write_pgm(path: str | Path, levels: np.ndarray) -> None:
    """Write a (height, width) uint8 grid of levels 0..15 as binary PGM."""
    lv = np.asarray(levels)
    if lv.ndim != 2:
        raise ValueError("levels must be 2-D")
    if lv.min() < 0 or lv.max() > MAX_LEVEL:
        raise ValueError("levels must lie in [0, 15]")
    h, w = lv.shape
    header = f"P5\n{w} {h}\n{MAX_LEVEL}\n".encode("ascii")
    Path(path).write_bytes(header + lv.astype(np.uint8).tobytes())


def load_series(manifest_path: str | Path) -> list[IntensityMap]:
    """Load the daily series referenced by a ``date,path`` manifest CSV.

    Returns maps sorted by date ascending, one per manifest row. Raises on
    a missing image file, a duplicate date, a pixel value above 15, or
    inconsistent dimensions across the series.
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise FileNotFoundError(f"manifest not found: {manifest_path}")
    base = manifest_path.parent

    rows: list[tuple[dt.date, Path]] = []
    with open(manifest_path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["date", "path"]:
            raise ValueError(f"{manifest_path}: manifest header must be 'date,path'")
        for rec in reader:
            date = dt.date.fromisoformat(rec["date"].strip())
            p = Path(rec["path"].strip())
            rows.append((date, p if p.is_absolute() else base / p))

    seen: set[dt.date] = set()
    maps: list[IntensityMap] = []
    for date, p in rows:
        if date in seen:
            raise ValueError(f"duplicate date in manifest: {date}")
        seen.add(date)
        if not p.exists():
            raise FileNotFoundError(f"image file not found: {p}")
        levels = read_pgm(p)
        if levels.max() > MAX_LEVEL:
            raise ValueError(f"{p}: pixel value above {MAX_LEVEL}")
        maps.append(IntensityMap(date, levels))

    maps.sort(key=lambda m: m.date)
    if maps:
        w, h = maps[0].width, maps[0].height
        for m in maps:
            if (m.width, m.height) != (w, h):
                raise ValueError(
                    f"dimension mismatch across series: {m.width}x{m.height} vs {w}x{h}"
                )
    return maps


def write_series(maps: list[IntensityMap], out_dir: str | Path) -> Path:
    """Write a series as PGM files plus a manifest CSV; returns manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = out_dir / "manifest.csv"
    with open(manifest, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "path"])
        for m in maps:
            name = f"rain_{m.date:%Y%m%d}.pgm"
            write_pgm(out_dir / name, m.levels)
            writer.writerow([m.date.isoformat(), name])
    return manifest


# ---------------------------------------------------------------------------
# Preprocessing


def crop(m: IntensityMap, rect: CropRect) -> IntensityMap:
    """Crop a map to ``rect``; output pixel (i, j) = input (x0+i, y0+j)."""
    rect.check_within(m.width, m.height)
    block = m.levels[rect.y0 : rect.y0 + rect.ch, rect.x0 : rect.x0 + rect.cw]
    return IntensityMap(m.date, block.copy())


def to_gray(m: IntensityMap) -> GrayImage:
    """Map levels linearly onto [0, 1]: pixel = level / 15."""
    return GrayImage(m.date, m.levels.astype(np.float64) / MAX_LEVEL)


@lru_cache(maxsize=64)
def _overlap_weights(src: int, dst: int) -> np.ndarray:
    """Row-stochastic (dst, src) matrix of cell-overlap fractions.

    Row j holds the fraction of each source cell covered by destination
    cell j under the uniform mapping of [0, src) onto [0, dst).
    """
    w = np.zeros((dst, src))
    step = src / dst
    for j in range(dst):
        lo = j * step
        hi = (j + 1) * step
        c0 = int(math.floor(lo))
        c1 = min(int(math.ceil(hi)), src)
        for c in range(c0, c1):
            w[j, c] = min(hi, c + 1) - max(lo, c)
    return w / step


def downscale(img: GrayImage, target_w: int, target_h: int) -> GrayImage:
    """Area-average (box filter) resample to exactly target_w x target_h.

    Each output pixel is the area-weighted mean of the source pixels its
    cell covers, so downscaling a constant image is exact and the global
    mean is preserved whenever the targets divide the source dimensions.
    """
    if not (1 <= target_w <= img.width and 1 <= target_h <= img.height):
        raise ValueError(
            f"target {target_w}x{target_h} must be within source {img.width}x{img.height}"
        )
    wh = _overlap_weights(img.height, target_h)
    ww = _overlap_weights(img.width, target_w)
    out = wh @ img.pixels @ ww.T
    np.clip(out, 0.0, 1.0, out=out)  # guard float round-off at the endpoints
    return GrayImage(img.date, out)


# ---------------------------------------------------------------------------
# Synthetic archive


def generate_synthetic(params: SynthParams) -> list[IntensityMap]:
    """Generate a deterministic synthetic daily series.

    Rain cells are Gaussian blobs on a toroidal grid. Per day each cell
    advects by (vel_x, vel_y), wanders by a small random walk, and its
    amplitude drifts; the whole field is scaled by a sinusoidal factor of
    the day-of-year so monthly statistics carry a seasonal signal. Equal
    params always produce a bit-identical series.
    """
    params.validate()
    rng = np.random.default_rng(params.seed)
    W, H, B = params.width, params.height, params.blob_count
    r = params.blob_radius

    xs = rng.uniform(0.0, W, B)
    ys = rng.uniform(0.0, H, B)
    amps = rng.uniform(0.55, 1.0, B)

    yy, xx = np.mgrid[0:H, 0:W].astype(np.float64)
    wander = r / 8.0

    out: list[IntensityMap] = []
    for d in range(params.days):
        date = SYNTH_EPOCH + dt.timedelta(days=d)
        doy = date.timetuple().tm_yday
        season = 1.0 + params.seasonal_amplitude * math.sin(2.0 * math.pi * doy / 365.25)

        field = np.zeros((H, W))
        for b in range(B):
            dx = (xx - xs[b] + W / 2.0) % W - W / 2.0
            dy = (yy - ys[b] + H / 2.0) % H - H / 2.0
            field += amps[b] * np.exp(-(dx * dx + dy * dy) / (2.0 * r * r))

        levels = np.clip(np.floor(16.0 * season * field), 0, MAX_LEVEL).astype(np.uint8)
        out.append(IntensityMap(date, levels))

        if B:
            xs = (xs + params.vel_x + rng.normal(0.0, wander, B)) % W
            ys = (ys + params.vel_y + rng.normal(0.0, wander, B)) % H
            amps = np.clip(amps + rng.normal(0.0, 0.04, B), 0.35, 1.0)
    return out
