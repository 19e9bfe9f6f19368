"""Tile grid, three-class rainfall quantization, and class statistics.

The map is partitioned into a fixed 5x5 grid of tiles numbered 1..25
row-major from the northwest corner (tile 1 = northwest, tile 13 =
center, tile 25 = southeast). A tile's class on a given day is the
quantized maximum intensity level inside the tile: levels 0-2 are
light/no rain, 3-5 moderate, 6-15 heavy. The unequal split keeps the
three classes reasonably balanced; an equal 16/3 split would make heavy
rain vanishingly rare.

Labels are computed on cropped full-resolution maps, never on
downscaled images, so every image scale shares one label stream.
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path

import numpy as np

from .ingest import CropRect, IntensityMap, MAX_LEVEL

GRID = 5
N_TILES = GRID * GRID


class RainClass(IntEnum):
    LIGHT = 0
    MODERATE = 1
    HEAVY = 2


@dataclass(frozen=True)
class ClassFrequencies:
    """Proportions of (light, moderate, heavy) days; sums to 1."""

    f_light: float
    f_moderate: float
    f_heavy: float

    def __post_init__(self):
        for f in (self.f_light, self.f_moderate, self.f_heavy):
            if not 0.0 <= f <= 1.0:
                raise ValueError(f"frequency {f} outside [0, 1]")
        if abs(self.f_light + self.f_moderate + self.f_heavy - 1.0) > 1e-9:
            raise ValueError("frequencies must sum to 1")

    def as_array(self) -> np.ndarray:
        return np.array([self.f_light, self.f_moderate, self.f_heavy])


@dataclass(frozen=True)
class MonthRow:
    """One calendar month's class mix; frequencies is None when count = 0."""

    month: int
    count: int
    frequencies: ClassFrequencies | None


def _check_tile(tile: int) -> None:
    if not 1 <= tile <= N_TILES:
        raise ValueError(f"tile index must lie in [1, {N_TILES}], got {tile}")


def _edge_sizes(total: int) -> list[int]:
    # floor(total/5) per band, remainder pixels widen the first bands
    base, rem = divmod(total, GRID)
    return [base + 1] * rem + [base] * (GRID - rem)


def tile_bounds(tile: int, width: int, height: int) -> CropRect:
    """Pixel rectangle of one tile of the 5x5 partition.

    Column widths are floor(width/5) with the leftmost (width mod 5)
    columns one pixel wider; row heights likewise, so the 25 rectangles
    exactly partition the image.
    """
    _check_tile(tile)
    if width < GRID or height < GRID:
        raise ValueError(f"image {width}x{height} too small for a {GRID}x{GRID} grid")
    row, col = divmod(tile - 1, GRID)
    widths = _edge_sizes(width)
    heights = _edge_sizes(height)
    return CropRect(
        x0=sum(widths[:col]),
        y0=sum(heights[:row]),
        cw=widths[col],
        ch=heights[row],
    )


def quantize_level(level: int) -> RainClass:
    """Quantize an intensity level: {0,1,2} light, {3,4,5} moderate, rest heavy."""
    if not 0 <= level <= MAX_LEVEL:
        raise ValueError(f"level must lie in [0, {MAX_LEVEL}], got {level}")
    if level <= 2:
        return RainClass.LIGHT
    if level <= 5:
        return RainClass.MODERATE
    return RainClass.HEAVY


def tile_class(m: IntensityMap, tile: int) -> RainClass:
    """Class of the highest level observed within the tile.

    One heavy pixel anywhere in the tile makes the whole tile heavy.
    """
    rect = tile_bounds(tile, m.width, m.height)
    block = m.levels[rect.y0 : rect.y0 + rect.ch, rect.x0 : rect.x0 + rect.cw]
    return quantize_level(int(block.max()))


def tile_class_series(series: list[IntensityMap], tile: int) -> np.ndarray:
    """Per-day tile classes as an int8 vector aligned with the series."""
    if not series:
        raise ValueError("empty series")
    return np.array([int(tile_class(m, tile)) for m in series], dtype=np.int8)


def class_frequencies(series: list[IntensityMap], tile: int) -> ClassFrequencies:
    """Proportion of days in each rain class for one tile."""
    classes = tile_class_series(series, tile)
    counts = np.bincount(classes, minlength=3).astype(np.float64)
    f = counts / counts.sum()
    return ClassFrequencies(float(f[0]), float(f[1]), float(f[2]))


def monthly_seasonality(series: list[IntensityMap], tile: int) -> list[MonthRow]:
    """Class frequencies per calendar month (across years), 12 rows.

    Months not covered by the series carry count 0 and no frequencies.
    """
    classes = tile_class_series(series, tile)
    months = np.array([m.date.month for m in series])
    rows: list[MonthRow] = []
    for month in range(1, 13):
        sel = classes[months == month]
        if sel.size == 0:
            rows.append(MonthRow(month, 0, None))
            continue
        counts = np.bincount(sel, minlength=3).astype(np.float64)
        f = counts / counts.sum()
        rows.append(
            MonthRow(month, int(sel.size), ClassFrequencies(float(f[0]), float(f[1]), float(f[2])))
        )
    return rows


# ---------------------------------------------------------------------------
# CSV exports


def write_labels_csv(series: list[IntensityMap], tiles: list[int], path: str | Path) -> None:
    """Write per-day tile classes as ``date,tile,class`` rows (class as 0/1/2)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "tile", "class"])
        per_tile = {t: tile_class_series(series, t) for t in tiles}
        for i, m in enumerate(series):
            for t in tiles:
                writer.writerow([m.date.isoformat(), t, int(per_tile[t][i])])


def write_seasonality_csv(rows: list[MonthRow], path: str | Path) -> None:
    """Write ``month,f_light,f_moderate,f_heavy,count``; empty months blank."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["month", "f_light", "f_moderate", "f_heavy", "count"])
        for row in rows:
            if row.frequencies is None:
                writer.writerow([row.month, "", "", "", 0])
            else:
                f = row.frequencies
                writer.writerow([row.month, repr(f.f_light), repr(f.f_moderate), repr(f.f_heavy), row.count])
