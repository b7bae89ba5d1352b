"""Drive-test evaluation: tile maps, best server, latency CDFs, fits."""
from __future__ import annotations

import csv
import math
from importlib import resources
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from . import rfmodel
from .errors import DegenerateFit, EmptyInput, InvalidArgument, NoBaseline
from .rfmodel import GroundParameters, RadioConfig

FIELDS = {"rsrp": "rsrp", "latency": "one_way_latency"}
SINGLE = "single"
TWO_HOP = "two_hop"


def lower_median(values: Sequence[float]) -> float:
    ordered = sorted(values)
    return ordered[(len(ordered) - 1) // 2]


@dataclass
class TileMap:
    origin: tuple[float, float] = (0.0, 0.0)
    tile_width: float = 4.0
    tile_height: float = 2.0
    cells: dict = field(default_factory=dict)
    sample_counts: dict = field(default_factory=dict)

    def same_grid(self, other: "TileMap") -> bool:
        return (tuple(self.origin) == tuple(other.origin)
                and self.tile_width == other.tile_width
                and self.tile_height == other.tile_height)

    def tile_of(self, x: float, y: float) -> tuple[int, int]:
        return (math.floor((x - self.origin[0]) / self.tile_width),
                math.floor((y - self.origin[1]) / self.tile_height))

    def center(self, tile: tuple[int, int]) -> tuple[float, float]:
        i, j = tile
        return (self.origin[0] + (i + 0.5) * self.tile_width,
                self.origin[1] + (j + 0.5) * self.tile_height)

    def rows(self):
        for tile in sorted(self.cells):
            x, y = self.center(tile)
            yield tile, x, y, self.cells[tile], self.sample_counts.get(tile, 0)


def _field_value(sample, name):
    if isinstance(sample, Mapping):
        return sample.get(name)
    return getattr(sample, name)


def _position(sample):
    return tuple(_field_value(sample, "position"))


def tile_aggregate(samples: Iterable, field: str = "rsrp", tile_width: float = 4.0,
                   tile_height: float = 2.0, origin: tuple[float, float] = (0.0, 0.0)) -> TileMap:
    """Per-tile lower median of ``field`` ('rsrp' or 'latency').

    Samples lacking the field are skipped; tiles without samples are absent.
    """
    if tile_width <= 0 or tile_height <= 0:
        raise InvalidArgument("tile dimensions must be > 0")
    if field not in FIELDS:
        raise InvalidArgument(f"unknown field {field!r}")
    tmap = TileMap(tuple(origin), tile_width, tile_height)
    buckets: dict = {}
    for s in samples:
        value = _field_value(s, FIELDS[field])
        if value is None:
            continue
        buckets.setdefault(tmap.tile_of(*_position(s)), []).append(value)
    for tile, values in buckets.items():
        tmap.cells[tile] = lower_median(values)
        tmap.sample_counts[tile] = len(values)
    return tmap


def best_server(map_single: TileMap, map_two_hop: TileMap, field: str = "rsrp"):
    """Per-tile better of two maps plus which source won each tile.

    Higher RSRP or lower latency wins; ties go to the single-hop map.
    """
    if not map_single.same_grid(map_two_hop):
        raise InvalidArgument("maps are on different tile grids")
    if field not in FIELDS:
        raise InvalidArgument(f"unknown field {field!r}")
    better = (lambda a, b: b > a) if field == "rsrp" else (lambda a, b: b < a)
    best = TileMap(map_single.origin, map_single.tile_width, map_single.tile_height)
    provenance = {}
    for tile in sorted(set(map_single.cells) | set(map_two_hop.cells)):
        a = map_single.cells.get(tile)
        b = map_two_hop.cells.get(tile)
        if b is None or (a is not None and not better(a, b)):
            best.cells[tile], provenance[tile] = a, SINGLE
            best.sample_counts[tile] = map_single.sample_counts.get(tile, 0)
        else:
            best.cells[tile], provenance[tile] = b, TWO_HOP
            best.sample_counts[tile] = map_two_hop.sample_counts.get(tile, 0)
    return best, provenance


def farthest_covered(tmap: TileMap, threshold: float, road_axis: str = "x") -> Optional[float]:
    axis = {"x": 0, "y": 1}[road_axis]
    coords = [tmap.center(t)[axis] for t, v in tmap.cells.items() if v >= threshold]
    return max(coords) if coords else None


def coverage_extension(map_single: TileMap, map_best: TileMap, attach_threshold: float,
                       road_axis: str = "x") -> float:
    """How much farther along the road the best-server map stays covered."""
    if not map_single.same_grid(map_best):
        raise InvalidArgument("maps are on different tile grids")
    base = farthest_covered(map_single, attach_threshold, road_axis)
    if base is None:
        raise NoBaseline("single-hop map has no tile above the threshold")
    return farthest_covered(map_best, attach_threshold, road_axis) - base


class Cdf:
    """Right-continuous empirical CDF of latency samples (ms)."""

    def __init__(self, values: Iterable[float]):
        self.values = np.sort(np.asarray(list(values), dtype=float))
        if self.values.size == 0:
            raise EmptyInput("no latency samples")

    def __len__(self):
        return self.values.size

    def __call__(self, x):
        return self.probability_below(x)

    def probability_below(self, x):
        """P[X <= x]."""
        p = np.searchsorted(self.values, x, side="right") / self.values.size
        return float(p) if np.ndim(p) == 0 else p

    def percentile(self, q: float) -> float:
        """Nearest-rank percentile, ``q`` in percent."""
        if not 0 <= q <= 100:
            raise InvalidArgument("percentile must lie in [0, 100]")
        rank = max(1, math.ceil(q / 100.0 * self.values.size))
        return float(self.values[rank - 1])

    @property
    def mean(self) -> float:
        return float(self.values.mean())

    def steps(self):
        """(value, cumulative probability) pairs at each distinct value."""
        uniq = np.unique(self.values)
        probs = np.searchsorted(self.values, uniq, side="right") / self.values.size
        return list(zip(uniq.tolist(), probs.tolist()))


def latency_cdf(samples: Iterable) -> Cdf:
    """CDF of one-way latencies; accepts records or plain numbers."""
    values = []
    for s in samples:
        v = s if isinstance(s, (int, float, np.floating)) else _field_value(s, "one_way_latency")
        if v is not None:
            values.append(float(v))
    return Cdf(values)


def probability_faster(a: Cdf, b: Cdf, n_pairs: int = 100_000,
                       rng: Optional[np.random.Generator] = None) -> float:
    """Monte Carlo estimate of P[A < B] for independent draws from both CDFs."""
    rng = rng or np.random.default_rng(0)
    x = rng.choice(a.values, n_pairs)
    y = rng.choice(b.values, n_pairs)
    return float(np.mean(x < y))


@dataclass(frozen=True)
class Compliance:
    passed: bool
    achieved: float
    limit: float
    required: float


def v2x_compliance(cdf: Cdf, limit: float, required_reliability: float) -> Compliance:
    if not 0 < required_reliability <= 1:
        raise InvalidArgument("required reliability must lie in (0, 1]")
    achieved = cdf.probability_below(limit)
    return Compliance(achieved >= required_reliability, achieved, limit, required_reliability)


@dataclass(frozen=True)
class TwoRayFit:
    offset: float  # dB added to the model curve
    rms: float  # dB

    def model(self, tx, rx, distance, ground, excess_loss_db_per_m=0.0):
        return rfmodel.link_rsrp(tx, rx, distance, ground, excess_loss_db_per_m) + self.offset


def fit_two_ray(samples: Sequence[tuple[float, float]], ground: GroundParameters,
                tx: RadioConfig, rx: RadioConfig,
                excess_loss_db_per_m: float = 0.0) -> TwoRayFit:
    """Least-squares dB offset between (distance, RSRP) samples and the model.

    The MSE is quadratic in the offset, so the minimiser is the mean residual.
    """
    data = np.asarray(samples, dtype=float).reshape(-1, 2)
    if data.shape[0] < 2 or np.unique(data[:, 0]).size < 2:
        raise DegenerateFit("need samples at two or more distinct distances")
    model = rfmodel.link_rsrp(tx, rx, np.maximum(data[:, 0], rfmodel.MIN_DISTANCE),
                              ground, excess_loss_db_per_m)
    resid = data[:, 1] - model
    offset = float(resid.mean())
    return TwoRayFit(offset, float(np.sqrt(np.mean((resid - offset) ** 2))))


def distance_samples(samples: Iterable, node_position: tuple[float, float]):
    """(distance to node, RSRP) pairs from records carrying an RSRP."""
    out = []
    for s in samples:
        r = _field_value(s, "rsrp")
        if r is None:
            continue
        x, y = _position(s)
        out.append((math.hypot(x - node_position[0], y - node_position[1]), r))
    return out


# -- table output -----------------------------------------------------------

def write_tilemap_csv(tmap: TileMap, path, value_name: str = "value", provenance=None):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        header = ["i", "j", "x_center", "y_center", value_name, "count"]
        if provenance is not None:
            header.append("source")
        w.writerow(header)
        for (i, j), x, y, v, n in tmap.rows():
            row = [i, j, f"{x:g}", f"{y:g}", repr(float(v)), n]
            if provenance is not None:
                row.append(provenance[(i, j)])
            w.writerow(row)


def write_provenance_csv(provenance: dict, tmap: TileMap, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "j", "x_center", "y_center", "source"])
        for tile in sorted(provenance):
            x, y = tmap.center(tile)
            w.writerow([tile[0], tile[1], f"{x:g}", f"{y:g}", provenance[tile]])


def write_tilemap_gnuplot(tmap: TileMap, path):
    """Whitespace table, one blank line between x rows (``splot`` friendly)."""
    with open(path, "w") as fh:
        fh.write("# x_center y_center value count\n")
        last_i = None
        for (i, _), x, y, v, n in tmap.rows():
            if last_i is not None and i != last_i:
                fh.write("\n")
            fh.write(f"{x:g} {y:g} {float(v)!r} {n}\n")
            last_i = i


def write_cdf_csv(cdf: Cdf, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["latency_ms", "cumulative_probability"])
        for v, p in cdf.steps():
            w.writerow([repr(v), repr(p)])


def write_cdf_gnuplot(cdf: Cdf, path):
    with open(path, "w") as fh:
        fh.write("# latency_ms cumulative_probability\n")
        for v, p in cdf.steps():
            fh.write(f"{v!r} {p!r}\n")


def read_latency_csv(path) -> Cdf:
    """CDF from a one-column CSV of latencies with a ``latency_ms`` header."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["latency_ms"]:
            raise InvalidArgument(f"{path}: expected a single 'latency_ms' column")
        return Cdf(float(row[0]) for row in reader if row)


def public_lte_baseline() -> Cdf:
    """Bundled public-LTE one-way latency sample (synthetic, mean 37.5 ms)."""
    return read_latency_csv(resources.files("relaycell") / "data" / "public_lte_latency.csv")
