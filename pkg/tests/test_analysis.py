import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relaycell import analysis, rfmodel
from relaycell.analysis import Cdf, TileMap
from relaycell.errors import DegenerateFit, EmptyInput, InvalidArgument, NoBaseline
from relaycell.rfmodel import RadioConfig


def rec(x, y, rsrp=None, lat=None):
    return {"position": [x, y], "rsrp": rsrp, "one_way_latency": lat}


def test_median_examples():
    m = analysis.tile_aggregate([rec(1, 1, -80), rec(2, 1, -90), rec(3, 0.5, -70)])
    assert m.cells == {(0, 0): -80}
    m = analysis.tile_aggregate([rec(1, 1, -80), rec(2, 1, -90)])
    assert m.cells == {(0, 0): -90}
    assert m.sample_counts == {(0, 0): 2}


def test_missing_fields_and_empty():
    m = analysis.tile_aggregate([rec(1, 1, None, 5.0), rec(9, 1, -80, None)], "latency")
    assert m.cells == {(0, 0): 5.0}
    assert analysis.tile_aggregate([]).cells == {}
    with pytest.raises(InvalidArgument):
        analysis.tile_aggregate([], tile_width=0)


def test_tile_geometry():
    m = TileMap(origin=(0, 0))
    assert m.tile_of(3.99, 1.99) == (0, 0)
    assert m.tile_of(4.0, -0.01) == (1, -1)
    assert m.center((1, -1)) == (6.0, -1.0)


@settings(max_examples=1000, deadline=None)
@given(st.lists(st.tuples(st.floats(-20, 20), st.floats(-10, 10), st.floats(-130, -40)),
                max_size=40))
def test_median_against_sort_oracle(cloud):
    samples = [rec(x, y, v) for x, y, v in cloud]
    got = analysis.tile_aggregate(samples)
    buckets = {}
    for x, y, v in cloud:
        buckets.setdefault((math.floor(x / 4), math.floor(y / 2)), []).append(v)
    expected = {k: sorted(v)[(len(v) - 1) // 2] for k, v in buckets.items()}
    assert got.cells == expected
    assert all(n >= 1 for n in got.sample_counts.values())


def _map(cells):
    m = TileMap()
    m.cells = dict(cells)
    m.sample_counts = {k: 1 for k in cells}
    return m


def test_best_server_examples():
    best, prov = analysis.best_server(_map({(0, 0): -95}), _map({(0, 0): -85, (1, 0): -100}))
    assert best.cells == {(0, 0): -85, (1, 0): -100}
    assert prov == {(0, 0): "two_hop", (1, 0): "two_hop"}
    best, prov = analysis.best_server(_map({(0, 0): 10.0}), _map({(0, 0): 20.0}), "latency")
    assert prov == {(0, 0): "single"}
    best, prov = analysis.best_server(_map({(0, 0): -90}), _map({(0, 0): -90}))
    assert prov == {(0, 0): "single"}


def test_best_server_grid_mismatch():
    other = TileMap(tile_width=5.0)
    with pytest.raises(InvalidArgument):
        analysis.best_server(TileMap(), other)


tile_maps = st.dictionaries(st.tuples(st.integers(-5, 5), st.integers(-3, 3)),
                            st.floats(-130, -40), max_size=30)


@given(tile_maps, tile_maps)
def test_best_server_elementwise_oracle(a, b):
    best, prov = analysis.best_server(_map(a), _map(b))
    for k in set(a) | set(b):
        expected = max(v for v in (a.get(k), b.get(k)) if v is not None)
        assert best.cells[k] == expected
        assert prov[k] == ("two_hop" if k not in a or (k in b and b[k] > a[k]) else "single")


@given(tile_maps)
def test_best_server_idempotent(a):
    best, prov = analysis.best_server(_map(a), _map(a))
    assert best.cells == a
    assert set(prov.values()) <= {"single"}


def test_coverage_extension():
    single = _map({(i, 0): -100 for i in range(10)})
    assert analysis.coverage_extension(single, single, -110) == 0
    best = _map({**single.cells, (10, 0): -105, (11, 0): -109, (12, 0): -120})
    assert analysis.coverage_extension(single, best, -110) == 8
    with pytest.raises(NoBaseline):
        analysis.coverage_extension(_map({(0, 0): -120}), best, -110)


def test_cdf_examples():
    c = Cdf([10, 20, 30])
    assert c.probability_below(20.0) == pytest.approx(2 / 3)
    assert c.probability_below(19.999) == pytest.approx(1 / 3)
    assert Cdf([4.2] * 7).percentile(0) == 4.2
    assert all(Cdf([4.2] * 7).percentile(q) == 4.2 for q in (1, 50, 100))
    assert c.percentile(50) == 20 and c.percentile(34) == 20 and c.percentile(33) == 10
    with pytest.raises(EmptyInput):
        Cdf([])
    with pytest.raises(EmptyInput):
        analysis.latency_cdf([rec(0, 0, -80, None)])


@given(st.lists(st.floats(0, 500), min_size=1, max_size=200), st.lists(st.floats(-10, 600),
                                                                        min_size=2))
def test_cdf_monotone_and_bounded(values, xs):
    c = Cdf(values)
    p = c.probability_below(np.sort(xs))
    assert np.all((0 <= p) & (p <= 1))
    assert np.all(np.diff(p) >= 0)
    steps = c.steps()
    assert steps[-1][1] == 1.0
    assert all(b[1] > a[1] for a, b in zip(steps, steps[1:]))


def test_probability_faster():
    a, b = Cdf([1.0, 2.0]), Cdf([3.0, 4.0])
    assert analysis.probability_faster(a, b) == 1.0
    assert analysis.probability_faster(b, a) == 0.0
    u = Cdf(np.arange(100.0))
    assert analysis.probability_faster(u, u, 200_000) == pytest.approx(0.495, abs=0.005)


def test_compliance_examples():
    lab = Cdf(np.full(100, 7.0))
    assert analysis.v2x_compliance(lab, 20.0, 0.95).passed
    assert analysis.v2x_compliance(Cdf([22.55] * 10), 20.0, 0.95).passed is False
    assert analysis.v2x_compliance(Cdf([1e9]), math.inf, 1.0).passed
    with pytest.raises(InvalidArgument):
        analysis.v2x_compliance(lab, 20.0, 0.0)


@given(st.lists(st.floats(0, 100), min_size=1, max_size=100), st.floats(0, 100),
       st.floats(0, 50), st.floats(0.01, 1), st.floats(0, 1))
def test_compliance_monotone(values, limit, dl, r, shrink):
    c = Cdf(values)
    if analysis.v2x_compliance(c, limit, r).passed:
        assert analysis.v2x_compliance(c, limit + dl, r).passed
        assert analysis.v2x_compliance(c, limit, max(r * shrink, 1e-9)).passed


TX = RadioConfig(5.8975e9, 5e6, 40.0, 2.0)
RX = RadioConfig(5.8975e9, 5e6, 0.0, 1.65)


def test_fit_recovers_known_offset():
    d = np.linspace(20, 240, 120)
    r = rfmodel.link_rsrp(TX, RX, d, rfmodel.WET_GROUND) + 6.0
    fit = analysis.fit_two_ray(list(zip(d, r)), rfmodel.WET_GROUND, TX, RX)
    assert fit.offset == pytest.approx(6.0, abs=1e-6)
    assert fit.rms < 1e-9


def test_fit_noise_and_bias():
    rng = np.random.default_rng(11)
    d = rng.uniform(20, 240, 400)
    truth = rfmodel.link_rsrp(TX, RX, d, rfmodel.WET_GROUND) - 3.0
    estimates = []
    for _ in range(200):
        noisy = truth + rng.normal(0, 3.0, d.size)
        fit = analysis.fit_two_ray(list(zip(d, noisy)), rfmodel.WET_GROUND, TX, RX)
        estimates.append(fit.offset)
    estimates = np.array(estimates)
    assert np.all(np.abs(estimates + 3.0) < 4 * 3.0 / math.sqrt(d.size))
    se = estimates.std(ddof=1) / math.sqrt(estimates.size)
    assert abs(estimates.mean() + 3.0) < 2 * se
    assert fit.rms == pytest.approx(3.0, rel=0.15)


def test_fitted_curve_fade_in_dead_zone():
    d = np.linspace(20, 240, 200)
    r = rfmodel.link_rsrp(TX, RX, d, rfmodel.WET_GROUND) + 1.5
    fit = analysis.fit_two_ray(list(zip(d, r)), rfmodel.WET_GROUND, TX, RX)
    grid = np.arange(50, 175, 0.1)
    curve = fit.model(TX, RX, grid, rfmodel.WET_GROUND)
    idx = rfmodel.local_minima(grid, curve)
    assert 110 <= grid[idx[np.argmin(curve[idx])]] <= 160


def test_fit_degenerate():
    with pytest.raises(DegenerateFit):
        analysis.fit_two_ray([(50.0, -90.0), (50.0, -91.0)], rfmodel.WET_GROUND, TX, RX)
    with pytest.raises(DegenerateFit):
        analysis.fit_two_ray([(50.0, -90.0)], rfmodel.WET_GROUND, TX, RX)


def test_writers(tmp_path):
    m = _map({(0, 0): -80.5, (1, 0): -90.0, (0, 1): -85.0})
    analysis.write_tilemap_csv(m, tmp_path / "t.csv", "rsrp")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "i,j,x_center,y_center,rsrp,count"
    assert lines[1] == "0,0,2,1,-80.5,1"
    analysis.write_tilemap_gnuplot(m, tmp_path / "t.dat")
    blocks = (tmp_path / "t.dat").read_text().split("\n\n")
    assert len(blocks) == 2
    analysis.write_cdf_csv(Cdf([1.0, 2.0, 2.0]), tmp_path / "c.csv")
    assert (tmp_path / "c.csv").read_text().splitlines()[1:] == ["1.0,0.3333333333333333",
                                                                  "2.0,1.0"]


def test_public_baseline_mean():
    base = analysis.public_lte_baseline()
    assert base.mean == pytest.approx(37.5, abs=1e-9)
    assert len(base) == 2000
