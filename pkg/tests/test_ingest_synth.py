import numpy as np
import pytest

from dervalue.calendar import build_calendar
from dervalue.ingest import (
    DataError, ZipGeo, haversine_km, load_irradiance_csv, load_lmp_csv, load_nodes_csv,
    load_traces_csv, load_zips_csv, map_zip_to_node, write_geo_csv, write_irradiance_csv,
    write_loads_csv, write_lmp_csv,
)
from dervalue.synth import (
    SynthConfig, clear_sky_ghi, synth_irradiance, synth_lmp, synth_nodes, synth_population, synth_zips,
)
import datetime as dt

SHORT = build_calendar(dt.date(2012, 1, 1), 366, [])


def _write_loads(path, rows):
    with open(path, "w") as fh:
        fh.write("household_id,zip,hour_index,kwh\n")
        for hid, z, series in rows:
            for h, v in enumerate(series):
                fh.write(f"{hid},{z},{h},{v}\n")


def test_load_filters(tmp_path):
    n = SHORT.n_hours
    ok = np.full(n, 0.5)
    low = np.full(n, 0.05)
    zeros = np.full(n, 0.8)
    zeros[: int(0.6 * n)] = 0
    p = tmp_path / "loads.csv"
    _write_loads(p, [("a", "1", ok), ("b", "1", low), ("c", "2", zeros), ("d", "2", ok * 2)])
    res = load_traces_csv(p, SHORT)
    assert [t.household_id for t in res.traces] == ["a", "d"]
    assert res.excluded == {"b": "low_mean", "c": "zero_readings"}
    assert all(t.kwh.size == 24 * 366 for t in res.traces)


def test_load_errors(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("household_id,zip,hour_index,kwh\na,1,0,x\n")
    with pytest.raises(DataError, match="line 2"):
        load_traces_csv(p, SHORT)
    p.write_text("household_id,zip,hour_index,kwh\na,1,0,1.0\n")
    with pytest.raises(DataError, match="expected 8784"):
        load_traces_csv(p, SHORT)
    p.write_text("household_id,zip,hour_index,kwh\na,1,0,1.0\na,1,0,1.0\n")
    with pytest.raises(DataError, match="duplicate"):
        load_traces_csv(p, SHORT)
    p.write_text("hid,zip,hour,kwh\n")
    with pytest.raises(DataError, match="header"):
        load_traces_csv(p, SHORT)


def test_lmp_negative_clamped_and_converted(tmp_path):
    p = tmp_path / "lmp.csv"
    with open(p, "w") as fh:
        fh.write("node_id,hour_index,usd_per_mwh\n")
        for h in range(SHORT.n_hours):
            fh.write(f"N1,{h},{-5.0 if h == 3 else 40.0}\n")
    lmp = load_lmp_csv(p, SHORT)
    assert lmp["N1"][3] == 0.0 and lmp["N1"][0] == pytest.approx(0.04)


def test_zip_mapping_examples():
    nodes = {"A": ZipGeo("A", 37.0, -122.0), "B": ZipGeo("B", 38.0, -121.0)}
    assert map_zip_to_node({"z": ZipGeo("z", 37.0, -122.0)}, nodes) == {"z": "A"}
    eq = {"B": ZipGeo("B", 37.0, -121.0), "A": ZipGeo("A", 37.0, -123.0)}
    assert map_zip_to_node({"z": ZipGeo("z", 37.0, -122.0)}, eq) == {"z": "A"}
    zips = {k: ZipGeo(k, 36 + i, -120 - i) for i, k in enumerate("xyz")}
    assert set(map_zip_to_node(zips, {"only": ZipGeo("only", 0, 0)}).values()) == {"only"}
    with pytest.raises(DataError):
        map_zip_to_node(zips, {})
    with pytest.raises(ValueError):
        ZipGeo("bad", 91, 0)


def test_haversine_known_distance():
    # SF to LA, about 559 km
    assert haversine_km(37.7749, -122.4194, 34.0522, -118.2437) == pytest.approx(559, abs=2)


def test_round_trip_lossless(tmp_path):
    cfg = SynthConfig(n_households=3, n_zips=2, n_nodes=2, seed=11)
    pop = synth_population(cfg, SHORT)
    nodes = synth_nodes(cfg)
    lmp = synth_lmp(cfg, SHORT, nodes)
    write_loads_csv(tmp_path / "l.csv", pop.traces)
    write_irradiance_csv(tmp_path / "i.csv", pop.irradiance)
    write_lmp_csv(tmp_path / "p.csv", lmp)
    write_geo_csv(tmp_path / "z.csv", pop.zips, "zip")
    write_geo_csv(tmp_path / "n.csv", nodes, "node_id")
    back = load_traces_csv(tmp_path / "l.csv", SHORT)
    assert [t.household_id for t in back.traces] == [t.household_id for t in pop.traces]
    for a, b in zip(back.traces, pop.traces):
        assert np.array_equal(a.kwh, b.kwh) and a.zip == b.zip
    irr = load_irradiance_csv(tmp_path / "i.csv", SHORT)
    assert all(np.array_equal(irr[z], pop.irradiance[z]) for z in pop.irradiance)
    back_lmp = load_lmp_csv(tmp_path / "p.csv", SHORT)
    assert all(np.array_equal(back_lmp[k], np.maximum(v, 0) / 1000) for k, v in lmp.items())
    assert load_zips_csv(tmp_path / "z.csv") == pop.zips
    assert load_nodes_csv(tmp_path / "n.csv") == nodes


def test_synth_deterministic(calendar):
    cfg = SynthConfig(n_households=5, seed=4)
    a, b = synth_population(cfg, calendar), synth_population(cfg, calendar)
    assert all(np.array_equal(x.kwh, y.kwh) for x, y in zip(a.traces, b.traces))
    assert all(np.array_equal(a.irradiance[z], b.irradiance[z]) for z in a.irradiance)
    # a household's trace does not depend on population size
    c = synth_population(SynthConfig(n_households=9, seed=4), calendar)
    assert np.array_equal(a.traces[2].kwh, c.traces[2].kwh)


def test_synth_population_range_and_filters(calendar):
    pop = synth_population(SynthConfig(n_households=1000, seed=0), calendar)
    means = np.array([t.mean_kw for t in pop.traces])
    assert means.min() >= 0.1 and means.max() <= 25
    assert all(t.zero_fraction <= 0.5 for t in pop.traces)
    assert len(set(pop.archetype.values())) >= 3


def test_irradiance_shape(calendar):
    cfg = SynthConfig(n_zips=4, seed=2)
    irr = synth_irradiance(cfg, calendar, synth_zips(cfg))
    summer = calendar.is_summer
    for v in irr.values():
        days = v.reshape(-1, 24)
        assert np.all(v >= 0)
        assert np.all(days[:, 0] == 0)
        assert days[summer].sum(1).mean() >= days[~summer].sum(1).mean()
    assert np.all(clear_sky_ghi(calendar, 37.5).reshape(-1, 24)[:, [0, 1, 2, 23]] == 0)


def test_synth_config_validation():
    assert SynthConfig(n_households=0).validate()
    assert SynthConfig(archetype_weights={"flat": 0.5}).validate()
    assert not SynthConfig().validate()
