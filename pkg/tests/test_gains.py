import math

import numpy as np
import pytest

from pvb.gains import (
    DEFAULT_EPSILON,
    GainFileError,
    GainPair,
    GainSeries,
    GeomGain,
    load_gain_series,
    save_gain_series,
    shifted_geomean,
)

from oracles import shifted_geomean_mp


def test_symmetric_pair_is_exact():
    # sqrt((4+eps)^2) - eps == 4 up to the stated 1e-9
    g = shifted_geomean(GainPair(4.0, 4.0), 1e-6)
    assert abs(g.value - 4.0) <= 1e-9


def test_zero_pair_is_exactly_zero():
    for eps in (1e-2, 1e-6, 1e-9, 0.5):
        assert shifted_geomean(GainPair(0.0, 0.0), eps).value == 0.0


def test_one_sided_pair_matches_extended_precision():
    # frozen from the 60-digit oracle: sqrt(1e-6 * 9.000001) - 1e-6
    expected = 0.002999000166666662
    assert shifted_geomean_mp(0.0, 9.0, 1e-6) == pytest.approx(expected, abs=1e-18)
    g = shifted_geomean(GainPair(0.0, 9.0), 1e-6)
    assert g.value == pytest.approx(expected, rel=1e-12)


def test_symmetric_pairs_exact_to_4_ulp():
    rng = np.random.default_rng(7)
    for g in rng.uniform(1e-9, 1e6, size=500):
        got = shifted_geomean(GainPair(g, g), DEFAULT_EPSILON).value
        assert abs(got - g) <= 4 * math.ulp(g)


def test_epsilon_limit_matches_plain_geomean():
    rng = np.random.default_rng(11)
    pairs = rng.uniform(0.01, 100.0, size=(200, 2))
    for eps in (1e-2, 1e-4, 1e-6):
        for d, u in pairs:
            got = shifted_geomean(GainPair(d, u), eps).value
            assert got == pytest.approx(shifted_geomean_mp(d, u, eps), rel=1e-12)
    # eps -> 0: the shifted mean approaches sqrt(down*up) from below
    for d, u in pairs[:30]:
        plain = math.sqrt(d * u)
        errs = [abs(shifted_geomean(GainPair(d, u), eps).value - plain)
                for eps in (1e-2, 1e-4, 1e-6)]
        assert errs[0] >= errs[1] >= errs[2]
        assert errs[2] <= 1e-5


def test_monotone_and_symmetric():
    rng = np.random.default_rng(3)
    for _ in range(200):
        d, u, bump = rng.uniform(0.0, 50.0, size=3)
        base = shifted_geomean(GainPair(d, u)).value
        assert shifted_geomean(GainPair(u, d)).value == base
        assert shifted_geomean(GainPair(d + bump, u)).value >= base
        assert shifted_geomean(GainPair(d, u + bump)).value >= base


def test_gain_pair_rejects_bad_values():
    with pytest.raises(ValueError):
        GainPair(-1.0, 2.0)
    with pytest.raises(ValueError):
        GainPair(1.0, float("nan"))
    with pytest.raises(ValueError):
        GainPair(float("inf"), 1.0)
    with pytest.raises(ValueError):
        shifted_geomean(GainPair(1.0, 1.0), 0.0)


def test_zero_classification():
    assert GeomGain(0.0).is_zero
    assert GeomGain(9.9e-10).is_zero
    assert not GeomGain(1.1e-9).is_zero


class TestGainSeries:
    def test_zero_count(self):
        s = GainSeries("n0", (("x1", GainPair(1.0, 4.0)), ("x2", GainPair(0.0, 0.0))))
        assert len(s) == 2
        assert s.zero_count == 1

    def test_duplicate_variable_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            GainSeries("n0", (("x1", GainPair(1, 1)), ("x1", GainPair(2, 2))))


class TestGainFile:
    HEADER = "node_id,variable_id,downgain,upgain\n"

    def test_basic_load(self, tmp_path):
        p = tmp_path / "g.csv"
        p.write_text(self.HEADER + "n0,x1,1.0,4.0\nn0,x2,0,0\n")
        series = load_gain_series(str(p))
        assert len(series) == 1
        assert series[0].node_id == "n0"
        assert len(series[0]) == 2
        assert series[0].zero_count == 1

    def test_multiple_nodes_preserve_order(self, tmp_path):
        p = tmp_path / "g.csv"
        p.write_text(self.HEADER + "b,x1,1,1\na,x1,2,2\nb,x2,3,3\n")
        series = load_gain_series(str(p))
        assert [s.node_id for s in series] == ["b", "a"]
        assert [v for v, _ in series[0].entries] == ["x1", "x2"]

    def test_empty_file(self, tmp_path):
        p = tmp_path / "g.csv"
        p.write_text("")
        assert load_gain_series(str(p)) == []
        p.write_text(self.HEADER)
        assert load_gain_series(str(p)) == []

    def test_negative_gain_names_line(self, tmp_path):
        p = tmp_path / "g.csv"
        p.write_text(self.HEADER + "n0,x1,1,2\nn0,x2,-1,2\n")
        with pytest.raises(GainFileError, match=":3:"):
            load_gain_series(str(p))

    def test_duplicate_key_names_line(self, tmp_path):
        p = tmp_path / "g.csv"
        p.write_text(self.HEADER + "n0,x1,1,2\nn0,x1,3,4\n")
        with pytest.raises(GainFileError, match=":3:"):
            load_gain_series(str(p))

    def test_malformed_row(self, tmp_path):
        p = tmp_path / "g.csv"
        p.write_text(self.HEADER + "n0,x1,oops,2\n")
        with pytest.raises(GainFileError, match=":2:"):
            load_gain_series(str(p))
        p.write_text(self.HEADER + "n0,x1,1\n")
        with pytest.raises(GainFileError, match="4 fields"):
            load_gain_series(str(p))

    def test_bad_header(self, tmp_path):
        p = tmp_path / "g.csv"
        p.write_text("node,var,down,up\nn0,x1,1,2\n")
        with pytest.raises(GainFileError, match=":1:"):
            load_gain_series(str(p))

    def test_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(19)
        entries = tuple(
            (f"x{i}", GainPair(float(d), float(u)))
            for i, (d, u) in enumerate(rng.uniform(0, 1e3, size=(50, 2)))
        )
        original = [GainSeries("n0", entries)]
        p = tmp_path / "g.csv"
        save_gain_series(str(p), original)
        loaded = load_gain_series(str(p))
        assert len(loaded[0]) == 50
        for (v0, p0), (v1, p1) in zip(original[0].entries, loaded[0].entries):
            assert v0 == v1
            assert (p0.down, p0.up) == (p1.down, p1.up)
