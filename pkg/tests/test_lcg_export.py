import json
import math

import numpy as np
import pytest

from heatctl.export import fmt, matrix_csv, trace_csv, vector_csv, write_csv, write_json
from heatctl.lcg import LCG, random_band_limited, random_coefficients


class TestLCG:
    def test_first_states_from_zero(self):
        g = LCG(0)
        assert g.next_u64() == 1442695040888963407
        assert g.next_u64() == 1876011003808476466
        assert g.next_u64() == 11166244414315200793

    def test_independent_recurrence(self):
        a, c, s = 6364136223846793005, 1442695040888963407, 42
        out = []
        for _ in range(5):
            s = (a * s + c) % 2**64
            out.append((s >> 11) / 2**53)
        assert LCG(42).uniform(5).tolist() == out

    def test_frozen_uniform(self):
        g = LCG(42)
        assert g.uniform() == 0.5682303266439076
        assert g.uniform() == 0.2254634289477513

    def test_range(self):
        u = LCG(3).uniform(2000)
        assert u.min() >= 0.0 and u.max() < 1.0
        assert abs(u.mean() - 0.5) < 0.03

    def test_symmetric_coefficients(self):
        assert random_coefficients(3, 7).tolist() == [-0.013575466321541052, 0.9113190768105721, 0.8131516439852262]

    def test_seed_wraps(self):
        assert LCG(-1).state == 2**64 - 1

    def test_band_limited(self, interval):
        f = random_band_limited(interval, 5, 11)
        c = f.coeffs()
        assert np.array_equal(c[:5], random_coefficients(5, 11))
        assert np.all(c[5:] == 0.0)


class TestFormat:
    @pytest.mark.parametrize("v", [0.1, 1 / 3, math.pi, -2.5e-300, 1e22])
    def test_roundtrip(self, v):
        assert float(fmt(v)) == v

    def test_seventeen_digits(self):
        assert fmt(0.1) == "0.10000000000000001"

    def test_special(self):
        assert (fmt(float("inf")), fmt(-float("inf")), fmt(float("nan"))) == ("inf", "-inf", "nan")


class TestWriters:
    def test_csv_bytes(self, tmp_path):
        p = write_csv(tmp_path / "a.csv", ["k", "v"], [("1", 0.5), ("2", 1 / 3)])
        assert p.read_bytes() == b"k,v\n1,0.5\n2,0.33333333333333331\n"

    def test_vector_and_trace(self, tmp_path):
        assert vector_csv(tmp_path / "v.csv", "s", [2.0]).read_text() == "index,s\n1,2\n"
        assert trace_csv(tmp_path / "t.csv", [1.0, 0.5]).read_text() == "K,error\n0,1\n1,0.5\n"

    def test_labelled_matrix(self, tmp_path):
        text = matrix_csv(tmp_path / "m.csv", [[1.0, 2.0]], rows=[0.5], cols=[0.1, 0.2], corner="t\\x").read_text()
        assert text.splitlines()[0] == "t\\x,0.10000000000000001,0.20000000000000001"
        assert text.splitlines()[1] == "0.5,1,2"

    def test_json_sorted_and_special(self, tmp_path):
        p = write_json(tmp_path / "s.json", {"b": np.float64(np.inf), "a": np.arange(2), "c": np.bool_(True)})
        raw = p.read_bytes()
        assert b"\r" not in raw
        data = json.loads(raw)
        assert list(data) == ["a", "b", "c"]
        assert data == {"a": [0, 1], "b": "inf", "c": True}
