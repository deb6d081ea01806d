import csv
import io
import json
import math
import tempfile
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dyadic_weights.dyadic import DyadicInterval, build_weight
from dyadic_weights.reports import (
    Report,
    SchemaError,
    check_scalar_key,
    dumps_report,
    loads_report,
    read_report,
    read_weight,
    summarize,
    weight_from_dict,
    write_report,
    write_summary,
    write_weight,
)

from .strategies import weights


def _report(**scalars):
    return Report("demo", scalars or {"Ap(2)": 4 / 3, "Ainf": 2 / 3**0.5}, {"pass": True}, DyadicInterval(0, 0),
                  {"seed": 3, "depth": 1, "timestamp": None})


def test_report_round_trip(tmp_path):
    r = _report()
    path = tmp_path / "r.json"
    write_report(r, path)
    back = read_report(path)
    assert back == r and back.scalars["Ap(2)"] == 4 / 3  # bit-identical


@settings(max_examples=50, deadline=None)
@given(st.dictionaries(st.sampled_from(["sum", "gap", "Q0", "RHp(3)", "beta", "margin"]),
                       st.floats(allow_nan=False, allow_infinity=False), max_size=6))
def test_round_trip_property(scalars):
    r = Report("p", scalars)
    assert loads_report(dumps_report(r)) == r


def test_json_is_sorted_and_strict():
    d = json.loads(dumps_report(_report(sum=1.0, Ainf=2.0)))
    assert list(d) == sorted(d) and list(d["scalars"]) == ["Ainf", "sum"]
    assert d["argmax"] == [0, 0]


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_nonfinite_rejected(tmp_path, bad):
    path = tmp_path / "r.json"
    with pytest.raises(SchemaError):
        write_report(_report(sum=bad), path)
    assert not path.exists()


def test_vocabulary():
    assert check_scalar_key("Ap(3)") == "Ap(3)"
    assert check_scalar_key("Q0_closed_form") == "Q0_closed_form"
    for bad in ("bogus", "Ap(3", "Ap((3))", "3Ap", ""):
        with pytest.raises(SchemaError):
            check_scalar_key(bad)
    with pytest.raises(SchemaError):
        Report("x", {"bogus": 1.0}).validate()


def test_malformed_reports():
    with pytest.raises(SchemaError):
        loads_report('{"scalars": {}}')
    with pytest.raises(SchemaError):
        Report("x", flags={"pass": 1}).validate()
    with pytest.raises(SchemaError):
        Report("x", argmax=DyadicInterval(1, 5)).validate()
    with pytest.raises(SchemaError):
        Report("x", metadata={"host": "a"}).validate()


@settings(max_examples=30, deadline=None)
@given(weights(max_depth=5))
def test_weight_round_trip_json_and_csv(w):
    with tempfile.TemporaryDirectory() as d:
        for name in ("w.json", "w.csv"):
            p = Path(d) / name
            write_weight(w, p)
            assert read_weight(p) == w


@pytest.mark.parametrize("d", [
    {"leaves": [1.0, -2.0]},
    {"leaves": [1.0, 0.0]},
    {"leaves": [1.0, "nan"]},
    {"leaves": [1.0, 2.0, 3.0]},
    {"depth": 2, "leaves": [1.0, 2.0]},
    {"values": [1.0]},
])
def test_bad_weights(d):
    with pytest.raises(SchemaError):
        weight_from_dict(d)


def test_bad_weight_files(tmp_path):
    p = tmp_path / "w.json"
    p.write_text("[1, 2]")
    with pytest.raises(SchemaError):
        read_weight(p)
    p.write_text("{not json")
    with pytest.raises(SchemaError):
        read_weight(p)


def test_summary_empty_has_header():
    assert summarize([]) == "name\r\n"


def test_summary_union_columns():
    a = Report("a", {"sum": 1.0, "gap": 0.5})
    b = Report("b", {"sum": 0.1, "Q0": 2.0})
    rows = list(csv.reader(io.StringIO(summarize([a, b]))))
    assert rows[0] == ["name", "Q0", "gap", "sum"]
    assert rows[1] == ["a", "", "0.5", "1.0"] and rows[2] == ["b", "2.0", "", "0.1"]
    assert float(rows[2][3]) == 0.1


def test_summary_many(tmp_path):
    reps = [Report(f"r{i:03d}", {"value": i / 7}) for i in range(100)]
    path = tmp_path / "s.csv"
    write_summary(reps, path)
    rows = list(csv.reader(io.StringIO(path.read_bytes().decode())))
    assert len(rows) == 101 and all(float(r[1]) == i / 7 for i, r in enumerate(rows[1:]))
    assert path.read_bytes().count(b"\r\n") == 101


def test_weight_json_fields(tmp_path):
    p = tmp_path / "w.json"
    write_weight(build_weight([1.0, 3.0]), p)
    assert json.loads(p.read_text()) == {"depth": 1, "root_length": 1.0, "leaves": [1.0, 3.0]}
