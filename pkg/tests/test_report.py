import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pqntoda.report import SCHEMA, CheckRecord, CheckReport

floats = st.floats(allow_nan=False, allow_infinity=False, width=64)


def _report(records):
    return CheckReport("verify", "a1-n3", 7, 10, records, {"kmax": 6})


@given(st.lists(st.tuples(st.text(min_size=1, max_size=8), floats, floats, st.booleans(), st.booleans()),
                max_size=6))
def test_json_round_trip_is_lossless(rows):
    recs = [CheckRecord(n, "anchor", r, t, negative=neg, informational=inf) for n, r, t, neg, inf in rows]
    rep = _report(recs)
    back = CheckReport.from_json(rep.to_json())
    assert back == rep
    assert back.to_json() == rep.to_json()


def test_verdict_semantics():
    ok = CheckRecord("a", "x", 1e-12, 1e-10)
    bad = CheckRecord("b", "x", 1e-9, 1e-10)
    nan = CheckRecord("c", "x", math.nan, 1e-10)
    neg_ok = CheckRecord("d", "x", 0.5, 0.1, negative=True)
    neg_bad = CheckRecord("e", "x", 0.01, 0.1, negative=True)
    info = CheckRecord("f", "x", 1.0, 0.0, informational=True)
    assert ok.passed and not bad.passed and not nan.passed
    assert neg_ok.passed and not neg_bad.passed
    assert info.status == "known-fail" and bad.status == "FAIL" and ok.status == "pass"
    assert _report([ok, neg_ok, info]).passed
    rep = _report([ok, bad, info, nan])
    assert not rep.passed
    assert [r.name for r in rep.failures] == ["b", "c"]
    assert "FAILED: b, c" in rep.table()
    assert "ALL PASS" in _report([ok]).table()


def test_schema_is_checked():
    d = json.loads(_report([]).to_json())
    assert d["schema"] == SCHEMA and d["passed"] is True
    d["schema"] = SCHEMA + 1
    with pytest.raises(ValueError, match="schema"):
        CheckReport.from_dict(d)


def test_environment_stamp():
    env = _report([]).environment
    assert set(env) == {"version", "python", "numpy", "timestamp"}
