import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cdrincome.ingest import (BankRecord, CallRecord, SchemaError, SmsRecord, parse_bank,
                              parse_calls, parse_sms, write_bank, write_calls, write_sms)


def _file(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_call_line_maps_fields(tmp_path):
    p = _file(tmp_path, "c.csv", "origin,dest,timestamp,duration_s\na1,b2,1500000000,60\n")
    res = parse_calls(p)
    assert res.records == [CallRecord("a1", "b2", 1500000000, 60)]
    assert res.skipped == 0


def test_self_call_is_skipped(tmp_path):
    p = _file(tmp_path, "c.csv", "origin,dest,timestamp,duration_s\na1,a1,1500000000,60\n")
    res = parse_calls(p)
    assert res.records == [] and res.skipped == 1


def test_calls_mixed_valid_and_malformed(tmp_path):
    p = _file(tmp_path, "c.csv",
              "origin,dest,timestamp,duration_s\n"
              "a,b,1,10\n"
              "b,c,2,x\n"
              "c,a,3,0\n"
              "a,c,4,5\n")
    res = parse_calls(p)
    assert len(res) == 3 and res.skipped == 1
    assert [r.dest for r in res] == ["b", "a", "c"]


def test_negative_duration_skipped(tmp_path):
    p = _file(tmp_path, "c.csv", "origin,dest,timestamp,duration_s\na,b,1,-3\n")
    assert parse_calls(p).skipped == 1


def test_missing_file_is_fatal(tmp_path):
    with pytest.raises(FileNotFoundError):
        parse_calls(tmp_path / "nope.csv")


def test_header_mismatch_is_fatal(tmp_path):
    p = _file(tmp_path, "c.csv", "from,to,ts,dur\na,b,1,2\n")
    with pytest.raises(SchemaError):
        parse_calls(p)
    with pytest.raises(SchemaError):
        parse_sms(_file(tmp_path, "empty.csv", ""))


def test_sms_line_and_empty_file(tmp_path):
    p = _file(tmp_path, "s.csv", "origin,dest,timestamp\na1,b2,1500000100\n")
    assert parse_sms(p).records == [SmsRecord("a1", "b2", 1500000100)]
    assert parse_sms(_file(tmp_path, "e.csv", "origin,dest,timestamp\n")).records == []


def test_sms_missing_field(tmp_path):
    p = _file(tmp_path, "s.csv", "origin,dest,timestamp\na,b,1\nb,c\nc,a,3\n")
    res = parse_sms(p)
    assert len(res) == 2 and res.skipped == 1


def test_bank_rules(tmp_path):
    p = _file(tmp_path, "b.csv", "user,month,income\na1,0,2500.50\n")
    assert parse_bank(p).records == [BankRecord("a1", 0, 2500.50)]
    p = _file(tmp_path, "b2.csv", "user,month,income\na1,0,100\na1,0,200\n")
    res = parse_bank(p)
    assert res.records == [BankRecord("a1", 0, 100.0)] and res.skipped == 1
    p = _file(tmp_path, "b3.csv", "user,month,income\na1,1,-5\n")
    res = parse_bank(p)
    assert res.records == [] and res.skipped == 1


ids = st.text(alphabet="abcdefxyz0123456789_", min_size=1, max_size=8)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(ids, ids, st.integers(0, 2**40), st.integers(0, 10**6)), max_size=30))
def test_calls_round_trip(tmp_path_factory, rows):
    recs = [CallRecord(*r) for r in rows if r[0] != r[1]]
    p = tmp_path_factory.mktemp("rt") / "c.csv"
    write_calls(p, recs)
    res = parse_calls(p)
    assert res.records == recs and res.skipped == 0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(ids, ids, st.integers(0, 2**40)), max_size=30))
def test_sms_round_trip(tmp_path_factory, rows):
    recs = [SmsRecord(*r) for r in rows if r[0] != r[1]]
    p = tmp_path_factory.mktemp("rt") / "s.csv"
    write_sms(p, recs)
    assert parse_sms(p).records == recs


@settings(max_examples=50, deadline=None)
@given(st.dictionaries(st.tuples(ids, st.integers(0, 11)),
                       st.floats(0, 1e7, allow_nan=False, allow_infinity=False), max_size=30))
def test_bank_round_trip(tmp_path_factory, rows):
    recs = [BankRecord(u, m, inc) for (u, m), inc in rows.items()]
    p = tmp_path_factory.mktemp("rt") / "b.csv"
    write_bank(p, recs)
    assert parse_bank(p).records == recs


@settings(max_examples=40, deadline=None)
@given(st.lists(st.sampled_from(["a,b,1,2", "a,a,1,2", "a,b,x,2", "a,b,1", "c,d,5,-1", "e,f,9,9", ""]),
                max_size=25))
def test_returned_plus_skipped_equals_lines(tmp_path_factory, lines):
    lines = [ln for ln in lines if ln]  # csv.reader drops blank lines entirely
    p = tmp_path_factory.mktemp("cnt") / "c.csv"
    p.write_text("origin,dest,timestamp,duration_s\n" + "".join(ln + "\n" for ln in lines))
    res = parse_calls(p)
    assert len(res) + res.skipped == len(lines)
