import pytest

from topiceval import records


class TestRecordFiles:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "r.jsonl"
        recs = [{"a": 1}, {"a": 2, "b": "x"}]
        records.write_records(path, "demo", recs, {"config_hash": "abc"})
        header, loaded = records.read_records(path, "demo")
        assert header["kind"] == "demo"
        assert header["config_hash"] == "abc"
        assert loaded == recs

    def test_kind_mismatch(self, tmp_path):
        path = tmp_path / "r.jsonl"
        records.write_records(path, "demo", [])
        with pytest.raises(records.RecordFormatError):
            records.read_header(path, "other")

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("")
        with pytest.raises(records.RecordFormatError):
            records.read_header(path)

    def test_byte_identical_for_identical_input(self, tmp_path):
        p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        recs = [{"z": 1, "a": 2}]
        records.write_records(p1, "demo", recs)
        records.write_records(p2, "demo", recs)
        assert p1.read_bytes() == p2.read_bytes()

    def test_append_creates_header_once(self, tmp_path):
        path = tmp_path / "log.jsonl"
        records.append_record(path, "log", {"n": 1})
        records.append_record(path, "log", {"n": 2})
        header, recs = records.read_records(path, "log")
        assert recs == [{"n": 1}, {"n": 2}]

    def test_config_hash_stable_and_sensitive(self):
        a = records.config_hash({"x": 1, "y": "z"})
        b = records.config_hash({"y": "z", "x": 1})
        c = records.config_hash({"x": 2, "y": "z"})
        assert a == b
        assert a != c
