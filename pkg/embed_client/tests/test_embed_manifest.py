"""Manifest reading: text extraction, line numbering, tolerance rules."""

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import record, write_lines, write_manifest
from embed_client.errors import IoFailure, ManifestError
from embed_client.manifest import read_texts


class TestReadTexts:
    def test_texts_in_line_order(self, tmp_path):
        path = tmp_path / "m.pool.jsonl"
        write_manifest(path, [record(f"text {i}") for i in range(5)])
        assert read_texts(path) == [f"text {i}" for i in range(5)]

    def test_non_ascii_and_duplicates_pass_through(self, tmp_path):
        path = tmp_path / "m.pool.jsonl"
        texts = ["örnek metin 🌍", "örnek metin 🌍", "こんにちは", "mžik"]
        write_manifest(path, [record(t) for t in texts])
        assert read_texts(path) == texts

    def test_extra_keys_tolerated(self, tmp_path):
        path = tmp_path / "m.pool.jsonl"
        rec = record("hello")
        rec["annotator"] = "a3"
        write_manifest(path, [rec])
        assert read_texts(path) == ["hello"]

    def test_only_text_is_required(self, tmp_path):
        # labels/languages/tasks are the engine loader's concern, not ours
        path = tmp_path / "m.pool.jsonl"
        write_lines(path, [json.dumps({"text": "just text"})])
        assert read_texts(path) == ["just text"]

    def test_no_trailing_newline_on_last_line(self, tmp_path):
        path = tmp_path / "m.pool.jsonl"
        path.write_text(json.dumps(record("a")) + "\n" + json.dumps(record("b")), encoding="utf-8")
        assert read_texts(path) == ["a", "b"]


class TestRejection:
    def test_invalid_json_reports_line(self, tmp_path):
        path = tmp_path / "m.pool.jsonl"
        write_lines(path, [json.dumps(record("ok")), "{not json"])
        with pytest.raises(ManifestError) as e:
            read_texts(path)
        assert e.value.line == 2
        assert "line 2" in str(e.value)

    def test_non_object_record(self, tmp_path):
        path = tmp_path / "m.pool.jsonl"
        write_lines(path, ['["a", "list"]'])
        with pytest.raises(ManifestError, match="not an object"):
            read_texts(path)

    def test_missing_text_key(self, tmp_path):
        path = tmp_path / "m.pool.jsonl"
        write_lines(path, [json.dumps({"label": 0})])
        with pytest.raises(ManifestError, match="text"):
            read_texts(path)

    def test_empty_text(self, tmp_path):
        path = tmp_path / "m.pool.jsonl"
        write_lines(path, [json.dumps({"text": ""})])
        with pytest.raises(ManifestError, match="non-empty"):
            read_texts(path)

    def test_non_string_text(self, tmp_path):
        path = tmp_path / "m.pool.jsonl"
        write_lines(path, [json.dumps({"text": 42})])
        with pytest.raises(ManifestError, match="non-empty string"):
            read_texts(path)

    def test_blank_line(self, tmp_path):
        path = tmp_path / "m.pool.jsonl"
        path.write_text(json.dumps(record("a")) + "\n\n", encoding="utf-8")
        with pytest.raises(ManifestError) as e:
            read_texts(path)
        assert e.value.line == 2

    def test_empty_file(self, tmp_path):
        path = tmp_path / "m.pool.jsonl"
        path.write_text("", encoding="utf-8")
        with pytest.raises(ManifestError, match="no records") as e:
            read_texts(path)
        assert e.value.line is None

    def test_missing_file(self, tmp_path):
        with pytest.raises(IoFailure, match="cannot read"):
            read_texts(tmp_path / "nope.jsonl")


class TestRoundTripProperty:
    @settings(max_examples=50, deadline=None)
    @given(texts=st.lists(st.text(min_size=1), min_size=1, max_size=20))
    def test_any_json_encodable_text_survives(self, texts, tmp_path_factory):
        # json escapes newlines and control characters, so one record stays
        # one line no matter what the text contains
        path = tmp_path_factory.mktemp("m") / "m.pool.jsonl"
        write_manifest(path, [record(t) for t in texts])
        assert read_texts(path) == texts
