import numpy as np
import orjson
import pandas as pd
import pytest

from chart import symbolic_inside, symbolic_outside
from corpus import (
    UNK,
    DatasetRecord,
    EmbeddingProvider,
    decode_types_report,
    export_spans,
    fragment_grammar,
    fragment_roots,
    generate_synthetic,
    load_dataset,
    parse_span_spec,
    percentile_filter,
    tokenize,
    write_records_tsv,
)
from corpus.exports import find_spans
from training.model import Model
from utils.errors import DatasetError, ThresholdError, UntrainedModelError

HEADER = "verb\tframe\tsentence\tacceptability_norm\n"


def _write(tmp_path, body, header=HEADER):
    path = tmp_path / "data.tsv"
    path.write_text(header + body)
    return path


def _records(scores):
    return [DatasetRecord("v", "f", ("w", str(i)), float(s)) for i, s in enumerate(scores)]


def test_load_example_row(tmp_path):
    path = _write(tmp_path, "think\tNP __ that S\tSomeone thought that something happened.\t0.82\n")
    [record] = load_dataset(path)
    assert record.tokens == ("someone", "thought", "that", "something", "happened")
    assert record.acceptability == pytest.approx(0.82)
    assert record.frame == "NP __ that S"


def test_tokenize_keeps_inner_punctuation():
    assert tokenize("Did someone, say that?!") == ("did", "someone,", "say", "that")
    assert len(tokenize("someone wanted to do something quickly")) == 6


def test_header_only_file_is_empty(tmp_path):
    assert load_dataset(_write(tmp_path, "")) == []


def test_bad_score_names_row(tmp_path):
    path = _write(tmp_path, "a\tNP __\tsomeone happened\t0.5\nb\tNP __\tsomething happened\tabc\n")
    with pytest.raises(DatasetError) as info:
        load_dataset(path)
    assert info.value.row == 2
    assert "abc" in str(info.value)


def test_missing_column(tmp_path):
    path = _write(tmp_path, "a\tNP __\tsomeone happened\n", header="verb\tframe\tsentence\n")
    with pytest.raises(DatasetError, match="acceptability_norm"):
        load_dataset(path)


def test_missing_file(tmp_path):
    with pytest.raises(DatasetError):
        load_dataset(tmp_path / "absent.tsv")


def test_records_tsv_round_trip(tmp_path):
    records = generate_synthetic(3, 12)
    path = tmp_path / "records.tsv"
    write_records_tsv(records, path)
    assert load_dataset(path) == records


def test_percentile_filter_keeps_everything_at_zero():
    records = _records([0.3, -1.0, 2.0])
    assert percentile_filter(records, 0.0) == records


def test_percentile_filter_top_decile():
    records = _records(range(1, 101))
    kept = percentile_filter(records, 90.0)
    assert len(kept) == 10
    assert [r.acceptability for r in kept] == [float(s) for s in range(91, 101)]


def test_percentile_filter_equal_scores():
    records = _records([0.5] * 7)
    assert percentile_filter(records, 90.0) == records


@pytest.mark.parametrize("threshold", [-1.0, 100.5])
def test_percentile_filter_rejects_threshold(threshold):
    with pytest.raises(ThresholdError):
        percentile_filter(_records([1.0]), threshold)


def test_synthetic_needs_ten_items():
    with pytest.raises(ValueError):
        generate_synthetic(0, 9)


def test_synthetic_is_seeded():
    assert generate_synthetic(7, 40) == generate_synthetic(7, 40)
    assert generate_synthetic(7, 40) != generate_synthetic(8, 40)


def test_synthetic_scores_and_corruptions():
    records = generate_synthetic(7, 60)
    assert len(records) == 60
    assert all(-1.0 <= r.acceptability <= 1.0 for r in records)
    for clean, bad in zip(records[::2], records[1::2]):
        assert clean.acceptability == 1.0
        assert bad.tokens != clean.tokens
        assert bad.acceptability < 1.0


def test_clean_synthetic_items_are_derivable():
    grammar, roots = fragment_grammar(), fragment_roots()
    for record in generate_synthetic(7, 40)[::2]:
        chart = symbolic_outside(grammar, symbolic_inside(grammar, record.tokens), roots)
        assert chart.derivable(roots), record.sentence


def test_lookup_embeddings_share_unknown_row(rng):
    provider = EmbeddingProvider.lookup(["b", "a"], 3, rng)
    assert provider.vocabulary == [UNK, "a", "b"]
    vectors = provider(["a", "zzz", "qqq"]).data
    assert vectors.shape == (3, 3)
    np.testing.assert_array_equal(vectors[1], vectors[2])


def test_external_embeddings(tmp_path):
    path = tmp_path / "vectors.jsonl"
    lines = [{"tokens": ["someone", "happened"], "vectors": [[0.1, 0.2], [0.3, 0.4]]}]
    path.write_bytes(b"\n".join(orjson.dumps(line) for line in lines) + b"\n")
    provider = EmbeddingProvider.from_file(path)
    assert provider.m_lex == 2
    np.testing.assert_allclose(provider(["someone", "happened"]).data, [[0.1, 0.2], [0.3, 0.4]])
    with pytest.raises(DatasetError):
        provider(["something", "happened"])


def test_external_embeddings_reject_wrong_shape(tmp_path):
    path = tmp_path / "vectors.jsonl"
    path.write_bytes(orjson.dumps({"tokens": ["a", "b"], "vectors": [[0.1, 0.2]]}) + b"\n")
    with pytest.raises(DatasetError) as info:
        EmbeddingProvider.from_file(path)
    assert info.value.row == 1


def test_span_spec_and_matching():
    patterns = parse_span_spec(["Do Something", "someone", "someone", "  "])
    assert patterns == [("do", "something"), ("someone",)]
    found = find_spans(("someone", "wanted", "to", "do", "something"), patterns)
    assert found == [(3, 5, ("do", "something")), (0, 1, ("someone",))]


def test_export_spans_without_matches_writes_header(tmp_path, tiny_config):
    records = generate_synthetic(1, 10)
    model = Model.for_records(tiny_config, records)
    model.stages["parser"] = True
    path = tmp_path / "spans.tsv"
    assert export_spans(model, records, parse_span_spec(["nothing here"]), path) == 0
    frame = pd.read_csv(path, sep="\t")
    assert list(frame.columns)[:6] == ["sentence_id", "start", "end", "expression", "verb", "frame"]
    assert len(frame.columns) == 6 + 2 * tiny_config.dims.m_node
    assert frame.empty


def test_export_spans_rows(tmp_path, tiny_config):
    records = generate_synthetic(1, 10)
    model = Model.for_records(tiny_config, records)
    model.stages["parser"] = True
    path = tmp_path / "spans.tsv"
    expected = sum(len(find_spans(r.tokens, [("someone",)])) for r in records)
    assert export_spans(model, records, [("someone",)], path) == expected
    frame = pd.read_csv(path, sep="\t")
    assert (frame["expression"] == "someone").all()
    assert (frame["end"] - frame["start"] == 1).all()


def test_decode_report_needs_every_stage(tmp_path, tiny_config):
    records = generate_synthetic(1, 10)
    model = Model.for_records(tiny_config, records)
    with pytest.raises(UntrainedModelError):
        decode_types_report(model, records, [("someone",)], 2, tmp_path / "r.json", tmp_path / "r.tsv")


def test_decode_report_proportions(tmp_path, tiny_config):
    records = generate_synthetic(1, 20)
    model = Model.for_records(tiny_config, records)
    for stage in model.stages:
        model.stages[stage] = True
    report = decode_types_report(model, records, [("someone",), ("something",)], 2,
                                 tmp_path / "r.json", tmp_path / "r.tsv")
    assert report["k"] == 2
    assert report["tokenings"]
    for group in report["groups"]:
        shares = list(group["proportions"].values())
        assert sum(shares) == pytest.approx(1.0)
        assert shares == sorted(shares, reverse=True)
    assert all(len(t["types"]) == 2 for t in report["tokenings"])
    assert orjson.loads((tmp_path / "r.json").read_bytes())["k"] == 2
    assert len(pd.read_csv(tmp_path / "r.tsv", sep="\t")) == 2 * len(report["tokenings"])
