import orjson
import pytest
from filelock import FileLock

from interface.cli import main

TINY = [
    "--set", "dims.m_lex=6", "--set", "dims.m_node=6", "--set", "dims.m_interp=6", "--set", "dims.m_type=6",
    "--set", "decoder_depth=3", "--set", "parser.epochs=1", "--set", "types.epochs=1",
    "--set", "types.samples=8", "--set", "types.batch_size=8", "--set", "types.max_depth=2",
    "--set", "interpreter.epochs=1", "--set", "eval.k=2", "--set", "eval.bootstrap=20",
]


def _summary(capsys):
    return orjson.loads(capsys.readouterr().out)


def test_synth_writes_records(tmp_path, capsys):
    assert main(["--out", str(tmp_path), "--seed", "3", "synth", "--size", "20"]) == 0
    summary = _summary(capsys)
    assert summary["command"] == "synth"
    assert summary["records"] == 20
    assert summary["clean"] == 10
    assert (tmp_path / "records.tsv").is_file()
    assert (tmp_path / "fragment.json").is_file()
    assert (tmp_path / "seed.txt").read_text() == "3\n"
    assert orjson.loads((tmp_path / "resolved_config.json").read_bytes())["seed"] == 3


def test_synth_dataset_seed(tmp_path, capsys):
    assert main(["--out", str(tmp_path), "synth", "--seed", "7", "--size", "10"]) == 0
    assert _summary(capsys)["seed"] == 7


def test_synth_rejects_small_size(tmp_path):
    assert main(["--out", str(tmp_path), "synth", "--size", "5"]) == 1


def test_unknown_config_key(tmp_path):
    assert main(["--out", str(tmp_path), "--set", "parser.nonsense=1", "synth"]) == 1


def test_unknown_command(tmp_path):
    assert main(["--out", str(tmp_path), "no-such-command"]) == 1


def test_interpreter_before_other_stages(tmp_path):
    assert main(["--out", str(tmp_path), "synth", "--size", "10"]) == 0
    assert main(["--out", str(tmp_path), "train-interpreter"]) == 1


def test_decode_without_checkpoint(tmp_path):
    assert main(["--out", str(tmp_path), "synth", "--size", "10"]) == 0
    assert main(["--out", str(tmp_path), "decode-types"]) == 2


def test_bad_dataset(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("verb\tframe\tsentence\tacceptability_norm\nx\tNP __\tsomeone happened\tabc\n")
    assert main(["--out", str(tmp_path / "run"), "ingest", "--data", str(path)]) == 2


def test_ingest(tmp_path, capsys):
    path = tmp_path / "data.tsv"
    path.write_text("verb\tframe\tsentence\tacceptability_norm\nhappen\tNP __\tSomeone happened.\t0.9\n")
    assert main(["--out", str(tmp_path / "run"), "ingest", "--data", str(path)]) == 0
    assert _summary(capsys)["records"] == 1
    assert (tmp_path / "run" / "records.tsv").is_file()


def test_locked_output_directory(tmp_path):
    with FileLock(str(tmp_path / ".lock")):
        assert main(["--out", str(tmp_path), "synth", "--size", "10"]) == 1


def test_selftest(tmp_path, capsys):
    args = ["--out", str(tmp_path), "selftest", "--sentences", "10", "--pairs", "3", "--distributions", "2"]
    assert main(args) == 0
    summary = _summary(capsys)
    assert summary["passed"]
    assert {c["name"] for c in summary["checks"]} >= {"symbolic_charts", "k_best_depth_2"}
    [deep] = [c for c in summary["checks"] if c["name"] == "cross_entropy_depth_3"]
    assert deep["pairs"] == 3


def test_eval_report_is_reproducible(tmp_path, capsys):
    out = str(tmp_path)
    assert main(["--out", out, *TINY, "synth", "--size", "12"]) == 0
    assert main(["--out", out, *TINY, "eval"]) == 0
    first = (tmp_path / "eval_report.json").read_bytes()
    assert main(["--out", out, *TINY, "eval"]) == 0
    assert (tmp_path / "eval_report.json").read_bytes() == first


@pytest.mark.slow
def test_stage_pipeline(tmp_path, capsys):
    out = str(tmp_path)
    assert main(["--out", out, *TINY, "synth", "--size", "20"]) == 0
    assert main(["--out", out, *TINY, "train-parser"]) == 0
    assert main(["--out", out, *TINY, "train-types"]) == 0
    assert main(["--out", out, *TINY, "train-interpreter"]) == 0
    capsys.readouterr()
    assert main(["--out", out, *TINY, "decode-types", "--k", "2"]) == 0
    summary = _summary(capsys)
    assert summary["k"] == 2
    assert (tmp_path / "types_report.json").is_file()
    assert main(["--out", out, *TINY, "export-spans", "--span", "do something"]) == 0
    assert (tmp_path / "spans.tsv").is_file()


@pytest.mark.slow
def test_retraining_the_parser_keeps_the_type_grammar(tmp_path, capsys):
    out = str(tmp_path)
    assert main(["--out", out, *TINY, "synth", "--size", "20"]) == 0
    assert main(["--out", out, *TINY, "train-types"]) == 0
    assert main(["--out", out, *TINY, "train-parser"]) == 0
    manifest = orjson.loads((tmp_path / "checkpoint" / "manifest.json").read_bytes())
    assert manifest["stages"] == {"parser": True, "types": True, "interpreter": False}
    assert main(["--out", out, *TINY, "train-interpreter"]) == 0
    assert main(["--out", out, *TINY, "train-parser"]) == 0
    manifest = orjson.loads((tmp_path / "checkpoint" / "manifest.json").read_bytes())
    assert manifest["stages"] == {"parser": True, "types": True, "interpreter": False}
