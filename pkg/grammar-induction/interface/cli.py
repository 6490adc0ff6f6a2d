import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import click
import orjson
from filelock import FileLock, Timeout
from rich.console import Console

from coherence.anchors import AnchorTable
from corpus.exports import decode_types_report, export_spans, parse_span_spec
from corpus.records import DatasetRecord, load_dataset, write_records_tsv
from corpus.synthetic import generate_synthetic, write_fragment
from training.checks import run_gradient_checks, run_selftest
from training.evaluate import kfold_evaluate, normalization_audit, type_grammar_metrics
from training.interpreter_stage import train_interpreter
from training.model import Model
from training.parser_stage import train_parser
from training.type_stage import train_type_grammar
from utils.config import TrainConfig, load_config
from utils.errors import (
    AcceptanceError,
    DatasetError,
    GrammarInductionError,
    LockedOutputError,
    StageOrderError,
)
from utils.logging_config import setup_logging

from .display import DisplayManager

logger = logging.getLogger(__name__)

# stdout is reserved for the json summary
console = Console(stderr=True)

RECORDS_FILE = "records.tsv"
CHECKPOINT_DIR = "checkpoint"
DEFAULT_SPANS = ("someone", "something")


@dataclass
class RunContext:
    config: TrainConfig
    out: Path
    display: DisplayManager

    @property
    def records_path(self) -> Path:
        return self.out / RECORDS_FILE

    @property
    def checkpoint(self) -> Path:
        return self.out / CHECKPOINT_DIR

    def records(self, data: Optional[Path]) -> List[DatasetRecord]:
        path = data or self.records_path
        if data is None and not path.is_file():
            raise DatasetError(f"no records in {self.out}; run ingest or synth first, or pass --data")
        return load_dataset(path)

    def load_model(self) -> Model:
        model = Model.load(self.checkpoint)
        if model.config.fingerprint() != self.config.fingerprint():
            logger.warning("checkpoint was trained with a different configuration; using the checkpoint's")
        return model

    def anchors(self, path: Optional[Path], model: Model) -> AnchorTable:
        path = path or self.config.anchors_file
        if path is None:
            return AnchorTable.default()
        return AnchorTable.load(path, model.config.primitives)

    def emit(self, command: str, summary: Dict[str, Any]) -> None:
        summary = {"command": command, **summary}
        click.echo(orjson.dumps(summary, option=orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY).decode())


class PipelineGroup(click.Group):
    """maps library errors to exit codes at the top of every command"""

    def invoke(self, ctx: click.Context):
        try:
            return super().invoke(ctx)
        except GrammarInductionError as e:
            logger.error("%s: %s", type(e).__name__, e)
            if ctx.params.get("debug"):
                console.print_exception()
            else:
                DisplayManager(console).render_error(str(e))
            ctx.exit(e.exit_code)


@click.group(cls=PipelineGroup)
@click.option("--config", "config_path", type=click.Path(path_type=Path), default=None,
              help="toml file with TrainConfig values")
@click.option("--seed", type=int, default=None, help="overrides the configured seed")
@click.option("--out", "out_dir", type=click.Path(path_type=Path), default=Path("runs/default"),
              show_default=True, help="output directory (one invocation at a time)")
@click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE", help="dotted config override, repeatable")
@click.option("--debug", is_flag=True, help="debug logging and tracebacks")
@click.pass_context
def cli(ctx: click.Context, config_path: Optional[Path], seed: Optional[int], out_dir: Path,
        overrides: Sequence[str], debug: bool):
    """grammar induction over span charts and a learned type grammar"""
    items = list(overrides)
    if seed is not None:
        items.append(f"seed={seed}")
    config = load_config(config_path, items)

    out_dir.mkdir(parents=True, exist_ok=True)
    lock = FileLock(str(out_dir / ".lock"))
    try:
        ctx.with_resource(lock.acquire(timeout=0))
    except Timeout:
        raise LockedOutputError(f"{out_dir} is in use by another invocation") from None

    setup_logging(debug or config.debug, out_dir / "run.log", config.log_level)
    config.save_to_file(out_dir / "resolved_config.json")
    (out_dir / "seed.txt").write_text(f"{config.seed}\n")
    logger.debug("resolved config %s", config.fingerprint())
    ctx.obj = RunContext(config=config, out=out_dir, display=DisplayManager(console))


pass_run = click.make_pass_decorator(RunContext)


@cli.command()
@click.option("--data", type=click.Path(path_type=Path, exists=True, dir_okay=False), required=True)
@pass_run
def ingest(run: RunContext, data: Path):
    """read a verb/frame/sentence/acceptability_norm tsv into the output directory"""
    records = load_dataset(data)
    write_records_tsv(records, run.records_path)
    summary = {"records": len(records), "path": str(run.records_path)}
    run.display.render_summary("ingest", summary)
    run.emit("ingest", summary)


@cli.command()
@click.option("--size", type=int, default=500, show_default=True)
@click.option("--seed", "dataset_seed", type=int, default=None, help="dataset seed; defaults to the run seed")
@pass_run
def synth(run: RunContext, size: int, dataset_seed: Optional[int]):
    """sample a seeded dataset from the bleached fragment and ship its grammar"""
    seed = run.config.seed if dataset_seed is None else dataset_seed
    try:
        records = generate_synthetic(seed, size)
    except ValueError as e:
        raise click.BadParameter(str(e), param_hint="--size") from None
    write_records_tsv(records, run.records_path)
    write_fragment(run.out / "fragment.json")
    summary = {
        "records": len(records),
        "clean": sum(r.acceptability == 1.0 for r in records),
        "seed": seed,
        "path": str(run.records_path),
    }
    run.display.render_summary("synth", summary)
    run.emit("synth", summary)


@cli.command("train-parser")
@click.option("--data", type=click.Path(path_type=Path, exists=True, dir_okay=False), default=None)
@click.option("--embeddings", type=click.Path(path_type=Path, exists=True, dir_okay=False), default=None,
              help="json-lines file of per-sentence token vectors")
@pass_run
def train_parser_command(run: RunContext, data: Optional[Path], embeddings: Optional[Path]):
    records = run.records(data)
    model = Model.for_records(run.config, records, embeddings)
    if (run.checkpoint / "manifest.json").is_file():
        # a pretrained type grammar survives retraining the parser
        model.keep_type_grammar(run.load_model())
    history = train_parser(model, records)
    model.save(run.checkpoint)
    summary = {"records": len(records), "epoch_mse": history, "final_mse": history[-1]}
    run.display.render_summary("train-parser", summary)
    run.emit("train-parser", summary)


@cli.command("train-types")
@pass_run
def train_types_command(run: RunContext):
    """pretrain encoder, decoders and controller on sampled types"""
    if (run.checkpoint / "manifest.json").is_file():
        model = run.load_model()
    else:
        records = run.records(None) if run.records_path.is_file() else []
        model = Model.for_records(run.config, records)
    history = train_type_grammar(model)
    metrics = type_grammar_metrics(model)
    model.save(run.checkpoint)
    summary = {"final_loss": {part: losses[-1] for part, losses in history.items()}, "metrics": metrics}
    run.display.render_summary("train-types", metrics)
    run.emit("train-types", summary)


@cli.command("train-interpreter")
@click.option("--data", type=click.Path(path_type=Path, exists=True, dir_okay=False), default=None)
@click.option("--anchors", "anchors_path", type=click.Path(path_type=Path, exists=True, dir_okay=False),
              default=None, help="json list of {pattern, type} constraints")
@pass_run
def train_interpreter_command(run: RunContext, data: Optional[Path], anchors_path: Optional[Path]):
    if not (run.checkpoint / "manifest.json").is_file():
        raise StageOrderError("run train-parser and train-types first")
    model = run.load_model()
    model.require("parser", "types")
    records = run.records(data)
    history = train_interpreter(model, records, run.anchors(anchors_path, model))
    audit = normalization_audit(model, records)
    model.save(run.checkpoint)
    summary = {"epoch_loss": history, "final_loss": history[-1], "normalization": audit}
    run.display.render_summary("train-interpreter", {"final_loss": history[-1], **audit})
    run.emit("train-interpreter", summary)


@cli.command("eval")
@click.option("--data", type=click.Path(path_type=Path, exists=True, dir_okay=False), default=None)
@pass_run
def eval_command(run: RunContext, data: Optional[Path]):
    """k-fold held-out correlation of predicted and observed acceptability"""
    records = run.records(data)
    report = kfold_evaluate(records, run.config)
    # runtime is excluded so reruns with one seed write identical files
    stable = report.model_dump(mode="json", exclude={"runtime_seconds"})
    (run.out / "eval_report.json").write_bytes(orjson.dumps(stable, option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS))
    run.display.render_eval_report(stable)
    run.emit("eval", report.model_dump(mode="json"))


@cli.command("decode-types")
@click.option("--data", type=click.Path(path_type=Path, exists=True, dir_okay=False), default=None)
@click.option("--span", "spans", multiple=True, help="expression to decode, repeatable")
@click.option("--k", type=click.IntRange(min=1), default=3, show_default=True)
@pass_run
def decode_types_command(run: RunContext, data: Optional[Path], spans: Sequence[str], k: int):
    """most likely types of each expression in each frame"""
    model = run.load_model()
    records = run.records(data)
    report = decode_types_report(
        model, records, parse_span_spec(spans or DEFAULT_SPANS), k,
        run.out / "types_report.json", run.out / "types_report.tsv",
    )
    run.display.render_type_groups(report["groups"])
    run.emit("decode-types", {
        "k": k,
        "tokenings": len(report["tokenings"]),
        "groups": report["groups"],
        "json": str(run.out / "types_report.json"),
        "tsv": str(run.out / "types_report.tsv"),
    })


@cli.command("export-spans")
@click.option("--data", type=click.Path(path_type=Path, exists=True, dir_okay=False), default=None)
@click.option("--span", "spans", multiple=True, required=True, help="expression to export, repeatable")
@pass_run
def export_spans_command(run: RunContext, data: Optional[Path], spans: Sequence[str]):
    """span vectors of every occurrence, for external projection tools"""
    model = run.load_model()
    records = run.records(data)
    path = run.out / "spans.tsv"
    rows = export_spans(model, records, parse_span_spec(spans), path)
    summary = {"rows": rows, "path": str(path)}
    run.display.render_summary("export-spans", summary)
    run.emit("export-spans", summary)


def _report_checks(run: RunContext, command: str, results) -> None:
    payload = [r.to_json() for r in results]
    run.display.render_checks(payload, title=command)
    run.emit(command, {"passed": all(r.passed for r in results), "checks": payload})
    failed = [r.name for r in results if not r.passed]
    if failed:
        raise AcceptanceError(f"failed: {', '.join(failed)}")


@cli.command()
@click.option("--entries", type=click.IntRange(min=1), default=8, show_default=True,
              help="probed entries per parameter")
@pass_run
def gradcheck(run: RunContext, entries: int):
    """backward() against central finite differences in float64"""
    _report_checks(run, "gradcheck", run_gradient_checks(run.config, max_entries=entries))


@cli.command()
@click.option("--sentences", type=click.IntRange(min=1), default=200, show_default=True)
@click.option("--pairs", type=click.IntRange(min=1), default=100, show_default=True)
@click.option("--deep-pairs", type=click.IntRange(min=1), default=None,
              help="depth-3 cross-entropy pairs; defaults to --pairs")
@click.option("--distributions", type=click.IntRange(min=1), default=50, show_default=True)
@pass_run
def selftest(run: RunContext, sentences: int, pairs: int, deep_pairs: Optional[int], distributions: int):
    """chart, cross-entropy and k-best oracles"""
    _report_checks(run, "selftest", run_selftest(run.config, sentences, pairs, deep_pairs, distributions))


def main(argv: Optional[Sequence[str]] = None) -> int:
    """run the cli and return its exit status; usage errors exit 1"""
    try:
        status = cli.main(args=list(argv) if argv is not None else None,
                          prog_name="grammar-induction", standalone_mode=False)
    except click.ClickException as e:
        e.show(file=sys.stderr)
        return 1
    except click.Abort:
        console.print("interrupted")
        return 1
    return status if isinstance(status, int) else 0
