from typing import Any, Dict, List, Optional, Sequence

from rich.console import Console
from rich.panel import Panel
from rich.table import Table


def _fmt(value: Any) -> str:
    if value is None:
        return "undefined"
    if isinstance(value, float):
        return f"{value:.4f}"
    if isinstance(value, (list, tuple)) and value and all(isinstance(v, float) for v in value):
        return "[" + ", ".join(f"{v:.4f}" for v in value) + "]"
    return str(value)


class DisplayManager:
    """human-readable run summaries on stderr; the json summary owns stdout"""

    def __init__(self, console: Console):
        self.console = console

    def render_summary(self, command: str, summary: Dict[str, Any]) -> None:
        """flat key/value table of a command's summary"""
        table = Table(title=command, show_header=False)
        table.add_column("field", style="cyan", no_wrap=True)
        table.add_column("value", style="white")
        for key, value in summary.items():
            if isinstance(value, (dict, list)) and not _is_number_list(value):
                continue
            table.add_row(key, _fmt(value))
        self.console.print(table)

    def render_eval_report(self, report: Dict[str, Any]) -> None:
        table = Table(title=f"{report['k']}-fold evaluation over {report['n']} records")
        table.add_column("fold", style="cyan", justify="right")
        table.add_column("pearson", style="yellow", justify="right")
        table.add_column("spearman", style="yellow", justify="right")
        for number, (p, s) in enumerate(zip(report["fold_pearson"], report["fold_spearman"]), start=1):
            table.add_row(str(number), _fmt(p), _fmt(s))
        table.add_row("pooled", _fmt(report["pearson"]), _fmt(report["spearman"]), style="bold")
        self.console.print(table)
        if report.get("pearson_ci"):
            low, high = report["pearson_ci"]
            self.console.print(f"pearson 95% ci: [{low:.4f}, {high:.4f}]")
        if report.get("error"):
            self.render_warning(report["error"])

    def render_checks(self, results: Sequence[Dict[str, Any]], title: str = "checks") -> None:
        table = Table(title=title)
        table.add_column("check", style="cyan")
        table.add_column("status")
        table.add_column("detail", style="dim")
        for result in results:
            status = "[green]ok[/green]" if result["passed"] else "[red]failed[/red]"
            detail = ", ".join(f"{k}={_fmt(v)}" for k, v in result.items() if k not in ("name", "passed"))
            table.add_row(result["name"], status, detail)
        self.console.print(table)

    def render_type_groups(self, groups: List[Dict[str, Any]], limit: Optional[int] = 3) -> None:
        """most frequent top-1 types per (expression, frame)"""
        table = Table(title="decoded types")
        table.add_column("expression", style="cyan")
        table.add_column("frame")
        table.add_column("n", justify="right")
        table.add_column("types", style="yellow")
        for group in groups:
            shares = list(group["proportions"].items())[:limit]
            table.add_row(group["expression"], group["frame"], str(group["count"]),
                          "  ".join(f"{t} {p:.2f}" for t, p in shares))
        self.console.print(table)

    def render_error(self, error_message: str, title: str = "error") -> None:
        self.console.print(Panel(
            f"[red]{error_message}[/red]",
            title=f"[red]{title}[/red]",
            border_style="red",
            padding=(0, 1)
        ))

    def render_warning(self, message: str, title: str = "warning") -> None:
        self.console.print(Panel(
            f"[yellow]{message}[/yellow]",
            title=f"[yellow]{title}[/yellow]",
            border_style="yellow",
            padding=(0, 1)
        ))


def _is_number_list(value: Any) -> bool:
    return isinstance(value, (list, tuple)) and all(isinstance(v, (int, float)) or v is None for v in value)
