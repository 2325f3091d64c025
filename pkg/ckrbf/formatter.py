"""Terminal rendering of diagnostics, grids, P_f curves and comparisons."""

from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from rich.console import Console
from rich.panel import Panel
from rich.progress import BarColumn, MofNCompleteColumn, Progress, SpinnerColumn, TextColumn
from rich.table import Table

from ckrbf.evaluation import ComparisonTable, CvReport, DatasetDiagnostics, GridResult, PfCurve


class ReportFormatter:
    """Formats evaluation results for display."""

    def __init__(self, console: Optional[Console] = None, quiet: bool = False):
        """Initialize the formatter.

        Args:
            console: Console to print to (a new one on stdout by default)
            quiet: Only print errors and artifact paths
        """
        self.console = console or Console()
        self.quiet = quiet

    def display_diagnostics(self, records: Sequence[DatasetDiagnostics]) -> None:
        """Dataset characteristics with the relative covariance gaps of a 2-means split."""
        if self.quiet:
            return
        table = Table(title="Dataset characteristics", header_style="bold magenta")
        table.add_column("dataset", style="cyan")
        for name in ("d", "n-", "n+"):
            table.add_column(name, justify="right")
        for name in ("Σ1 vs I", "Σ2 vs I", "Σ2 vs Σ1", "Σ1+Σ2 vs Σ"):
            table.add_column(name, justify="right", style="yellow")
        for r in records:
            table.add_row(
                r.name,
                str(r.d),
                str(r.n_negative),
                str(r.n_positive),
                *(f"{value:.3f}" for value in r.ratios),
            )
        self.console.print(table)

    def display_cv(
        self, dataset: str, kernel: str, C: float, gamma: float, report: CvReport
    ) -> None:
        if self.quiet:
            return
        self.console.print(
            Panel.fit(
                f"[bold cyan]{dataset}[/bold cyan]  {kernel}  C={C:g}  γ={gamma:g}\n"
                f"accuracy [bold green]{report.accuracy:.4f}[/bold green]",
                border_style="cyan",
            )
        )
        table = Table(show_header=True, header_style="bold magenta")
        table.add_column("fold", style="cyan", width=4)
        table.add_column("correct", justify="right")
        table.add_column("test size", justify="right")
        table.add_column("accuracy", justify="right", style="green")
        for fold in report.folds:
            if fold.skipped:
                table.add_row(str(fold.index), "-", str(fold.test_size), "[yellow]skipped[/yellow]")
            else:
                table.add_row(
                    str(fold.index), str(fold.correct), str(fold.test_size), f"{fold.accuracy:.4f}"
                )
        self.console.print(table)

    def display_grid(self, result: GridResult) -> None:
        """Heatmap of mean CV accuracy, one row per C and one column per γ."""
        if self.quiet:
            return
        score, c, g = result.best()
        table = Table(
            title=f"{result.dataset_id} · {result.kernel_id} · {result.folds}-fold CV",
            header_style="bold magenta",
        )
        table.add_column("C \\ γ", style="cyan")
        for gamma in result.spec.gamma_values:
            table.add_column(f"{gamma:g}", justify="right")
        for i, C in enumerate(result.spec.c_values):
            cells = []
            for j in range(len(result.spec.gamma_values)):
                value = result.scores[i, j]
                style = "bold green" if value == score else "white"
                cells.append(f"[{style}]{value:.3f}[/{style}]")
            table.add_row(f"{C:g}", *cells)
        self.console.print(table)
        self.console.print(f"[bold]best[/bold] {score:.4f} at C={c:g}, γ={g:g}")

    def display_pf(
        self, labels: Sequence[str], curves: Sequence[PfCurve], aucs: Sequence[float]
    ) -> None:
        """AUC of every P_f curve, highest first."""
        if self.quiet:
            return
        table = Table(title="P_f stability (area under curve)", header_style="bold magenta")
        table.add_column("kernel", style="cyan")
        table.add_column("cells", justify="right")
        table.add_column("best", justify="right")
        table.add_column("AUC", justify="right", style="green")
        ranked = sorted(zip(labels, curves, aucs), key=lambda item: -item[2])
        for label, curve, auc in ranked:
            table.add_row(label, str(curve.cells), f"{curve.thresholds[-1]:.4f}", f"{auc:.4f}")
        self.console.print(table)

    def display_comparison(self, comparison: ComparisonTable) -> None:
        if self.quiet:
            return
        self.console.print(f"[bold]📊 {comparison.dataset_id}[/bold]")
        auc_table = Table(show_header=True, header_style="bold magenta")
        auc_table.add_column("kernel", style="cyan")
        auc_table.add_column("AUC", justify="right", style="green")
        for label, auc in comparison.auc_rows():
            auc_table.add_row(label, f"{auc:.4f}")
        self.console.print(auc_table)

        if comparison.wins:
            win_table = Table(
                title="Wins over the three-value γ windows", header_style="bold magenta"
            )
            win_table.add_column("challenger", style="cyan")
            win_table.add_column("baseline", style="yellow")
            win_table.add_column("wins", justify="right", style="green")
            for challenger, baseline, share in comparison.win_rows():
                win_table.add_row(challenger, baseline, f"{share:.0%}")
            self.console.print(win_table)

    def display_artifacts(self, paths: List[Path]) -> None:
        for path in paths:
            self.console.print(f"  [dim]→[/dim] {path}")

    def show_progress(self) -> Progress:
        """Progress bar over grid cells; add one task per grid being searched."""
        return Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            BarColumn(),
            MofNCompleteColumn(),
            transient=True,
            console=self.console,
            disable=self.quiet,
        )

    def print_error(self, message: str) -> None:
        self.console.print(f"[bold red]❌ Error:[/bold red] {message}")

    def print_success(self, message: str) -> None:
        if not self.quiet:
            self.console.print(f"[bold green]✅ Success:[/bold green] {message}")

    def print_warning(self, message: str) -> None:
        if not self.quiet:
            self.console.print(f"[bold yellow]⚠️  Warning:[/bold yellow] {message}")

    def summary(self, data: Dict[str, Any]) -> None:
        """Key/value table, e.g. the effective run configuration in verbose mode."""
        if self.quiet:
            return
        table = Table(show_header=False, box=None, padding=(0, 1))
        for key, value in data.items():
            table.add_row(f"{key}:", f"[yellow]{value}[/yellow]")
        self.console.print(table)
