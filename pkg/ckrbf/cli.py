"""Command-line interface for ckrbf benchmarking runs."""

import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Sequence, Tuple

import click
import numpy as np
from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler
from rich.progress import Progress

from ckrbf import __version__
from ckrbf.artifacts import ArtifactWriter
from ckrbf.config import (
    Command,
    RunConfig,
    Scaling,
    build_run_config,
    load_config,
    load_environment,
)
from ckrbf.dataset import Dataset, FoldPlan, load_dataset, scale_unit_interval, stratified_kfold
from ckrbf.evaluation import (
    FAMILIES,
    GridResult,
    KernelSpec,
    compare_kernels,
    cross_validate_detailed,
    dataset_diagnostics,
    grid_search,
    make_kernel,
    pf_auc,
    pf_curve,
)
from ckrbf.exceptions import CkrbfError
from ckrbf.formatter import ReportFormatter
from ckrbf.solver import SvmProblem, train_svc

EXIT_USAGE = 1
EXIT_DATA = 2


class CkrbfGroup(click.Group):
    """Click group that reports usage errors with exit status 1."""

    def make_context(self, *args: Any, **kwargs: Any) -> click.Context:
        try:
            return super().make_context(*args, **kwargs)
        except click.UsageError as e:
            e.exit_code = EXIT_USAGE
            raise

    def invoke(self, ctx: click.Context) -> Any:
        try:
            return super().invoke(ctx)
        except click.UsageError as e:
            e.exit_code = EXIT_USAGE
            raise


def setup_logging(verbose: bool, debug: bool) -> None:
    """Route library logging through rich on stderr."""
    level = logging.DEBUG if debug else logging.INFO if verbose else logging.WARNING
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), show_path=debug)],
        force=True,
    )


def exit_code_for(error: BaseException) -> int:
    """Map an exception to the CLI exit status."""
    if isinstance(error, CkrbfError):
        return error.exit_code
    if isinstance(error, (np.linalg.LinAlgError, OSError)):
        return EXIT_DATA
    return EXIT_USAGE


def _parse_floats(
    ctx: click.Context, param: click.Parameter, value: Optional[str]
) -> Optional[Tuple[float, ...]]:
    if value is None:
        return None
    try:
        return tuple(float(v) for v in value.split(",") if v.strip())
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got {value!r}")


def _slug(label: str) -> str:
    return label.replace("(", "").replace(")", "")


def _apply(options: Sequence[Callable[[Callable], Callable]], func: Callable) -> Callable:
    for option in reversed(options):
        func = option(func)
    return func


def run_options(func: Callable) -> Callable:
    """Options shared by every command."""
    return _apply(
        [
            click.argument(
                "datasets",
                nargs=-1,
                required=True,
                type=click.Path(exists=True, dir_okay=False, path_type=Path),
            ),
            click.option(
                "--config",
                "-c",
                "config_path",
                type=click.Path(exists=True, dir_okay=False, path_type=Path),
                help="Path to config file (default: nearest .ckrbf.yaml)",
            ),
            click.option(
                "--output",
                "-o",
                "output_dir",
                type=click.Path(file_okay=False, path_type=Path),
                help="Output directory (default: $CKRBF_OUTPUT_DIR or ./ckrbf-output)",
            ),
            click.option(
                "--format",
                "output_format",
                type=click.Choice(["json", "csv"]),
                help="Artifact format (default: json)",
            ),
            click.option("--seed", type=int, help="Seed for folds and k-means restarts"),
            click.option("--folds", type=int, help="Cross-validation folds (default: 10)"),
            click.option(
                "--jobs", "-j", type=int, help="Worker threads (default: $CKRBF_JOBS or 1)"
            ),
            click.option(
                "--scaling",
                type=click.Choice(["none", "global", "strict"]),
                help="Scale features to [0, 1]: over the whole dataset, per fold, or not at all",
            ),
            click.option("--quiet", "-q", is_flag=True, help="Print only artifact paths"),
            click.option("--verbose", "-v", is_flag=True, help="Enable verbose output"),
            click.option("--debug", "-d", is_flag=True, help="Enable debug logging"),
        ],
        func,
    )


def kernel_options(func: Callable) -> Callable:
    """Options selecting and building kernels."""
    return _apply(
        [
            click.option(
                "--kernel",
                "families",
                type=click.Choice(FAMILIES),
                multiple=True,
                help="Kernel family; repeat to evaluate several (default: ckrbf)",
            ),
            click.option("--k", "k", type=int, multiple=True, help="Cluster count; repeatable"),
            click.option("--eps", "epsilon", type=float, help="Covariance regularisation"),
            click.option(
                "--mode",
                type=click.Choice(["transductive", "strict"]),
                help="Cluster all features once, or only each training fold",
            ),
            click.option("--restarts", type=int, help="k-means++ restarts (default: 10)"),
        ],
        func,
    )


def grid_options(func: Callable) -> Callable:
    return _apply(
        [
            click.option(
                "--c-values", callback=_parse_floats, help="Comma-separated C grid"
            ),
            click.option(
                "--gamma-values", callback=_parse_floats, help="Comma-separated γ grid"
            ),
        ],
        func,
    )


def _load(config: RunConfig, path: Path) -> Dataset:
    ds = load_dataset(path)
    if config.scaling == Scaling.GLOBAL:
        ds = scale_unit_interval(ds)
    return ds


def _execute(
    command: Command,
    params: Dict[str, Any],
    body: Callable[[RunConfig, ArtifactWriter, ReportFormatter], None],
) -> None:
    """Validate the configuration, run ``body`` and write the manifest.

    Exits with 1 on usage errors, 2 on data errors and 3 when the solver
    does not converge. Artifacts of a failed run are removed.
    """
    verbose, debug = params.pop("verbose"), params.pop("debug")
    quiet = params.pop("quiet")
    setup_logging(verbose, debug)
    formatter = ReportFormatter(quiet=quiet)

    datasets = list(params.pop("datasets"))
    config_path = params.pop("config_path")
    try:
        load_environment()
        settings = load_config(config_path)
        config = build_run_config(command.value, datasets, settings, params)
    except (ValidationError, ValueError) as e:
        formatter.print_error(f"invalid configuration: {e}")
        sys.exit(EXIT_USAGE)

    if verbose:
        formatter.summary(config.echo())

    try:
        with ArtifactWriter(config.output_dir) as writer:
            body(config, writer, formatter)
            writer.write_manifest(command.value, config.echo(), config.datasets)
    except KeyboardInterrupt:
        formatter.print_warning("Run cancelled by user; partial artifacts removed.")
        sys.exit(EXIT_USAGE)
    except Exception as e:
        formatter.print_error(f"{type(e).__name__}: {e}")
        if verbose:
            formatter.console.print_exception()
        sys.exit(exit_code_for(e))

    formatter.print_success(f"{command.value} finished; {len(writer.written)} artifact(s) written")
    formatter.display_artifacts(writer.written)


@click.group(cls=CkrbfGroup)
@click.version_option(__version__, prog_name="ckrbf")
def main() -> None:
    """ckrbf - cluster-covariance RBF kernels for SVMs.

    \b
    COMMANDS:
      diagnose  Dataset size, balance and 2-means covariance gaps
      train     Cross-validated accuracy of one (C, γ) setting
      grid      Accuracy over a (C, γ) grid
      pf        P_f stability curves and their AUC
      compare   AUC and limited-search win percentages across families

    \b
    EXAMPLES:
      ckrbf diagnose data/fourclass data/heart
      ckrbf train data/heart --kernel ckrbf --k 2 --gamma 0.1 --c 1
      ckrbf grid data/fourclass --kernel rbf --format csv
      ckrbf pf data/diabetes --kernel rbf --kernel ckrbf
      ckrbf compare data/australian --k 2 --k 3 --jobs 4
    """


@main.command("diagnose")
@run_options
def diagnose_command(**params: Any) -> None:
    """Dataset characteristics and relative covariance gaps of a 2-means split."""

    def body(config: RunConfig, writer: ArtifactWriter, formatter: ReportFormatter) -> None:
        records = [
            dataset_diagnostics(_load(config, path), config.seed, config.restarts, config.jobs)
            for path in config.datasets
        ]
        formatter.display_diagnostics(records)
        if config.output_format.value == "csv":
            header = list(records[0].to_dict())
            writer.write_csv(
                "diagnostics.csv", header, [list(r.to_dict().values()) for r in records]
            )
        else:
            writer.write_json("diagnostics.json", [r.to_dict() for r in records])

    _execute(Command.DIAGNOSE, params, body)


@main.command("train")
@run_options
@kernel_options
@click.option("--gamma", type=float, help="Kernel width γ")
@click.option("--c", "C", type=float, help="Box constraint C")
@click.option(
    "--export-gram", is_flag=True, help="Also write the full-data Gram matrix as CSV"
)
def train_command(**params: Any) -> None:
    """Cross-validated accuracy at one (C, γ), plus a model fitted on all data."""

    def body(config: RunConfig, writer: ArtifactWriter, formatter: ReportFormatter) -> None:
        for path in config.datasets:
            ds = _load(config, path)
            plan = stratified_kfold(ds, config.folds, config.seed)
            for spec in config.kernel_specs():
                _train_one(config, ds, plan, spec, writer, formatter)

    _execute(Command.TRAIN, params, body)


def _train_one(
    config: RunConfig,
    ds: Dataset,
    plan: FoldPlan,
    spec: KernelSpec,
    writer: ArtifactWriter,
    formatter: ReportFormatter,
) -> None:
    report = cross_validate_detailed(ds, spec, config.C, plan, jobs=config.jobs)
    formatter.display_cv(ds.name, spec.label, config.C, spec.gamma, report)
    stem = f"{ds.name}-{_slug(spec.label)}"

    record: Dict[str, Any] = {
        "dataset": ds.name,
        "kernel": spec.to_dict(),
        "C": config.C,
        "accuracy": report.accuracy,
        "folds": [
            {
                "index": f.index,
                "accuracy": f.accuracy,
                "correct": f.correct,
                "test_size": f.test_size,
                "skipped": f.skipped,
            }
            for f in report.folds
        ],
    }

    if spec.family == "mkrbf":
        if config.export_gram:
            formatter.print_warning(f"{spec.label} has no single Gram matrix; not exported")
    else:
        kernel = make_kernel(spec, ds.features, jobs=config.jobs)
        G = kernel.gram_parts(ds.features).at(spec.gamma)
        model = train_svc(SvmProblem(G, ds.labels, config.C, spec.tol, spec.max_iter))
        record["model"] = {"kernel": kernel.to_dict(), "svm": model.to_dict()}
        if config.export_gram:
            writer.write_matrix(f"{stem}-gram.csv", G)

    if config.output_format.value == "csv":
        writer.write_csv(
            f"{stem}-folds.csv",
            ["fold", "correct", "test_size", "accuracy"],
            [
                (f.index, f.correct, f.test_size, "" if f.accuracy is None else f.accuracy)
                for f in report.folds
            ],
        )
    else:
        writer.write_json(f"{stem}-train.json", record)


def _searcher(
    config: RunConfig, progress: Progress, ds: Dataset
) -> Callable[[KernelSpec], GridResult]:
    grid = config.grid_spec()
    plan = stratified_kfold(ds, config.folds, config.seed)

    def search(spec: KernelSpec) -> GridResult:
        task = progress.add_task(f"{ds.name} {spec.label}", total=grid.size)
        return grid_search(
            ds,
            spec,
            grid,
            plan,
            jobs=config.jobs,
            seed=config.seed,
            progress=lambda done, total: progress.update(task, completed=done),
        )

    return search


@main.command("grid")
@run_options
@kernel_options
@grid_options
def grid_command(**params: Any) -> None:
    """Mean CV accuracy over a (C, γ) grid; CSV output is a plot-ready heatmap."""

    def body(config: RunConfig, writer: ArtifactWriter, formatter: ReportFormatter) -> None:
        for path in config.datasets:
            ds = _load(config, path)
            with formatter.show_progress() as progress:
                search = _searcher(config, progress, ds)
                results = [search(spec) for spec in config.kernel_specs()]
            for result in results:
                formatter.display_grid(result)
                stem = f"{ds.name}-{_slug(result.kernel_id)}"
                if config.output_format.value == "csv":
                    writer.write_csv(
                        f"{stem}-heatmap.csv", ["C", "gamma", "accuracy"], result.rows()
                    )
                else:
                    writer.write_json(f"{stem}-grid.json", result.to_dict())

    _execute(Command.GRID, params, body)


@main.command("pf")
@run_options
@kernel_options
@grid_options
def pf_command(**params: Any) -> None:
    """P_f stability curves and their areas over a shared α interval."""

    def body(config: RunConfig, writer: ArtifactWriter, formatter: ReportFormatter) -> None:
        for path in config.datasets:
            ds = _load(config, path)
            with formatter.show_progress() as progress:
                search = _searcher(config, progress, ds)
                results = [search(spec) for spec in config.kernel_specs()]
            labels = [r.kernel_id for r in results]
            curves = [pf_curve(r) for r in results]
            aucs = pf_auc(curves)
            formatter.display_pf(labels, curves, aucs)

            if config.output_format.value == "csv":
                for label, curve in zip(labels, curves):
                    writer.write_csv(
                        f"{ds.name}-{_slug(label)}-pf.csv", ["alpha", "probability"], curve.rows()
                    )
                writer.write_csv(f"{ds.name}-auc.csv", ["kernel", "auc"], list(zip(labels, aucs)))
            else:
                writer.write_json(
                    f"{ds.name}-pf.json",
                    {
                        "dataset": ds.name,
                        "curves": {label: c.to_dict() for label, c in zip(labels, curves)},
                        "auc": dict(zip(labels, aucs)),
                    },
                )

    _execute(Command.PF, params, body)


@main.command("compare")
@run_options
@click.option(
    "--k",
    "k",
    type=int,
    multiple=True,
    help="Cluster counts for ckrbf(k) and the per-cluster baseline; repeatable "
    "(default: kernel.k, else 2, 3 and 4)",
)
@click.option("--eps", "epsilon", type=float, help="Covariance regularisation")
@click.option(
    "--mode",
    type=click.Choice(["transductive", "strict"]),
    help="Cluster all features once, or only each training fold",
)
@click.option("--restarts", type=int, help="k-means++ restarts (default: 10)")
@grid_options
def compare_command(**params: Any) -> None:
    """RBF, Mahalanobis RBF, ckrbf(k) and the per-cluster baseline side by side.

    Reports the P_f AUC of every family over the configured grid and the
    share of three-value γ windows (C = 1) where each clustered family beats
    RBF and Mahalanobis RBF.
    """
    params["families"] = ("rbf", "mrbf", "ckrbf", "mkrbf")

    def body(config: RunConfig, writer: ArtifactWriter, formatter: ReportFormatter) -> None:
        specs = config.kernel_specs()
        grid = config.grid_spec()
        for path in config.datasets:
            ds = _load(config, path)
            plan = stratified_kfold(ds, config.folds, config.seed)
            with formatter.show_progress() as progress:
                task = progress.add_task(f"{ds.name} compare", total=grid.size * len(specs))
                table, grids = compare_kernels(
                    ds,
                    specs,
                    grid,
                    plan,
                    jobs=config.jobs,
                    progress=lambda done, total: progress.advance(task),
                )
            formatter.display_comparison(table)

            if config.output_format.value == "csv":
                writer.write_csv(f"{ds.name}-auc.csv", ["kernel", "auc"], table.auc_rows())
                writer.write_csv(
                    f"{ds.name}-wins.csv",
                    ["challenger", "baseline", "win_percentage"],
                    table.win_rows(),
                )
            else:
                data = table.to_dict()
                data["grids"] = {label: r.to_dict() for label, r in grids.items()}
                writer.write_json(f"{ds.name}-compare.json", data)

    _execute(Command.COMPARE, params, body)


if __name__ == "__main__":
    main()
