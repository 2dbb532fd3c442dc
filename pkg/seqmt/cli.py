"""Command line entry point of the landmark localization experiments."""

# Standard Library Imports
from __future__ import annotations

import argparse
import concurrent.futures
import csv
import hashlib
import json
import logging
import os
import subprocess
import sys
import time
from datetime import datetime, timezone
from functools import wraps
from pathlib import Path
from typing import Any, Callable, Sequence, TextIO

# Third-Party Imports
import numpy as np

# Local Imports
from seqmt import __version__
from seqmt.config import Regime, RunConfig, Scale, Task
from seqmt.container import (
    load_split,
    load_weights,
    save_split,
    save_weights,
    split_paths,
)
from seqmt.datasets import (
    DEFAULT_LANDMARK_SUBSET,
    DatasetSplit,
    class_histogram,
    gen_blocks,
    gen_shapes,
    mask_landmarks,
)
from seqmt.errors import EXIT_OK, ConfigError, DataError, SeqMTError
from seqmt.evaluation import (
    RESULT_COLUMNS,
    EvalReport,
    ami,
    coordinate_independence,
    eval_classes,
    eval_landmarks,
    ground_truth,
    result_row,
    summarize_results,
)
from seqmt.gradcheck import assert_passed, run_suite
from seqmt.models import Network, build, config_from_run
from seqmt.render import save_overlays
from seqmt.report import Report, Table, Text
from seqmt.training import HISTORY_COLUMNS, TrainConfig, fit_attributes_on_gt, train

logger = logging.getLogger(__name__)

PREFIX = "SEQMT"
CHECKPOINT_FILE = "model.lmw1"
CHECKPOINT_CONFIG_FILE = "model.cfg"
HISTORY_FILE = "history.csv"
MANIFEST_FILE = "manifest.json"
RESULTS_FILE = "results.csv"
RUN_LOG_FILE = "train.log"
THREADS_ENV = "LMK_THREADS"
CHECKPOINT_KEYS = (
    "model", "scale", "head", "beta", "task", "dataset", "blocks_landmark_subset"
)
EVAL_COLUMNS = ("checkpoint", "split", "pixel_error", "percent_error", "class_acc")
DEFAULT_GRID_REGIMES = ("L", "L+A", "L+ELT", "L+ELT+A")
DEFAULT_GRID_FRACTIONS = (0.01, 0.05, 0.1, 0.2, 0.5, 1.0)
DEFAULT_GRID_SEEDS = (0, 1, 2, 3, 4)


def measure_duration(f: Callable) -> Callable:
    """Report command duration.

    Args:
        f (Callable): The function to decorate.

    Returns:
        Callable: The wrapped function.
    """

    @wraps(f)
    def wrapped_f(self: Commands, args: argparse.Namespace, *a, **kw) -> int:
        start_time = time.time()
        result = f(self, args, *a, **kw)
        duration = time.time() - start_time
        f_name = f.__name__.removeprefix("cmd_").replace("_", "-")
        self.respond_info(f"{f_name} took {duration:0.1f} seconds")
        return result

    return wrapped_f


def exit_on_error(f: Callable) -> Callable:
    """Decorator turning library errors into the command's exit code.

    The error message is reported and the exit code of the error family is
    returned instead of propagating the exception.

    Args:
        f (Callable): The function to wrap.

    Returns:
        Callable: The wrapped function.
    """

    @wraps(f)
    def wrapped_f(self: Commands, args: argparse.Namespace, *a, **kw) -> int:
        try:
            return f(self, args, *a, **kw)
        except SeqMTError as e:
            self.respond_error(f"{e.__class__.__name__}: {e}")
            return e.exit_code

    return wrapped_f


def worker_count() -> int:
    """Return the grid worker pool size, ``LMK_THREADS`` or the CPU count.

    Raises:
        ConfigError: ``LMK_THREADS`` is not a positive integer.
    """
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return os.cpu_count() or 1
    try:
        value = int(raw)
    except ValueError:
        value = 0
    if value < 1:
        raise ConfigError(f"{THREADS_ENV} should be a positive integer, not '{raw}'")
    return value


def git_describe() -> str:
    """Return ``git describe`` of the source tree, or ``unknown``."""
    try:
        completed = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            check=True,
        )
    except (OSError, subprocess.CalledProcessError):
        return "unknown"
    return completed.stdout.strip() or "unknown"


def file_sha256(paths: Sequence[Path]) -> str:
    """Return the SHA-256 of the concatenated bytes of the given files."""
    digest = hashlib.sha256()
    for path in paths:
        digest.update(Path(path).read_bytes())
    return digest.hexdigest()


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def write_manifest(path: Path, manifest: dict[str, Any]) -> None:
    """Write the run manifest atomically."""
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    os.replace(tmp, path)


def write_csv(path: Path, columns: Sequence[str], rows: Sequence[dict[str, str]]) -> None:
    """Write rows with a header, replacing the file."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=list(columns), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def append_csv(path: Path, columns: Sequence[str], row: dict[str, str]) -> None:
    """Append one row, writing the header first if the file is new."""
    is_new = not path.exists()
    with open(path, "a", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=list(columns), lineterminator="\n")
        if is_new:
            writer.writeheader()
        writer.writerow(row)


def read_csv(path: Path) -> list[dict[str, str]]:
    """Read the rows of a CSV file with a header.

    Raises:
        DataError: The file does not exist.
    """
    if not path.is_file():
        raise DataError(f"file not found: {path}")
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def _refuse_existing(paths: Sequence[Path], force: bool) -> None:
    existing = [str(p) for p in paths if p.exists()]
    if existing and not force:
        raise DataError(f"refusing to overwrite {existing}, pass --force to replace")


def _checkpoint_config(run_config: RunConfig) -> RunConfig:
    snapshot = run_config.snapshot()
    return RunConfig({k: v for k, v in snapshot.items() if k in CHECKPOINT_KEYS})


def check_landmark_subset(run_config: RunConfig, split: DatasetSplit) -> None:
    """Check ``blocks_landmark_subset`` against the landmarks of a Blocks split.

    Raises:
        ConfigError: The subset names a different number of landmarks.
    """
    if split.name != "blocks" or "blocks_landmark_subset" not in run_config:
        return
    subset = run_config.getintlist("blocks_landmark_subset")
    if len(subset) != split.num_landmarks:
        raise ConfigError(
            f"{run_config.source}: blocks_landmark_subset {subset} names "
            f"{len(subset)} landmarks, the dataset has {split.num_landmarks}"
        )


def build_network(run_config: RunConfig, split: DatasetSplit) -> Network:
    """Build the network a run configuration asks for, sized to a dataset."""
    check_landmark_subset(run_config, split)
    net_config = config_from_run(
        run_config,
        num_landmarks=split.num_landmarks,
        num_classes=split.num_classes,
        image_size=split.image_size[0],
    )
    return build(net_config, seed=run_config.getint("seed", 0))


def load_checkpoint(directory: str | Path, split: DatasetSplit) -> Network:
    """Rebuild a trained network from ``model.cfg`` and ``model.lmw1``.

    Raises:
        DataError: A file is missing or the weights do not fit the network.
    """
    directory = Path(directory)
    run_config = RunConfig.from_file(directory / CHECKPOINT_CONFIG_FILE)
    net = build_network(run_config, split)
    net.load_state_dict(load_weights(directory / CHECKPOINT_FILE))
    net.eval()
    return net


def evaluate_test_split(
    net: Network, split: DatasetSplit, regime: Regime, normalizer: None | float = None
) -> EvalReport:
    """Evaluate a trained network on the test split."""
    report = eval_landmarks(net, split.test, normalizer)
    if regime.uses_attributes and net.config.task is Task.Classification:
        report.class_accuracy = eval_classes(net, split.test)
    return report


def run_training(
    run_config: RunConfig, data_dir: str | Path, out_dir: str | Path, force: bool = False
) -> dict[str, str]:
    """Train one network and write its checkpoint, history and manifest.

    Args:
        run_config (RunConfig): The run configuration.
        data_dir (str | Path): Directory of the ``.lmk`` files.
        out_dir (str | Path): Output directory.
        force (bool): Overwrite an existing checkpoint.

    Returns:
        dict[str, str]: The ``RESULT_COLUMNS`` row of the run.
    """
    out_dir = Path(out_dir)
    dataset = run_config.get("dataset", "blocks")
    data_files = list(split_paths(data_dir, dataset).values())
    _refuse_existing([out_dir / CHECKPOINT_FILE], force)
    train_config = TrainConfig.from_run_config(run_config)
    split = load_split(data_dir, dataset)
    masked = mask_landmarks(split, train_config.fraction, train_config.seed)
    net = build_network(run_config, masked)

    out_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = out_dir / MANIFEST_FILE
    manifest = {
        "version": __version__,
        "config": run_config.snapshot(),
        "dataset": {"name": dataset, "files": [str(p) for p in data_files],
                    "sha256": file_sha256(data_files)},
        "git_describe": git_describe(),
        "started": _now(),
        "finished": None,
        "outputs": {
            "checkpoint": str(out_dir / CHECKPOINT_FILE),
            "history": str(out_dir / HISTORY_FILE),
        },
    }
    write_manifest(manifest_path, manifest)

    net, history = train(train_config, masked, net)
    write_csv(out_dir / HISTORY_FILE, HISTORY_COLUMNS, history.to_rows())
    save_weights(out_dir / CHECKPOINT_FILE, net.state_dict())
    (out_dir / CHECKPOINT_CONFIG_FILE).write_text(
        _checkpoint_config(run_config).to_text(), encoding="utf-8"
    )
    report = evaluate_test_split(net, masked, train_config.regime)
    report.epoch = history.best_epoch
    report.seed = train_config.seed
    row = result_row(train_config.regime, train_config.fraction, train_config.seed, report)

    manifest["finished"] = _now()
    write_manifest(manifest_path, manifest)
    return row


def _grid_worker(job: tuple[str, str, str, bool]) -> dict[str, str]:
    """Run one grid job in a worker process with its own log file."""
    config_text, data_dir, run_dir, force = job
    Path(run_dir).mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(Path(run_dir) / RUN_LOG_FILE, mode="w", encoding="utf-8")
    handler.setFormatter(logging.Formatter("%(asctime)s %(name)s %(levelname)s: %(message)s"))
    root = logging.getLogger()
    root.addHandler(handler)
    try:
        run_config = RunConfig.from_string(config_text, source=str(run_dir))
        return run_training(run_config, data_dir, run_dir, force)
    finally:
        root.removeHandler(handler)
        handler.close()


def grid_jobs(
    run_config: RunConfig, data_dir: str | Path, out_dir: str | Path, force: bool
) -> list[tuple[str, str, str, bool]]:
    """Expand the ``grid_*`` keys into one job per (regime, fraction, seed)."""
    regimes = run_config.getenumlist(
        "grid_regimes", Regime, list(DEFAULT_GRID_REGIMES)
    )
    fractions = run_config.getfloatlist("grid_fractions", list(DEFAULT_GRID_FRACTIONS))
    seeds = run_config.getintlist("grid_seeds", list(DEFAULT_GRID_SEEDS))
    jobs = []
    for regime in regimes:
        for fraction in fractions:
            for seed in seeds:
                job_config = RunConfig(run_config.snapshot(), source=run_config.source)
                job_config.set("regime", regime.value)
                job_config.set("fraction", fraction)
                job_config.set("seed", seed)
                run_dir = Path(out_dir) / f"{regime.value}_f{fraction:g}_s{seed}"
                jobs.append((job_config.to_text(), str(data_dir), str(run_dir), force))
    return jobs


def reduce_rows(rows: Sequence[dict[str, str]]) -> list[dict[str, str]]:
    """Order result rows by (regime, fraction, seed)."""
    return sorted(
        rows, key=lambda r: (r["regime"], float(r["fraction"]), int(r["seed"]))
    )


class Commands:
    """The command line commands.

    Args:
        debug (bool): Enable debug responses.
        stream (None | TextIO): Where responses go. Default is stdout.
    """

    def __init__(self, debug: bool = False, stream: None | TextIO = None) -> None:
        self.debug = debug
        self.stream = stream if stream is not None else sys.stdout
        self.commands: dict[str, Callable[[argparse.Namespace], int]] = {}
        self.register_commands()

    def respond_info(self, msg: str) -> None:
        """Respond info.

        Args:
            msg (str): The info message.
        """
        print(f"{PREFIX}: {msg}", file=self.stream)

    def respond_debug(self, msg: str) -> None:
        """Respond debug, if debugging is enabled.

        Args:
            msg (str): The debug message.
        """
        if not self.debug:
            return
        print(f"{PREFIX}: {msg}", file=self.stream)

    def respond_error(self, msg: str) -> None:
        """Respond an error on stderr."""
        print(f"{PREFIX}: error: {msg}", file=sys.stderr)

    def respond_report(self, report: Report) -> None:
        """Print a report below the prefix."""
        print(report.to_text(), file=self.stream)

    def register_commands(self) -> None:
        """Register the sub commands."""
        self.commands["generate"] = self.cmd_generate
        self.commands["train"] = self.cmd_train
        self.commands["eval"] = self.cmd_eval
        self.commands["gradcheck"] = self.cmd_gradcheck
        self.commands["render"] = self.cmd_render
        self.commands["ami"] = self.cmd_ami
        self.commands["summarize"] = self.cmd_summarize
        self.commands["attr-upper-bound"] = self.cmd_attr_upper_bound

    def run(self, args: argparse.Namespace) -> int:
        """Run the sub command named in the arguments."""
        return self.commands[args.command](args)

    def _load_run_config(self, args: argparse.Namespace) -> RunConfig:
        run_config = RunConfig.from_file(args.config)
        for key in ("regime", "fraction", "seed", "epochs", "scale"):
            value = getattr(args, key, None)
            if value is not None:
                run_config.set(key, value)
        if run_config.getboolean("debug", False):
            self.debug = True
        self.respond_debug(f"config {run_config.snapshot()}")
        return run_config

    @exit_on_error
    @measure_duration
    def cmd_generate(self, args: argparse.Namespace) -> int:
        """Generate a dataset and write its three split files.

        Args:
            args (argparse.Namespace): The parsed arguments.

        Returns:
            int: The exit code.
        """
        paths = list(split_paths(args.out, args.kind).values())
        _refuse_existing(paths, args.force)
        landmark_subset = args.landmark_subset
        if landmark_subset is None and args.config:
            landmark_subset = RunConfig.from_file(args.config).getintlist(
                "blocks_landmark_subset", list(DEFAULT_LANDMARK_SUBSET)
            )
        scale = Scale.to_scale(args.scale)
        if args.kind == "shapes":
            split = gen_shapes(args.n, args.seed)
        else:
            n_eval = args.n // 4 if scale is Scale.Small else None
            split = gen_blocks(
                args.n,
                args.seed,
                n_valid=n_eval,
                n_test=n_eval,
                image_size=40 if scale is Scale.Small else 60,
                landmark_subset=(
                    DEFAULT_LANDMARK_SUBSET if landmark_subset is None else landmark_subset
                ),
            )
        save_split(split, args.out)
        table = Table(["split", "samples", "file", "class histogram"])
        for (name, samples), path in zip(split.splits().items(), paths):
            histogram = class_histogram(samples, split.num_classes)
            table.add_row(name, len(samples), path, " ".join(str(c) for c in histogram))
        self.respond_info(f"generated {args.kind} with seed {args.seed}")
        self.respond_report(Report(f"dataset {args.kind}", [table]))
        return EXIT_OK

    @exit_on_error
    @measure_duration
    def cmd_train(self, args: argparse.Namespace) -> int:
        """Train one configuration, or the whole regime grid with ``--grid``.

        Args:
            args (argparse.Namespace): The parsed arguments.

        Returns:
            int: The exit code.
        """
        run_config = self._load_run_config(args)
        out_dir = Path(args.out)
        if not args.grid:
            row = run_training(run_config, args.data, out_dir, args.force)
            write_csv(out_dir / RESULTS_FILE, RESULT_COLUMNS, [row])
            self.respond_info(
                f"regime {row['regime']}, fraction {row['fraction']}, seed {row['seed']}: "
                f"test pixel error {row['test_pixel_error']}, "
                f"class accuracy {row['test_class_acc'] or '-'}"
            )
            return EXIT_OK

        jobs = grid_jobs(run_config, args.data, out_dir, args.force)
        workers = min(worker_count(), len(jobs))
        self.respond_info(f"running {len(jobs)} grid jobs on {workers} workers")
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_grid_worker, jobs))
        rows = reduce_rows(rows)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_csv(out_dir / RESULTS_FILE, RESULT_COLUMNS, rows)
        self.respond_report(_summary_report(rows))
        return EXIT_OK

    @exit_on_error
    @measure_duration
    def cmd_eval(self, args: argparse.Namespace) -> int:
        """Evaluate a checkpoint and append a row to a CSV file.

        Args:
            args (argparse.Namespace): The parsed arguments.

        Returns:
            int: The exit code.
        """
        checkpoint = Path(args.checkpoint)
        run_config = RunConfig.from_file(checkpoint / CHECKPOINT_CONFIG_FILE)
        split = load_split(args.data, args.dataset or run_config.get("dataset", "blocks"))
        net = load_checkpoint(checkpoint, split)
        samples = split.splits()[args.split]
        report = eval_landmarks(net, samples, args.normalizer)
        if net.config.task is Task.Classification:
            report.class_accuracy = eval_classes(net, samples)
        row = {
            "checkpoint": str(checkpoint),
            "split": args.split,
            "pixel_error": repr(report.mean_error),
            "percent_error": (
                "" if report.normalized_error is None else repr(report.normalized_error)
            ),
            "class_acc": "" if report.class_accuracy is None else repr(report.class_accuracy),
        }
        if args.out:
            append_csv(Path(args.out), EVAL_COLUMNS, row)
        table = Table(["landmark", "pixel error"])
        for index, error in enumerate(report.per_landmark):
            table.add_row(index, error)
        table.add_row("mean", report.mean_error)
        widgets = [table]
        if report.normalized_error is not None:
            widgets.append(Text(f"normalized error: {report.normalized_error:.4f} %"))
        if report.class_accuracy is not None:
            widgets.append(Text(f"class accuracy: {report.class_accuracy:.4f}"))
        self.respond_report(Report(f"{checkpoint} on {args.split}", widgets))
        return EXIT_OK

    @exit_on_error
    @measure_duration
    def cmd_gradcheck(self, args: argparse.Namespace) -> int:
        """Check every op and the composite objective against finite differences.

        Args:
            args (argparse.Namespace): The parsed arguments.

        Returns:
            int: The exit code, 4 if any check fails.
        """
        results = run_suite(seed=args.seed, eps=args.eps, max_coordinates=args.max_coordinates)
        table = Table(["check", "max rel error", "worst coordinate", "status"])
        for result in results:
            table.add_row(
                result.name,
                f"{result.max_error:.3e}",
                f"{result.worst_parameter}{list(result.worst_index)}",
                "ok" if result.passed(args.tolerance) else "FAIL",
            )
        self.respond_report(Report("gradient check", [table]))
        assert_passed(results, args.tolerance)
        self.respond_info(f"all {len(results)} gradient checks passed")
        return EXIT_OK

    @exit_on_error
    @measure_duration
    def cmd_render(self, args: argparse.Namespace) -> int:
        """Write landmark overlays of a checkpoint's predictions.

        Args:
            args (argparse.Namespace): The parsed arguments.

        Returns:
            int: The exit code.
        """
        checkpoint = Path(args.checkpoint)
        run_config = RunConfig.from_file(checkpoint / CHECKPOINT_CONFIG_FILE)
        split = load_split(args.data, args.dataset or run_config.get("dataset", "blocks"))
        net = load_checkpoint(checkpoint, split)
        paths = save_overlays(net, split.splits()[args.split], args.n, args.out)
        self.respond_info(f"wrote {len(paths)} overlays to {args.out}")
        return EXIT_OK

    @exit_on_error
    @measure_duration
    def cmd_ami(self, args: argparse.Namespace) -> int:
        """Score how much the landmarks explain the class attribute.

        Args:
            args (argparse.Namespace): The parsed arguments.

        Returns:
            int: The exit code.
        """
        split = load_split(args.data, args.dataset)
        samples = split.splits()[args.split]
        landmarks = ground_truth(samples)
        labels = np.array([s.label for s in samples])
        shuffled = np.random.default_rng(args.seed).permutation(labels)
        table = Table(["attribute", "mean AMI", "max AMI"])
        table.add_row("class", *ami(labels, landmarks, args.bins))
        table.add_row("class (shuffled)", *ami(shuffled, landmarks, args.bins))
        independence = coordinate_independence(landmarks, args.bins)
        self.respond_report(
            Report(
                f"AMI on {args.dataset} {args.split}",
                [table, Text(f"mean AMI(x; y) over landmarks: {independence:.4f}")],
            )
        )
        return EXIT_OK

    @exit_on_error
    @measure_duration
    def cmd_summarize(self, args: argparse.Namespace) -> int:
        """Print medians over seeds of a grid's result rows.

        Args:
            args (argparse.Namespace): The parsed arguments.

        Returns:
            int: The exit code.
        """
        path = Path(args.results)
        if path.is_dir():
            path = path / RESULTS_FILE
        rows = read_csv(path)
        self.respond_report(_summary_report(rows))
        return EXIT_OK

    @exit_on_error
    @measure_duration
    def cmd_attr_upper_bound(self, args: argparse.Namespace) -> int:
        """Fit the attribute branch on GT landmarks and report test accuracy.

        Args:
            args (argparse.Namespace): The parsed arguments.

        Returns:
            int: The exit code.
        """
        run_config = self._load_run_config(args)
        split = load_split(args.data, run_config.get("dataset", "blocks"))
        net = build_network(run_config, split)
        _, accuracy = fit_attributes_on_gt(
            net, split, TrainConfig.from_run_config(run_config)
        )
        self.respond_info(f"class accuracy from GT landmarks: {accuracy:.4f}")
        return EXIT_OK


def _summary_report(rows: Sequence[dict[str, str]]) -> Report:
    table = Table(["regime", "fraction", "runs", "median pixel error", "median class acc"])
    for entry in summarize_results(rows):
        table.add_row(
            entry["regime"],
            f"{entry['fraction']:g}",
            entry["runs"],
            entry["median_test_pixel_error"],
            entry["median_test_class_acc"],
        )
    return Report("results, median over seeds", [table])


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, not '{text}'") from e


def build_parser() -> argparse.ArgumentParser:
    """Return the argument parser of all sub commands."""
    parser = argparse.ArgumentParser(
        prog="seqmt", description="Semi-supervised landmark localization experiments."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--debug", action="store_true", help="enable debug output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a synthetic dataset")
    p.add_argument("kind", choices=["shapes", "blocks"])
    p.add_argument("--n", type=int, default=3200, help="training samples")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="data")
    p.add_argument("--scale", default="full", choices=[s.value for s in Scale])
    p.add_argument(
        "--landmark-subset", type=_int_list,
        help="blocks carrying landmarks, 0 is the triangle, default from --config",
    )
    p.add_argument("--config", help="run config whose blocks_landmark_subset to use")
    p.add_argument("--force", action="store_true", help="overwrite existing files")

    p = sub.add_parser("train", help="train one configuration or the regime grid")
    p.add_argument("config")
    p.add_argument("--data", default="data")
    p.add_argument("--out", default="runs")
    p.add_argument("--grid", action="store_true", help="run every regime, fraction and seed")
    p.add_argument("--regime")
    p.add_argument("--fraction", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--scale", choices=[s.value for s in Scale])
    p.add_argument("--force", action="store_true", help="overwrite an existing checkpoint")

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("checkpoint", help="directory holding model.lmw1 and model.cfg")
    p.add_argument("--data", default="data")
    p.add_argument("--dataset", help="dataset name, default is the checkpoint's")
    p.add_argument("--split", default="test", choices=["train", "valid", "test"])
    p.add_argument("--normalizer", type=float, help="report error in percent of this")
    p.add_argument("--out", help="CSV file to append the row to")

    p = sub.add_parser("gradcheck", help="check gradients against finite differences")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps", type=float, default=1e-6)
    p.add_argument("--max-coordinates", type=int, default=16)
    p.add_argument("--tolerance", type=float, default=1e-4)

    p = sub.add_parser("render", help="write landmark overlays")
    p.add_argument("checkpoint")
    p.add_argument("--data", default="data")
    p.add_argument("--dataset")
    p.add_argument("--split", default="test", choices=["train", "valid", "test"])
    p.add_argument("--n", type=int, default=16)
    p.add_argument("--out", default="overlays")

    p = sub.add_parser("ami", help="score landmarks against the class attribute")
    p.add_argument("--data", default="data")
    p.add_argument("--dataset", default="blocks")
    p.add_argument("--split", default="train", choices=["train", "valid", "test"])
    p.add_argument("--bins", type=int, default=20)
    p.add_argument("--seed", type=int, default=0, help="seed of the shuffled baseline")

    p = sub.add_parser("summarize", help="median results over seeds")
    p.add_argument("results", help="results.csv or a grid output directory")

    p = sub.add_parser(
        "attr-upper-bound", help="class accuracy reachable from GT landmarks"
    )
    p.add_argument("config")
    p.add_argument("--data", default="data")
    p.add_argument("--seed", type=int)
    p.add_argument("--epochs", type=int)
    return parser


def main(argv: None | Sequence[str] = None, stream: None | TextIO = None) -> int:
    """Run the command line.

    Args:
        argv (None | Sequence[str]): The arguments. Default is sys.argv.
        stream (None | TextIO): Where responses go. Default is stdout.

    Returns:
        int: The exit code.
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.debug else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s: %(message)s",
    )
    return Commands(debug=args.debug, stream=stream).run(args)


if __name__ == "__main__":
    sys.exit(main())
