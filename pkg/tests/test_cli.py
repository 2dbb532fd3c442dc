"""Command line related tests are situated here."""

# Standard Library Imports
import io

# Third-Party Imports
import pytest

# Local Imports
from seqmt.cli import (
    RESULTS_FILE,
    grid_jobs,
    main,
    reduce_rows,
    worker_count,
    write_csv,
)
from seqmt.config import RunConfig
from seqmt.container import load_split
from seqmt.errors import EXIT_CONFIG_ERROR, EXIT_DATA_ERROR, EXIT_OK, ConfigError
from seqmt.evaluation import RESULT_COLUMNS


def _run(*argv):
    stream = io.StringIO()
    code = main([str(a) for a in argv], stream=stream)
    return code, stream.getvalue()


def test_generate_writes_three_split_files(tmp_path):
    """generate writes one file per split and reports the class histogram."""
    code, output = _run("generate", "shapes", "--n", 4, "--out", tmp_path)
    assert code == EXIT_OK
    assert sorted(p.name for p in tmp_path.iterdir()) == [
        "shapes.test.lmk",
        "shapes.train.lmk",
        "shapes.valid.lmk",
    ]
    assert "SEQMT: generated shapes with seed 0" in output
    assert "SEQMT: generate took " in output


def test_generate_is_deterministic(tmp_path):
    """Two invocations with the same seed write the same bytes."""
    _run("generate", "shapes", "--n", 4, "--seed", 3, "--out", tmp_path / "a")
    _run("generate", "shapes", "--n", 4, "--seed", 3, "--out", tmp_path / "b")
    for name in ("train", "valid", "test"):
        first = (tmp_path / "a" / f"shapes.{name}.lmk").read_bytes()
        assert first == (tmp_path / "b" / f"shapes.{name}.lmk").read_bytes()


def test_generate_refuses_to_overwrite(tmp_path, capsys):
    """Existing files are only replaced with --force."""
    assert _run("generate", "shapes", "--n", 4, "--out", tmp_path)[0] == EXIT_OK
    code, _ = _run("generate", "shapes", "--n", 4, "--out", tmp_path)
    assert code == EXIT_DATA_ERROR
    assert "SEQMT: error: DataError: refusing to overwrite [" in capsys.readouterr().err
    assert _run("generate", "shapes", "--n", 4, "--out", tmp_path, "--force")[0] == EXIT_OK


def test_unknown_config_key_is_a_config_error(tmp_path, capsys):
    """A config file with an unknown key exits with code 2."""
    config = tmp_path / "run.cfg"
    config.write_text("model = blocks-seqmt\nbogus = 1\n", encoding="utf-8")
    code, _ = _run("train", config, "--data", tmp_path, "--out", tmp_path / "runs")
    assert code == EXIT_CONFIG_ERROR
    assert "unknown config key(s) ['bogus']" in capsys.readouterr().err


def test_unknown_regime_is_a_config_error(tmp_path, capsys):
    """A config value naming no regime exits with code 2 and names the key."""
    config = tmp_path / "run.cfg"
    config.write_text("model = blocks-seqmt\nregime = bogus\n", encoding="utf-8")
    code, _ = _run("train", config, "--data", tmp_path, "--out", tmp_path / "runs")
    assert code == EXIT_CONFIG_ERROR
    assert (
        f"SEQMT: error: ConfigError: {config}: config key 'regime' should be one of "
        "['L', 'LA', 'LELT', 'LELTA', 'A', 'L+A', 'L+ELT', 'L+ELT+A'], not 'bogus'"
        in capsys.readouterr().err
    )


def test_unknown_scale_is_a_config_error(tmp_path, capsys):
    """A bad network key is reported as a config error once the data is loaded."""
    _run("generate", "shapes", "--n", 4, "--out", tmp_path)
    config = tmp_path / "run.cfg"
    config.write_text(
        "model = shapes-seqmt\ndataset = shapes\nregime = L\nscale = huge\n",
        encoding="utf-8",
    )
    code, _ = _run("train", config, "--data", tmp_path, "--out", tmp_path / "runs")
    assert code == EXIT_CONFIG_ERROR
    assert (
        f"{config}: config key 'scale' should be one of "
        "['Full', 'Small', 'full', 'small'], not 'huge'" in capsys.readouterr().err
    )


def test_generate_reads_landmark_subset_from_config(tmp_path):
    """generate --config takes blocks_landmark_subset from the run config."""
    config = tmp_path / "run.cfg"
    config.write_text("blocks_landmark_subset = 1, 5\n", encoding="utf-8")
    code, _ = _run(
        "generate", "blocks", "--n", 15, "--out", tmp_path, "--config", config
    )
    assert code == EXIT_OK
    assert load_split(tmp_path, "blocks").num_landmarks == 2


def test_landmark_subset_must_match_the_dataset(tmp_path, capsys):
    """Training refuses a blocks_landmark_subset the loaded data was not made with."""
    _run("generate", "blocks", "--n", 15, "--out", tmp_path, "--landmark-subset", "1,5")
    config = tmp_path / "run.cfg"
    config.write_text(
        "model = blocks-seqmt\nregime = L\nblocks_landmark_subset = 0, 1, 2\n",
        encoding="utf-8",
    )
    code, _ = _run("train", config, "--data", tmp_path, "--out", tmp_path / "runs")
    assert code == EXIT_CONFIG_ERROR
    assert (
        f"{config}: blocks_landmark_subset [0, 1, 2] names 3 landmarks, "
        "the dataset has 2" in capsys.readouterr().err
    )
    assert not (tmp_path / "runs").exists()


def test_missing_dataset_is_a_data_error(tmp_path, capsys):
    """Training on data that was never generated exits with code 3."""
    config = tmp_path / "run.cfg"
    config.write_text("model = shapes-seqmt\ndataset = shapes\nregime = A\n", encoding="utf-8")
    code, _ = _run("train", config, "--data", tmp_path, "--out", tmp_path / "runs")
    assert code == EXIT_DATA_ERROR
    assert (
        f"SEQMT: error: DataError: file not found: {tmp_path / 'shapes.train.lmk'}"
        in capsys.readouterr().err
    )


def test_gradcheck_command():
    """The gradient check suite passes from the command line."""
    code, output = _run("gradcheck", "--max-coordinates", 4)
    assert code == EXIT_OK
    assert "gradient check" in output
    assert "SEQMT: all 12 gradient checks passed" in output


def test_ami_command(tmp_path):
    """ami scores the class attribute and its shuffled baseline."""
    _run("generate", "shapes", "--n", 40, "--out", tmp_path)
    code, output = _run(
        "ami", "--data", tmp_path, "--dataset", "shapes", "--split", "train", "--bins", 5
    )
    assert code == EXIT_OK
    assert "AMI on shapes train" in output
    assert "class (shuffled)" in output
    assert "mean AMI(x; y) over landmarks: " in output


def test_summarize_command(tmp_path):
    """summarize prints medians over seeds of a results file."""
    rows = [
        {"regime": "L", "fraction": "0.5", "seed": str(seed), "epoch": "3",
         "test_pixel_error": error, "test_class_acc": ""}
        for seed, error in enumerate(["1.0", "3.0", "2.0"])
    ]
    write_csv(tmp_path / RESULTS_FILE, RESULT_COLUMNS, rows)
    code, output = _run("summarize", tmp_path)
    assert code == EXIT_OK
    assert "results, median over seeds" in output
    line = next(line for line in output.splitlines() if line.startswith("L "))
    assert line.split() == ["L", "0.5", "3", "2.0000", "-"]


def test_summarize_missing_file(tmp_path, capsys):
    """A missing results file is a data error naming the path."""
    code, _ = _run("summarize", tmp_path)
    assert code == EXIT_DATA_ERROR
    assert (
        f"SEQMT: error: DataError: file not found: {tmp_path / RESULTS_FILE}"
        in capsys.readouterr().err
    )


def test_worker_count(monkeypatch):
    """LMK_THREADS caps the worker pool."""
    monkeypatch.setenv("LMK_THREADS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("LMK_THREADS", "many")
    with pytest.raises(ConfigError) as cm:
        worker_count()
    assert str(cm.value) == "LMK_THREADS should be a positive integer, not 'many'"
    monkeypatch.delenv("LMK_THREADS")
    assert worker_count() >= 1


def test_grid_jobs_expand_every_combination(tmp_path):
    """One job per (regime, fraction, seed), each in its own directory."""
    run_config = RunConfig.from_string(
        "regime = L\ngrid_regimes = L, L+ELT\ngrid_fractions = 0.05, 1.0\ngrid_seeds = 7\n"
    )
    jobs = grid_jobs(run_config, tmp_path, tmp_path / "runs", False)
    assert [job[2] for job in jobs] == [
        str(tmp_path / "runs" / name)
        for name in ("L_f0.05_s7", "L_f1_s7", "L+ELT_f0.05_s7", "L+ELT_f1_s7")
    ]
    job_config = RunConfig.from_string(jobs[2][0])
    assert job_config.get("regime") == "L+ELT"
    assert job_config.getfloat("fraction") == 0.05
    assert job_config.getint("seed") == 7


def test_grid_jobs_reject_unknown_regime(tmp_path):
    """A bad grid_regimes entry fails before any worker starts."""
    run_config = RunConfig.from_string("grid_regimes = L, L+BOGUS\n")
    with pytest.raises(ConfigError) as cm:
        grid_jobs(run_config, tmp_path, tmp_path / "runs", False)
    assert str(cm.value) == (
        "<string>: config key 'grid_regimes' should be a list of "
        "['L', 'LA', 'LELT', 'LELTA', 'A', 'L+A', 'L+ELT', 'L+ELT+A'], not 'L, L+BOGUS'"
    )


def test_reduce_rows_sorts_by_regime_fraction_and_seed():
    """Rows from the worker pool are ordered deterministically."""
    rows = [
        {"regime": "L+ELT", "fraction": "0.05", "seed": "0"},
        {"regime": "L", "fraction": "1.0", "seed": "1"},
        {"regime": "L", "fraction": "1.0", "seed": "0"},
        {"regime": "L", "fraction": "0.05", "seed": "2"},
    ]
    ordered = reduce_rows(rows)
    assert [(r["regime"], r["fraction"], r["seed"]) for r in ordered] == [
        ("L", "0.05", "2"),
        ("L", "1.0", "0"),
        ("L", "1.0", "1"),
        ("L+ELT", "0.05", "0"),
    ]
