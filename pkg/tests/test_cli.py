import pytest

from pmbm.cli import main

TINY = "num_steps = 4\nbirths_deaths = 1:4,2:4\nnum_runs = 1\n"


@pytest.fixture
def tiny_cfg(tmp_path):
    path = tmp_path / "tiny.cfg"
    path.write_text(TINY)
    return str(path)


def test_no_arguments_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


def test_validate_filter_and_exit_codes(capsys):
    assert main(["validate", "--filter", "murty"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("[pass] murty:")
    assert "likelihood" not in out


def test_validate_perturbation_fails(capsys):
    assert main(["validate", "--filter", "mbm01", "--perturb", "1e-3"]) == 1
    assert "[FAIL] mbm01:" in capsys.readouterr().out


def test_validate_unknown_filter(capsys):
    assert main(["validate", "--filter", "nope"]) == 2
    assert "no checks match" in capsys.readouterr().err


def test_simulate_writes_deterministic_files(tmp_path, tiny_cfg):
    a, b, c = (str(tmp_path / n) for n in "abc")
    assert main(["simulate", "--config", tiny_cfg, "--seed", "3", "--output", a]) == 0
    assert main(["simulate", "--config", tiny_cfg, "--seed", "3", "--output", b]) == 0
    assert main(["simulate", "--config", tiny_cfg, "--seed", "4", "--output", c]) == 0
    ta = (tmp_path / "a" / "truth.txt").read_bytes()
    tb = (tmp_path / "b" / "truth.txt").read_bytes()
    tc = (tmp_path / "c" / "truth.txt").read_bytes()
    assert ta == tb
    assert ta != tc
    ma = (tmp_path / "a" / "measurements.txt").read_bytes()
    mb = (tmp_path / "b" / "measurements.txt").read_bytes()
    assert ma == mb
    assert ma.count(b"\n") >= 1


def test_track_csv_output(tmp_path, tiny_cfg, capsys):
    sim = str(tmp_path / "sim")
    main(["simulate", "--config", tiny_cfg, "--seed", "0", "--output", sim])
    meas = str(tmp_path / "sim" / "measurements.txt")
    truth = str(tmp_path / "sim" / "truth.txt")
    out = str(tmp_path / "out.csv")
    code = main(
        ["track", meas, "--truth", truth, "--config", tiny_cfg, "--output", out]
    )
    assert code == 0
    lines = (tmp_path / "out.csv").read_text().splitlines()
    assert lines[0] == "step,estimator,ospa,cardinality_estimate,truth_cardinality"
    assert len(lines) == 1 + 4 * 3  # 4 steps x 3 estimators
    first = lines[1].split(",")
    assert first[0] == "1" and first[1] == "1"
    float(first[2])
    # identical rerun produces identical bytes
    out2 = str(tmp_path / "out2.csv")
    main(["track", meas, "--truth", truth, "--config", tiny_cfg, "--output", out2])
    assert (tmp_path / "out.csv").read_bytes() == (tmp_path / "out2.csv").read_bytes()


def test_track_stdout_and_estimator_subset(tmp_path, tiny_cfg, capsys):
    sim = str(tmp_path / "sim")
    main(["simulate", "--config", tiny_cfg, "--seed", "1", "--output", sim])
    capsys.readouterr()
    code = main(
        [
            "track",
            str(tmp_path / "sim" / "measurements.txt"),
            "--truth",
            str(tmp_path / "sim" / "truth.txt"),
            "--config",
            tiny_cfg,
            "--estimators",
            "2",
        ]
    )
    assert code == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 1 + 4
    assert all(row.split(",")[1] == "2" for row in lines[1:])


def test_track_without_truth_errors(tmp_path, tiny_cfg, capsys):
    sim = str(tmp_path / "sim")
    main(["simulate", "--config", tiny_cfg, "--output", sim])
    code = main(
        ["track", str(tmp_path / "sim" / "measurements.txt"), "--config", tiny_cfg]
    )
    assert code == 2
    assert "ground truth" in capsys.readouterr().err


def test_track_missing_file_errors(tiny_cfg, capsys):
    assert main(["track", "/no/such/file.txt", "--config", tiny_cfg]) == 2
    assert "error:" in capsys.readouterr().err


def test_track_dump_density_requires_output(tmp_path, tiny_cfg, capsys):
    sim = str(tmp_path / "sim")
    main(["simulate", "--config", tiny_cfg, "--output", sim])
    code = main(
        [
            "track",
            str(tmp_path / "sim" / "truth.txt"),
            "--config",
            tiny_cfg,
            "--dump-density",
        ]
    )
    assert code == 2


def test_track_dump_density_writes_json(tmp_path, tiny_cfg):
    import json

    sim = str(tmp_path / "sim")
    main(["simulate", "--config", tiny_cfg, "--output", sim])
    out = str(tmp_path / "o.csv")
    code = main(
        [
            "track",
            str(tmp_path / "sim" / "measurements.txt"),
            "--truth",
            str(tmp_path / "sim" / "truth.txt"),
            "--config",
            tiny_cfg,
            "--output",
            out,
            "--dump-density",
        ]
    )
    assert code == 0
    dump = json.loads((tmp_path / "o.csv.density.json").read_text())
    assert len(dump) == 4
    assert set(dump[0]) == {"time", "poisson", "tracks", "globals"}
    assert dump[-1]["time"] == 4


def test_track_empty_measurement_world(tmp_path, tiny_cfg, capsys):
    # a file holding only a truth record: every scan is empty, estimates
    # stay empty, the error saturates at the cutoff
    rec = tmp_path / "only_truth.txt"
    rec.write_text("1 truth 0 150.0 0.0 150.0 0.0\n")
    capsys.readouterr()
    assert main(["track", str(rec), "--config", tiny_cfg]) == 0
    lines = capsys.readouterr().out.splitlines()
    step1 = lines[1].split(",")
    assert step1[2] == "10.000000"
    assert step1[3] == "0" and step1[4] == "1"


def test_benchmark_table_and_csv(tmp_path, tiny_cfg, capsys):
    out = str(tmp_path / "bench.csv")
    code = main(
        ["benchmark", "--config", tiny_cfg, "--runs", "2", "--output", out]
    )
    assert code == 0
    table = capsys.readouterr().out
    assert "p_d" in table and "est1" in table and "est3" in table
    lines = (tmp_path / "bench.csv").read_text().splitlines()
    assert lines[0] == "p_d,clutter_rate,estimator,rms_ospa,runs"
    assert len(lines) == 1 + 3  # one cell, three estimators
    assert lines[1].split(",")[:3] == ["0.9", "10", "1"]
    assert lines[1].split(",")[4] == "2"


def test_benchmark_deterministic(tmp_path, tiny_cfg, capsys):
    a, b = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
    main(["benchmark", "--config", tiny_cfg, "--output", a])
    main(["benchmark", "--config", tiny_cfg, "--output", b])
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_benchmark_paper_grid(tmp_path, tiny_cfg, capsys):
    out = str(tmp_path / "grid.csv")
    code = main(
        ["benchmark", "--config", tiny_cfg, "--paper", "--output", out]
    )
    assert code == 0
    lines = (tmp_path / "grid.csv").read_text().splitlines()
    # 5 detection probabilities x 3 clutter rates x 3 estimators
    assert len(lines) == 1 + 15 * 3
    cells = {tuple(row.split(",")[:2]) for row in lines[1:]}
    assert ("0.95", "10") in cells and ("0.6", "20") in cells


def test_output_to_unwritable_path(tmp_path, tiny_cfg, capsys):
    sim = str(tmp_path / "sim")
    main(["simulate", "--config", tiny_cfg, "--output", sim])
    code = main(
        [
            "track",
            str(tmp_path / "sim" / "truth.txt"),
            "--config",
            tiny_cfg,
            "--output",
            str(tmp_path / "missing-dir" / "x.csv"),
        ]
    )
    assert code == 2
