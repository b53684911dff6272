import numpy as np
import pytest

from mpemba import cli
from mpemba.errors import ConfigError


def read_csv(path):
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    data = np.array([[float(x) for x in l.split(",")] for l in lines[1:]])
    return header, data


def test_empty_config_lists_missing_keys(capsys):
    assert cli.main(["dfs"]) == cli.EXIT_CONFIG
    err = capsys.readouterr().err
    for key in ("L", "Jz", "Gamma", "mu", "T", "t_max", "dt"):
        assert key in err


def test_unknown_key_rejected(tmp_path):
    with pytest.raises(ConfigError, match="bogus"):
        cli.build_config("dfs", {"bogus": "1"})
    assert cli.main(["dfs", "--preset", "--bogus", "1", "--out", str(tmp_path)]) == cli.EXIT_CONFIG


def test_bad_value_rejected():
    with pytest.raises(ConfigError, match="Jz"):
        cli.build_config("dfs", {**cli.parse_config_text(cli.preset_text("dfs")), "Jz": "five"})


def test_config_file_and_override_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("omega = 5\ngamma_plus = 1\ngamma_minus = 1\nT = 10  # hot\n"
                   "bloch = 0.52807291, 0.21585042, 0.02214326\nt_max = 3\ndt = 0.5\n")
    out = tmp_path / "o"
    assert cli.main(["davies-qubit", "--config", str(cfg), "--dt", "0.01", "--out", str(out)]) == 0
    header, data = read_csv(out / "davies-qubit.csv")
    assert header[0] == "t" and len(data) == 301
    assert "crossing_fneq" in header


def test_davies_qubit_crossings(tmp_path):
    assert cli.main(["davies-qubit", "--preset", "--out", str(tmp_path)]) == 0
    header, data = read_csv(tmp_path / "davies-qubit.csv")
    cf = data[0, header.index("crossing_fneq")]
    ct = data[0, header.index("crossing_tracedist")]
    assert 0 < cf < 3 and 0 < ct < 3
    plot = (tmp_path / "davies-qubit.plot").read_text()
    assert "davies-qubit.csv" in plot


def test_csv_format(tmp_path):
    cli.main(["hp-check", "--preset", "--out", str(tmp_path)])
    raw = (tmp_path / "hp-check.csv").read_bytes()
    assert b"\r" not in raw
    first = raw.decode().splitlines()[1].split(",")
    assert all(len(v.replace("-", "").replace(".", "").split("e")[0]) <= 9 for v in first)


@pytest.mark.parametrize("name", ["davies-qubit", "dfs", "coherences", "hp-check"])
def test_rerun_byte_identical(tmp_path, name):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main([name, "--preset", "--out", str(a)]) == 0
    assert cli.main([name, "--preset", "--out", str(b)]) == 0
    for f in a.iterdir():
        assert f.read_bytes() == (b / f.name).read_bytes()


def test_extreme_table_first_column(tmp_path):
    assert cli.main(["extreme", "--preset", "--L", "4", "--t_max", "1", "--out", str(tmp_path)]) == 0
    header, data = read_csv(tmp_path / "extreme.csv")
    assert header == ["L", "t_c1"] and data[0, 0] == 4
    assert (tmp_path / "extreme_curves.csv").read_text().startswith("t,")


def test_trajectories_small(tmp_path):
    args = ["trajectories", "--preset", "--trajectories", "200", "--t_max", "1", "--out", str(tmp_path)]
    assert cli.main(args) == 0
    header, data = read_csv(tmp_path / "trajectories.csv")
    assert header[0] == "t"
    assert np.all(data[:, header.index("survival_rho")] >= 0)


def test_gaussian_small(tmp_path):
    args = ["gaussian", "--preset", "--N_modes", "41", "--t_max", "10", "--dt", "0.5",
            "--out", str(tmp_path)]
    assert cli.main(args) == 0
    header, _ = read_csv(tmp_path / "gaussian.csv")
    assert header[:3] == ["t", "fneq_coherent", "fneq_squeezed"]
    assert (tmp_path / "gaussian_heatmap_squeezed.csv").exists()


def test_invariant_violation_exit_code(tmp_path):
    # a cutoff too small for the coherent amplitude leaks population
    args = ["hp-check", "--preset", "--alpha", "3", "--ncut", "8", "--out", str(tmp_path)]
    assert cli.main(args) == cli.EXIT_INVARIANT


def test_model_parameter_error_is_config_error(tmp_path):
    args = ["davies-qubit", "--preset", "--bloch", "1,1,0", "--out", str(tmp_path)]
    assert cli.main(args) == cli.EXIT_CONFIG


def test_bad_grid_is_config_error(tmp_path):
    assert cli.main(["dfs", "--preset", "--dt", "0.3", "--out", str(tmp_path)]) == cli.EXIT_CONFIG
