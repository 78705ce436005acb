import json

import numpy as np
import pytest

from qjump.cli import dispatch
from qjump.mcwf import PhotonRecord


def run(argv, capsys):
    code = dispatch(argv)
    lines = capsys.readouterr().out.strip().splitlines()
    return code, json.loads(lines[-1])


@pytest.fixture
def cfg_file(tmp_path):
    def make(text, name="run.cfg"):
        path = tmp_path / name
        path.write_text(text)
        return str(path)
    return make


def test_steady_summary(cfg_file, tmp_path, capsys):
    cfg = cfg_file("g = 25\nepsilon = 5.3\ndelta_omega = -8\nl_max = 25\nwrite_grids = true\ngrid_n = 21\n")
    code, out = run(["steady", "--config", cfg, "--out", str(tmp_path / "o")], capsys)
    assert code == 0 and out["status"] == "ok"
    assert out["n_ss"] == pytest.approx(2.46, rel=0.02)
    assert out["g2"] == pytest.approx(1.75, rel=0.03)
    d = tmp_path / "o" / "steady"
    assert (d / out["files"][0]).read_text().startswith("n_ss,g2,residual,method\n")
    assert len(out["files"]) == 4


def test_mcwf_reproducible(cfg_file, tmp_path, capsys):
    cfg = cfg_file("g = 25\nepsilon = 5.3\ndelta_omega = -8\nl_max = 12\ndt = 0.002\nt_final = 2\n"
                   "sample_every = 10\nsnapshot_times = 1\n")
    outs = []
    for k in range(2):
        code, summary = run(["mcwf", "--config", cfg, "--traj", "1", "--seed", "7",
                             "--out", str(tmp_path / f"o{k}")], capsys)
        assert code == 0
        outs.append(summary)
    assert outs[0]["files"] == outs[1]["files"]
    for name in outs[0]["files"]:
        a = (tmp_path / "o0" / "mcwf" / name).read_bytes()
        b = (tmp_path / "o1" / "mcwf" / name).read_bytes()
        assert a == b
    rec = PhotonRecord.from_jsonl(tmp_path / "o0" / "mcwf" / outs[0]["files"][0])
    assert rec.seed != 7  # per-trajectory seed derived from the master seed
    assert "_s7_" in outs[0]["files"][0] and outs[0]["files"][0].endswith("_v1.jsonl")
    assert list((tmp_path / "o0" / "mcwf").glob("*_snap0.csv"))


def test_out_dir_precedence(cfg_file, tmp_path, capsys, monkeypatch):
    cfg = cfg_file(f"out_dir = {tmp_path / 'from_cfg'}\ng = 60\nepsilon = 13.5\ndelta_omega = -8\n")
    monkeypatch.setenv("QJUMP_OUT", str(tmp_path / "from_env"))
    assert run(["semiclassical", "--config", cfg], capsys)[0] == 0
    assert (tmp_path / "from_env" / "semiclassical").is_dir()
    assert not (tmp_path / "from_cfg").exists()
    monkeypatch.delenv("QJUMP_OUT")
    assert run(["semiclassical", "--config", cfg], capsys)[0] == 0
    assert (tmp_path / "from_cfg" / "semiclassical").is_dir()


def test_semiclassical_roots_and_mbe(cfg_file, tmp_path, capsys):
    cfg = cfg_file("g = 60\nepsilon = 13.5\ndelta_omega = -8\nmbe_t_final = 1\nsample_every = 10\n")
    code, out = run(["semiclassical", "--config", cfg, "--out", str(tmp_path)], capsys)
    assert code == 0
    assert out["roots"]["bright"] == pytest.approx(5.30, rel=0.01)
    assert out["bloch_drift"] < 1e-8
    mbe = np.loadtxt(tmp_path / "semiclassical" / out["files"][1], delimiter=",", skiprows=1)
    assert mbe.shape[1] == 6


def test_analytics_bound(capsys, tmp_path):
    code, out = run(["analytics", "bound", "--override", "alpha1=1.7-5.15i", "--override", "alpha2=-2.25-0.2i",
                     "--out", str(tmp_path)], capsys)
    assert code == 0
    assert out["dt_end_min"] == pytest.approx(0.051, abs=1e-3)
    assert out["dt_end"] == pytest.approx(0.0743, abs=5e-4)


def test_analytics_overlay_from_record(tmp_path, capsys):
    from qjump.analytics import SuperpositionSpec, initial_superposition_photon, null_record_photon_exact
    from qjump.models import ModelParams
    s = SuperpositionSpec(1.7 - 5.15j, -2.25 - 0.2j)
    t = np.arange(0, 1.0001, 0.002)
    f = null_record_photon_exact(s, np.abs(t - 0.5))
    n = np.where(t >= 0.5, f, 2 * initial_superposition_photon(s) - f)
    e = np.array([])
    rec = PhotonRecord(ModelParams.jc(60, 13.5, -8), 1, 0.002, 60, 1.0, e, e.astype(str), e.astype(str), t, n)
    rec.to_jsonl(tmp_path / "r.jsonl")
    code, out = run(["analytics", "overlay", "--override", "alpha1=1.7-5.15i", "--override", "alpha2=-2.25-0.2i",
                     "--override", f"record={tmp_path / 'r.jsonl'}", "--out", str(tmp_path)], capsys)
    assert code == 0
    assert out["deviation"] < 1e-6
    header = (tmp_path / "analytics" / out["files"][0]).read_text().splitlines()[0]
    assert header == "t,n_record,n_forward,n_inverted"


def test_charge_sample_and_mixture(cfg_file, tmp_path, capsys):
    cfg = cfg_file("initial = mixture\nmeter_amplitudes = 3, -3\nmeter_weights = 0.5, 0.5\nn_traj = 20\n"
                   "nu_steps = 2000\n")
    code, out = run(["charge", "sample", "--config", cfg, "--out", str(tmp_path)], capsys)
    assert code == 0
    assert sum(out["branch_frequencies"]) == pytest.approx(1.0)
    data = np.loadtxt(tmp_path / "charge" / out["files"][0], delimiter=",", skiprows=1)
    assert data.shape == (20, 4)
    assert set(data[:, 3]) <= {0.0, 1.0}


def test_heterodyne_run(cfg_file, tmp_path, capsys):
    cfg = cfg_file("g = 25\nepsilon = 5.3\ndelta_omega = -8\nl_max = 10\ndt = 0.001\nt_final = 0.2\n")
    code, out = run(["heterodyne", "run", "--config", cfg, "--traj", "2", "--out", str(tmp_path)], capsys)
    assert code == 0 and len(out["files"]) == 2
    head = (tmp_path / "heterodyne" / out["files"][0]).read_text().splitlines()[0]
    assert head == "t,n,re_a,im_a"


def test_kerr_command(cfg_file, tmp_path, capsys):
    cfg = cfg_file("model = kerr\nchi_ratio = 2\nepsilon = 16.5\ndelta_omega = 20\nl_max = 40\n")
    code, out = run(["kerr", "--config", cfg, "--out", str(tmp_path)], capsys)
    assert code == 0
    assert out["wigner_max_error"] < 1e-3
    assert out["n_ss"] == pytest.approx(8.11, rel=0.02)


@pytest.mark.parametrize("argv,code", [
    (["nosuch"], 1),
    (["steady", "--override", "bogus=1"], 1),
    (["steady", "--config", "/nonexistent/file.cfg"], 1),
    (["charge", "dance"], 1),
    (["kerr"], 1),
])
def test_validation_errors(argv, code, capsys, tmp_path):
    assert dispatch(argv + ["--out", str(tmp_path)]) == code


def test_numerical_failure_exit_code(capsys, tmp_path):
    argv = ["steady", "--override", "g=25", "--override", "epsilon=5.3", "--override", "delta_omega=-8",
            "--override", "steady_method=integrate", "--override", "tol=1e-14", "--out", str(tmp_path)]
    code, out = run(argv, capsys)
    assert code == 2 and out["kind"] == "numerical"


@pytest.mark.slow
def test_bench(capsys, tmp_path):
    code, out = run(["bench", "--out", str(tmp_path)], capsys)
    assert code == 0 and out["failed"] == []
