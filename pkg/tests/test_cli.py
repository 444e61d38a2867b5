import pytest

from kslab.cli import main
from kslab.graphs import read_graph
from kslab.ks import HAVE_COMPILED_KERNELS
from kslab.mc import read_samples


def test_generate_and_ks_run(tmp_path):
    gpath = str(tmp_path / "g.txt")
    assert main(["generate", "--model", "gnm", "--n", "50", "--c", "2.0",
                 "--seed", "1", "--out", gpath]) == 0
    g = read_graph(gpath)
    assert g.n == 50 and g.num_edges == 50
    tpath = str(tmp_path / "t.csv")
    cpath = str(tmp_path / "core.txt")
    assert main(["ks-run", "--infile", gpath, "--seed", "2",
                 "--trace-out", tpath, "--core-out", cpath]) == 0
    lines = open(tpath).read().splitlines()
    assert lines[0] == "step,X1,X2,X3,X4"
    core = read_graph(cpath)
    assert core.n >= 0


def test_mc_analyze_pipeline(tmp_path, capsys):
    spath = str(tmp_path / "s.csv")
    assert main(["mc", "--model", "gnm", "--n", "400", "--c", "2.0",
                 "--delta", "0.05", "--samples", "12", "--seed", "3",
                 "--out", spath]) == 0
    recs = read_samples(spath)
    assert len(recs) == 12
    assert main(["analyze", "--samples", spath, "--model", "gnm",
                 "--n", "400", "--c", "2.0"]) == 0
    out = capsys.readouterr().out
    assert "alpha_c" in out


def test_mc_requires_out(tmp_path):
    with pytest.raises(SystemExit):
        main(["mc", "--model", "gnm", "--n", "100", "--c", "2.0",
              "--samples", "2", "--seed", "0"])


def test_config_file_supplies_and_flags_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    out_from_file = tmp_path / "file.csv"
    cfg.write_text(
        f"model = gnm\nn = 300\nc = 2.0\nsamples = 5\nout = {out_from_file}\n"
    )
    assert main(["mc", "--config", str(cfg), "--seed", "9"]) == 0
    assert len(read_samples(str(out_from_file))) == 5
    out_flag = tmp_path / "flag.csv"
    assert main(["mc", "--config", str(cfg), "--seed", "9",
                 "--samples", "7", "--out", str(out_flag)]) == 0
    assert len(read_samples(str(out_flag))) == 7  # flag beats file


def test_config_rejects_unknown_keys(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("bogus = 1\n")
    with pytest.raises(SystemExit):
        main(["mc", "--config", str(cfg), "--out", "x.csv"])


def test_fluid_and_variance_dumps(tmp_path):
    fpath = str(tmp_path / "fluid.csv")
    assert main(["fluid", "--c", "2.0", "--num", "16", "--out", fpath]) == 0
    rows = open(fpath).read().splitlines()
    assert rows[0] == "z,s,chi1,chi2,chi3,chi4,F1,F2,F3"
    assert len(rows) == 17
    first = [float(v) for v in rows[1].split(",")]
    assert first[0] == 2.0 and first[1] == 0.0

    vpath = str(tmp_path / "var.csv")
    assert main(["variance", "--c", "2.0", "--model", "gnm",
                 "--levels", "3", "--out", vpath]) == 0
    rows = open(vpath).read().splitlines()
    assert rows[0] == "c,model,delta,sigma11,sigma22,sigma33,sigma44,sigma44_limit"
    assert len(rows) == 4


def test_sweep_and_compare(tmp_path, capsys):
    spath = str(tmp_path / "sweep.csv")
    assert main(["sweep", "--n", "500", "--c-grid", "1.0,3.2", "--samples", "3",
                 "--seed", "5", "--out", spath]) == 0
    rows = open(spath).read().splitlines()
    assert rows[0] == "c,samples,core_fraction_mean,core_fraction_se"
    assert len(rows) == 3
    assert main(["compare", "--n", "400", "--c", "2.0", "--samples", "10",
                 "--seed", "6"]) == 0
    assert "simple fraction" in capsys.readouterr().out


@pytest.mark.skipif(not HAVE_COMPILED_KERNELS, reason="compiled kernels unavailable")
def test_bench_reports_identical_traces(capsys):
    assert main(["bench", "--n", "2000", "--c", "2.0", "--repeats", "1",
                 "--seed", "7"]) == 0
    assert "identical traces" in capsys.readouterr().out
