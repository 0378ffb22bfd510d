import numpy as np
import pytest
from PIL import Image

from ctrlrob.attack import read_curves_csv
from ctrlrob.cli import EXIT_IO, EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, SNAPSHOT_NAME, main
from ctrlrob.graph import from_edge_list, read_edge_list, write_edge_list


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """A tiny dataset, model and report built through the command line."""
    root = tmp_path_factory.mktemp("cli")
    ds, ckpt, rep = root / "ds", root / "m.ckpt", root / "rep"
    assert run("dataset", "--n", 16, "--degrees", "3", "--count", 10, "--seed", 5, "--workers", 1, "--out", ds) == 0
    assert run("train", "--data", ds, "--epochs", 1, "--seed", 2, "--out", ckpt) == 0
    assert run("evaluate", "--model", ckpt, "--data", ds, "--out", rep) == 0
    return root, ds, ckpt, rep


def test_generate_one_graph(tmp_path, capsys):
    assert run("generate", "--topology", "sf", "--n", 1000, "--k", 5, "--seed", 7, "--out", tmp_path) == EXIT_OK
    files = sorted(p.name for p in tmp_path.glob("*.txt"))
    assert files == ["sf_n1000_k5_s7.txt"]
    g = read_edge_list(tmp_path / files[0])
    assert g.node_count == 1000 and g.edge_count == 5000
    assert (tmp_path / SNAPSHOT_NAME).exists()
    assert "wrote 1 graph" in capsys.readouterr().out


def test_generate_negative_degree_is_usage_error(tmp_path, capsys):
    assert run("generate", "--k", -1, "--out", tmp_path) == EXIT_USAGE
    assert "positive" in capsys.readouterr().err
    assert not list(tmp_path.iterdir())


def test_generate_png(tmp_path):
    assert run("generate", "--n", 20, "--k", 2, "--png", "--out", tmp_path) == 0
    img = Image.open(tmp_path / "er_n20_k2_s0.png")
    assert img.mode == "L" and img.size == (20, 20)
    assert np.count_nonzero(np.asarray(img)) == 40


def test_generate_invalid_spec(tmp_path, capsys):
    assert run("generate", "--topology", "qsn", "--n", 12, "--k", 0.5, "--out", tmp_path) == EXIT_VALIDATION
    assert "outside" in capsys.readouterr().err


def test_simulate_qsn_header(tmp_path, capsys):
    run("generate", "--topology", "qsn", "--n", 50, "--k", 4, "--seed", 7, "--out", tmp_path)
    out = tmp_path / "c.csv"
    assert run("simulate", tmp_path / "qsn_n50_k4_s7.txt", "--strategy", "tda", "--out", out) == 0
    assert "source n_D=1/50=0.02" in capsys.readouterr().out
    assert "n_D=1/50" in out.read_text().splitlines()[1]
    [(sid, vals)] = read_curves_csv(out)
    assert sid == "qsn_n50_k4_s7" and vals.shape == (49,) and vals[-1] == 1.0


def test_simulate_two_nodes(tmp_path):
    write_edge_list(from_edge_list(2, [(0, 1)]), tmp_path / "g.txt")
    out = tmp_path / "c.csv"
    assert run("simulate", tmp_path / "g.txt", "--out", out) == 0
    [(_, vals)] = read_curves_csv(out)
    assert vals.tolist() == [1.0]


def test_simulate_missing_file_exit_code(tmp_path, capsys):
    code = run("simulate", tmp_path / "nope.txt", "--out", tmp_path / "c.csv")
    assert code == EXIT_IO and code != EXIT_USAGE
    assert "nope.txt" in capsys.readouterr().err


def test_simulate_is_reproducible(tmp_path):
    run("generate", "--n", 30, "--k", 3, "--count", 3, "--out", tmp_path / "g")
    graphs = sorted((tmp_path / "g").glob("*.txt"))
    for name in ("a.csv", "b.csv"):
        assert run("simulate", *graphs, "--seed", 4, "--out", tmp_path / name) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_pipeline_artifacts(pipeline):
    root, ds, ckpt, rep = pipeline
    assert (ds / "manifest.txt").exists() and (ds / SNAPSHOT_NAME).exists()
    assert ckpt.exists() and (root / f"m.ckpt.{SNAPSHOT_NAME}").exists()
    assert {"predictions.csv", "truth.csv", "er_st.csv", "summary.txt"} <= {p.name for p in rep.iterdir()}


def test_evaluate_twice_identical(pipeline, tmp_path):
    _, ds, ckpt, rep = pipeline
    assert run("evaluate", "--model", ckpt, "--data", ds, "--out", tmp_path / "again") == 0
    # the settings snapshot records the output path, so only data files are compared
    for p in rep.iterdir():
        if p.name == SNAPSHOT_NAME:
            continue
        assert (tmp_path / "again" / p.name).read_bytes() == p.read_bytes(), p.name


def test_predict_dataset_and_graphs(pipeline, tmp_path):
    _, ds, ckpt, _ = pipeline
    assert run("predict", "--model", ckpt, "--data", ds, "--out", tmp_path / "p.csv") == 0
    rows = read_curves_csv(tmp_path / "p.csv")
    assert len(rows) == 4 and all(v.shape == (15,) for _, v in rows)
    run("generate", "--n", 16, "--k", 3, "--out", tmp_path / "g")
    assert run("predict", tmp_path / "g/er_n16_k3_s0.txt", "--model", ckpt, "--out", tmp_path / "q.csv") == 0


def test_predict_size_mismatch_names_both(pipeline, tmp_path, capsys):
    _, _, ckpt, _ = pipeline
    run("generate", "--n", 20, "--k", 3, "--out", tmp_path)
    capsys.readouterr()
    code = run("predict", tmp_path / "er_n20_k3_s0.txt", "--model", ckpt, "--out", tmp_path / "p.csv")
    err = capsys.readouterr().err
    assert code == EXIT_VALIDATION
    assert "16x16" in err and "20x20" in err


def test_corrupt_checkpoint(pipeline, tmp_path, capsys):
    _, ds, ckpt, _ = pipeline
    raw = bytearray(ckpt.read_bytes())
    raw[len(raw) // 3] ^= 0x55
    (tmp_path / "bad.ckpt").write_bytes(bytes(raw))
    assert run("evaluate", "--model", tmp_path / "bad.ckpt", "--data", ds, "--out", tmp_path / "r") == EXIT_VALIDATION
    assert capsys.readouterr().err


def test_missing_required_option(capsys):
    assert run("train") == EXIT_USAGE
    assert "--data" in capsys.readouterr().err


def test_plot_one_file_per_cell(pipeline, tmp_path):
    _, _, _, rep = pipeline
    cells = {line.split(",")[0] for line in (rep / "er_st.csv").read_text().splitlines()[1:]} - {"all"}
    assert run("plot", "--report", rep, "--out", tmp_path) == 0
    made = sorted(p.name for p in tmp_path.glob("*.png"))
    assert made == sorted(f"plot_{c}.png" for c in cells)


def test_plot_log_axis_and_overlay(pipeline, tmp_path, monkeypatch):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    seen = []
    real_close = plt.close

    def spy(fig):
        ax = fig.axes[0]
        seen.append((ax.get_yscale(), [line.get_label() for line in ax.lines]))
        real_close(fig)

    monkeypatch.setattr(plt, "close", spy)
    _, _, _, rep = pipeline
    run("plot", "--report", rep, "--out", tmp_path / "a")
    scale, labels = seen[0]
    assert scale == "log"
    assert {"er", "st"} <= set(labels) and any(l.startswith("pv") for l in labels)
    seen.clear()
    run("plot", "--report", rep, "--linear", "--out", tmp_path / "b")
    assert seen[0][0] == "linear"


def test_plot_needs_input(tmp_path, capsys):
    assert run("plot", "--out", tmp_path) == EXIT_USAGE
    assert "needs" in capsys.readouterr().err


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "gen.cfg"
    cfg.write_text("# generator settings\ntopology=sw\nn=24\nk=4\nseed=3\npng=yes\n")
    assert run("generate", "--config", cfg, "--seed", 9, "--out", tmp_path / "o") == 0
    assert (tmp_path / "o/sw_n24_k4_s9.txt").exists() and (tmp_path / "o/sw_n24_k4_s9.png").exists()
    snap = (tmp_path / "o" / SNAPSHOT_NAME).read_text().splitlines()
    assert "topology=sw" in snap and "seed=9" in snap


def test_config_file_errors(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour=blue\n")
    assert run("generate", "--config", bad) == EXIT_USAGE
    bad.write_text("k=-3\n")
    assert run("generate", "--config", bad) == EXIT_USAGE
    assert run("generate", "--config", tmp_path / "missing.cfg") == EXIT_IO


def test_snapshot_has_no_volatile_fields(tmp_path):
    for d in ("a", "b"):
        run("generate", "--n", 10, "--k", 2, "--out", tmp_path / d)
    a = (tmp_path / "a" / SNAPSHOT_NAME).read_text().replace(str(tmp_path / "a"), "OUT")
    b = (tmp_path / "b" / SNAPSHOT_NAME).read_text().replace(str(tmp_path / "b"), "OUT")
    assert a == b


def test_version_prints_default_hash(capsys):
    assert run("--version") == 0
    first = capsys.readouterr().out.split()
    assert first[0] == "ctrlrob" and len(first[-1]) == 64
    run("--version")
    assert capsys.readouterr().out.split() == first


def test_no_command_is_usage_error():
    assert run() == EXIT_USAGE
