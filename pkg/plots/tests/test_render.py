import json

import numpy as np
import pytest

from vrsplit_plots import PlotSpec, SchemaError, read_csv, render

HEADER = "iter,epochs,residual,rel_residual,step_norm,lyapunov,seed"


def write_run(path, algorithm, seed, iters=20, rate=0.7):
    rng = np.random.default_rng(seed)
    lines = [f'# config: {json.dumps({"algorithm": algorithm, "seed": seed})}',
             f"# algorithm: {algorithm}"]
    lines.append(HEADER)
    r0 = 10.0
    for k in range(iters):
        res = r0 * rate**k * float(np.exp(0.05 * rng.standard_normal()))
        lines.append(f"{k},{float(k)},{res},{res / r0},0.1,,{seed}")
    path.write_text("\n".join(lines) + "\n")


def make_sweep(tmp_path, algorithms=("og", "lvfr", "saga"), seeds=10):
    paths = []
    for a, algo in enumerate(algorithms):
        for s in range(seeds):
            p = tmp_path / f"prob__{algo}__seed{s:03d}.csv"
            write_run(p, algo, s + 100 * a, rate=0.6 + 0.1 * a)
            paths.append(str(p))
    return paths


class TestReadCsv:
    def test_round_trip_columns(self, tmp_path):
        p = tmp_path / "one.csv"
        write_run(p, "og", 0)
        cols, meta = read_csv(p)
        assert set(HEADER.split(",")) <= set(cols)
        assert cols["iter"].size == 20
        assert meta["algorithm"] == "og"
        assert np.isnan(cols["lyapunov"]).all()

    def test_schema_mismatch_lists_columns(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("iter,epochs\n0,0\n")
        with pytest.raises(SchemaError, match="rel_residual"):
            read_csv(p)

    def test_empty_file_rejected(self, tmp_path):
        p = tmp_path / "empty.csv"
        p.write_text("")
        with pytest.raises(SchemaError):
            read_csv(p)


class TestRender:
    def test_single_run_smoke(self, tmp_path):
        p = tmp_path / "prob__og__seed000.csv"
        write_run(p, "og", 0)
        out = tmp_path / "fig.png"
        fig = render(PlotSpec(inputs=[str(p)], out_path=str(out)))
        assert out.exists() and out.stat().st_size > 0
        assert len(fig.axes[0].lines) == 1

    def test_three_algorithms_ten_seeds(self, tmp_path):
        paths = make_sweep(tmp_path)
        out = tmp_path / "fig.png"
        fig = render(PlotSpec(inputs=paths, out_path=str(out)))
        ax = fig.axes[0]
        assert len(ax.lines) == 3                 # one mean curve per algorithm
        assert len(ax.collections) == 3           # one envelope per algorithm
        assert {t.get_text() for t in ax.get_legend().get_texts()} == \
               {"og", "lvfr", "saga"}
        assert ax.get_yscale() == "log"
        assert out.exists()

    def test_misaligned_seeds_rejected(self, tmp_path):
        p1 = tmp_path / "prob__og__seed000.csv"
        p2 = tmp_path / "prob__og__seed001.csv"
        write_run(p1, "og", 0, iters=20)
        write_run(p2, "og", 1, iters=15)
        with pytest.raises(SchemaError, match="misaligned"):
            render(PlotSpec(inputs=[str(p1), str(p2)],
                            out_path=str(tmp_path / "f.png")))

    def test_empty_input_list_rejected(self, tmp_path):
        with pytest.raises(SchemaError):
            render(PlotSpec(inputs=[], out_path=str(tmp_path / "f.png")))

    def test_data_extraction_deterministic(self, tmp_path):
        paths = make_sweep(tmp_path, algorithms=("og",), seeds=3)
        cols1 = [read_csv(p)[0]["rel_residual"] for p in paths]
        cols2 = [read_csv(p)[0]["rel_residual"] for p in paths]
        for a, b in zip(cols1, cols2):
            assert np.array_equal(a, b)


class TestCli:
    def test_cli_smoke(self, tmp_path, capsys):
        from vrsplit_plots.render import main
        paths = make_sweep(tmp_path, algorithms=("og", "x"), seeds=2)
        out = tmp_path / "cli.png"
        assert main(paths + ["--out", str(out)]) == 0
        assert out.exists()

    def test_cli_bad_csv_nonzero_exit(self, tmp_path, capsys):
        from vrsplit_plots.render import main
        bad = tmp_path / "bad.csv"
        bad.write_text("")
        assert main([str(bad), "--out", str(tmp_path / "f.png")]) == 2
