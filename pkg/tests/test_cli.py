import json
import subprocess
import sys

import numpy as np
import pytest

from pss_entropy import cli, pss, synthetic


def write(tmp_path, name, x, header=None):
    p = tmp_path / name
    lines = [",".join(header)] if header else []
    lines += [",".join("%.17g" % v for v in row) for row in np.atleast_2d(x)]
    p.write_text("\n".join(lines) + "\n")
    return str(p)


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def fields(text):
    return dict(line.split("\t", 1) for line in text.splitlines() if "\t" in line)


@pytest.fixture
def pair(tmp_path):
    x = synthetic.sample(synthetic.normal_spec(2, 0.8), 2000, seed=1)
    return x, write(tmp_path, "pair.csv", x)


class TestCommands:
    def test_entropy(self, capsys, pair):
        x, path = pair
        code, out, _ = run(capsys, "entropy", "--input", path, "--ell", "3")
        assert code == 0
        assert float(fields(out)["entropy"]) == pss.entropy(x, 3)

    def test_entropy_header(self, capsys, tmp_path):
        path = write(tmp_path, "h.csv", np.arange(5.0)[:, None], header=["v"])
        code, out, _ = run(capsys, "entropy", "--input", path, "--header", "--ell", "1")
        assert code == 0
        assert float(fields(out)["entropy"]) == pytest.approx(1.0784767751, abs=1e-9)

    def test_mi(self, capsys, pair):
        x, path = pair
        code, out, _ = run(capsys, "mi", "--input", path, "--x-cols", "0", "--y-cols", "1..1",
                           "--ell", "5")
        assert code == 0
        assert float(fields(out)["mi"]) == pss.mutual_information(x[:, :1], x[:, 1:], 5)

    def test_tc(self, capsys, pair):
        _, path = pair
        code, out, _ = run(capsys, "tc", "--input", path, "--cv", "--knn-k", "3")
        f = fields(out)
        assert code == 0
        assert f["policy"] == "cv" and f["nonnegative"] == "true"
        assert {"kl_tc", "ksg_tc", "seconds", "ell"} <= set(f)

    def test_cv(self, capsys, pair):
        _, path = pair
        code, out, _ = run(capsys, "cv", "--input", path, "--ell-max", "6")
        lines = out.splitlines()
        assert code == 0
        assert lines[0] == "ell,loss,undefined_fraction"
        assert len(lines) == 8
        assert 1 <= int(fields(out)["ell_star"]) <= 6

    def test_select(self, capsys, tmp_path):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((1500, 3))
        y = x[:, 2] + 0.3 * rng.standard_normal(1500)
        path = write(tmp_path, "sel.csv", np.column_stack([x, y]))
        code, out, _ = run(capsys, "select", "--input", path, "--label-col", "3", "--steps", "2",
                           "--ell", "2", "--median-split")
        rows = out.splitlines()
        assert code == 0
        assert rows[0] == "step,feature,mi"
        assert rows[1].split(",")[1] == "2"

    def test_bench_json(self, capsys, tmp_path):
        out_path = tmp_path / "b.json"
        code, _, _ = run(capsys, "bench", "--dims", "1", "--ns", "200", "--trials", "2",
                         "--ells", "1,2", "--ks", "1,2", "--format", "json", "--out", str(out_path))
        assert code == 0
        doc = json.loads(out_path.read_text())
        assert set(doc["results"]["normal"]["1"]["200"]["0.0"]) == {"pss", "kl", "ksg"}

    def test_bench_csv_stdout(self, capsys):
        code, out, _ = run(capsys, "bench", "--dims", "1,2", "--ns", "100", "--trials", "1",
                           "--estimators", "kl", "--policy", "fixed", "--ks", "2")
        assert code == 0
        assert out.startswith("# config: ")
        assert len(out.strip().splitlines()) == 4

    def test_density(self, capsys, tmp_path):
        data = write(tmp_path, "d.csv", np.arange(5.0)[:, None])
        pts = write(tmp_path, "p.csv", np.array([[1.0], [4.5], [4.0]]))
        code, out, _ = run(capsys, "density", "--input", data, "--points", pts, "--ell", "1")
        lines = out.splitlines()
        assert code == 0
        assert float(lines[0]) == pytest.approx(np.log(4 / 15), rel=1e-14)
        assert lines[1] == "out-of-range"
        assert float(lines[2]) == pytest.approx(np.log(0.4), rel=1e-14)


class TestExitCodes:
    def test_parse_error(self, capsys, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("1,2\n3,oops\n")
        code, _, err = run(capsys, "entropy", "--input", str(p), "--ell", "1")
        assert code == 2
        assert "row 2, column 2" in err

    def test_missing_file(self, capsys, tmp_path):
        code, _, _ = run(capsys, "entropy", "--input", str(tmp_path / "none.csv"), "--ell", "1")
        assert code == 2

    def test_degenerate(self, capsys, tmp_path):
        path = write(tmp_path, "deg.csv", np.array([[0.0, 1.0], [1.0, 2.0], [2.0, 3.0]]))
        code, _, _ = run(capsys, "tc", "--input", path, "--ell", "1", "--whiten")
        assert code == 3

    def test_bad_config(self, capsys, pair):
        _, path = pair
        assert run(capsys, "entropy", "--input", path, "--ell", "0")[0] == 4
        assert run(capsys, "mi", "--input", path, "--x-cols", "0", "--y-cols", "7", "--ell", "2")[0] == 4
        assert run(capsys, "tc", "--input", path)[0] == 4

    def test_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            cli.main(["entropy"])
        assert exc.value.code == 2


def test_console_entry_point(tmp_path):
    path = write(tmp_path, "e.csv", np.arange(5.0)[:, None])
    res = subprocess.run([sys.executable, "-m", "pss_entropy.cli", "entropy", "--input", path,
                          "--ell", "1"], capture_output=True, text=True)
    assert res.returncode == 0
    assert res.stdout.startswith("entropy\t1.07847677")
