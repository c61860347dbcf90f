import csv
import io
import struct
from pathlib import Path

import numpy as np
import pytest

import dmttkrp.kernels
from dmttkrp import bench, cli
from dmttkrp.errors import FormatError, ResourceError
from dmttkrp.io import gen_tensor, plan_tensor, read_tensor, write_tensor
from dmttkrp.tensor import DenseTensor

GOLDEN = Path(__file__).parent / "golden"


def golden_header(name):
    return (GOLDEN / name).read_text().strip().split(",")


def run_cli(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, list(csv.reader(io.StringIO(out))), err


class TestFileFormat:
    def test_round_trip_bitwise(self, tmp_path):
        X = gen_tensor((3, 4, 5), seed=1)
        write_tensor(tmp_path / "x.dnt", X)
        Y = read_tensor(tmp_path / "x.dnt")
        assert Y.dims == X.dims
        assert Y.values.tobytes() == X.values.tobytes()

    def test_layout_little_endian(self, tmp_path):
        write_tensor(tmp_path / "one.dnt", DenseTensor((1,), np.array([1.0])))
        data = (tmp_path / "one.dnt").read_bytes()
        assert data[:4] == b"DNT1"
        assert struct.unpack("<II", data[4:12]) == (1, 1)
        assert struct.unpack("<Q", data[12:20]) == (1,)
        assert data[20:] == b"\x00\x00\x00\x00\x00\x00\xf0?"

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "t.dnt"
        write_tensor(path, gen_tensor((2, 3), seed=0))
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(FormatError, match="expected 48 bytes, got 40") as exc:
            read_tensor(path)
        assert "byte offset" in str(exc.value)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "m.dnt"
        write_tensor(path, gen_tensor((2,), seed=0))
        path.write_bytes(b"XXXX" + path.read_bytes()[4:])
        with pytest.raises(FormatError, match="magic"):
            read_tensor(path)

    def test_bad_version(self, tmp_path):
        path = tmp_path / "v.dnt"
        write_tensor(path, gen_tensor((2,), seed=0))
        raw = bytearray(path.read_bytes())
        raw[4:8] = struct.pack("<I", 2)
        path.write_bytes(bytes(raw))
        with pytest.raises(FormatError, match="version 2"):
            read_tensor(path)

    def test_short_header(self, tmp_path):
        path = tmp_path / "s.dnt"
        path.write_bytes(b"DNT")
        with pytest.raises(FormatError):
            read_tensor(path)


class TestGenerate:
    def test_ones(self):
        assert np.all(gen_tensor((2, 2, 2), distribution="ones").values == 1)

    def test_seeded(self):
        a, b, c = (gen_tensor((4, 5), seed=s).values for s in (7, 7, 8))
        assert np.array_equal(a, b) and not np.array_equal(a, c)
        assert a.min() >= 0 and a.max() < 1

    def test_plan_full_scale_without_allocating(self):
        shape, nbytes = plan_tensor((900, 900, 900), max_bytes=None)
        assert nbytes == 5_832_000_000 and shape.size == 729_000_000

    def test_budget(self):
        with pytest.raises(ResourceError):
            gen_tensor((1000, 1000), max_bytes=1000)

    def test_bad_distribution(self):
        with pytest.raises(ValueError):
            gen_tensor((2,), distribution="normal")


class TestPresets:
    def test_full_presets(self):
        assert bench.preset_dims("fmri4d", "full") == (225, 59, 200, 200)
        assert bench.preset_dims("cube6", "full") == (30,) * 6

    @pytest.mark.parametrize("name", sorted(bench.FULL_PRESETS))
    def test_desk_presets_are_small(self, name):
        dims = bench.preset_dims(name)
        assert 5 * 10**5 <= np.prod(dims) <= bench.MAX_ORACLE_ENTRIES
        assert len(dims) == len(bench.FULL_PRESETS[name])


class TestCli:
    def test_mttkrp_smoke(self, capsys):
        code, rows, _ = run_cli(capsys, "mttkrp", "--dims", "2,2,2", "--dist", "ones",
                                "--rank", 1, "--trials", 1, "--threads", 1)
        assert code == 0
        assert rows[0] == golden_header("mttkrp_header.csv")
        # 3 modes each for baseline and one-step, 1 internal mode for two-step.
        assert len(rows) == 1 + 3 + 3 + 1
        assert {r[3] for r in rows[1:]} == {"baseline", "one_step", "two_step"}

    def test_mttkrp_check_passes(self, capsys):
        code, rows, _ = run_cli(capsys, "mttkrp", "--dims", "4,3,5,2", "--rank", 3,
                                "--trials", 2, "--threads", "1,2", "--check")
        assert code == 0
        col = rows[0].index("check_error")
        assert all(float(r[col]) <= 1e-10 for r in rows[1:])

    def test_check_skip_is_reported(self, capsys, monkeypatch):
        monkeypatch.setattr(bench, "MAX_ORACLE_ENTRIES", 10)
        code, rows, err = run_cli(capsys, "mttkrp", "--dims", "3,3,3", "--rank", 1,
                                  "--trials", 1, "--threads", 1, "--algo", "onestep", "--check")
        assert code == 0 and "--check skipped" in err
        assert all(r[-1] == "" for r in rows[1:])

    def test_twostep_external_rejected(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["mttkrp", "--dims", "3,3,3", "--algo", "twostep", "--mode", "0"])
        assert exc.value.code != 0
        err = capsys.readouterr().err
        assert "external mode 0" in err and "onestep" in err

    def test_check_catches_injected_fault(self, capsys, monkeypatch):
        real = dmttkrp.kernels.gemm_acc

        def faulty(A, B, C, accumulate=False):
            out = real(A, B, C, accumulate)
            np.asarray(C)[0, 0] += 1.0
            return out

        monkeypatch.setattr(dmttkrp.kernels, "gemm_acc", faulty)
        code = cli.main(["mttkrp", "--dims", "3,4,2", "--rank", "2", "--trials", "1",
                         "--threads", "1", "--algo", "onestep", "--check"])
        assert code == cli.EXIT_CHECK_FAILED
        assert "check failed" in capsys.readouterr().err

    def test_cp_single_iteration(self, capsys):
        code, rows, _ = run_cli(capsys, "cp", "--dims", "2,2,2", "--rank", 2,
                                "--iters", 1, "--threads", 1)
        assert code == 0
        assert rows[0] == golden_header("cp_header.csv")
        assert [r[3] for r in rows[1:]] == ["0", "1", "2", "all"]
        assert 0 <= float(rows[-1][-1]) <= 1

    def test_cp_rank_sweep(self, capsys):
        code, rows, _ = run_cli(capsys, "cp", "--dims", "4,4,4", "--ranks", "10,15,20,25,30",
                                "--iters", 1, "--threads", 1)
        assert code == 0
        assert sorted({int(r[1]) for r in rows[1:]}) == [10, 15, 20, 25, 30]

    def test_preset_accepted(self, capsys, monkeypatch):
        monkeypatch.setitem(bench.DESK_PRESETS, "fmri4d", (5, 3, 4, 4))
        code, rows, _ = run_cli(capsys, "mttkrp", "--preset", "fmri4d", "--rank", 2,
                                "--trials", 1, "--threads", 1, "--mode", 1, "--algo", "twostep")
        assert code == 0 and rows[1][0] == "5x3x4x4"

    def test_krp(self, capsys):
        code, rows, _ = run_cli(capsys, "krp", "--dims", "3,4,5", "--rank", 2,
                                "--trials", 2, "--threads", 1)
        assert code == 0
        assert rows[0] == golden_header("krp_header.csv")
        by_algo = {r[2]: int(r[-1]) for r in rows[1:]}
        assert by_algo["reuse"] < by_algo["naive"] == 120

    def test_gen_then_read(self, capsys, tmp_path):
        path = tmp_path / "g.dnt"
        assert cli.main(["gen", "--dims", "3,2,2", "--seed", "5", "--out", str(path)]) == 0
        assert read_tensor(path).values.tobytes() == gen_tensor((3, 2, 2), 5).values.tobytes()
        code, rows, _ = run_cli(capsys, "mttkrp", "--tensor", path, "--rank", 1,
                                "--trials", 1, "--threads", 1, "--algo", "baseline")
        assert code == 0 and len(rows) == 4

    def test_out_file(self, tmp_path):
        out = tmp_path / "r.csv"
        assert cli.main(["krp", "--dims", "2,2", "--trials", "1", "--threads", "1",
                         "--out", str(out)]) == 0
        assert out.read_text().splitlines()[0].split(",") == golden_header("krp_header.csv")

    def test_threads_from_env(self, monkeypatch):
        monkeypatch.setenv(cli.THREADS_ENV, "3")
        assert cli.default_threads() == 3

    @pytest.mark.parametrize("argv", [
        ["mttkrp"],
        ["mttkrp", "--dims", "2,2", "--preset", "cube3"],
        ["mttkrp", "--dims", "2,0"],
        ["mttkrp", "--dims", "2,2", "--mode", "5"],
        ["mttkrp", "--dims", "a,b"],
        ["cp", "--dims", "2,2", "--threads", "1,2"],
    ])
    def test_usage_errors(self, argv, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(argv)
        assert exc.value.code == 2
