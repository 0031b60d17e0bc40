import csv
import io
import json
import math
import struct
import subprocess
import sys

import numpy as np
import pytest

from wfscope import Grid, SampledSignal
from wfscope.cli import main
from wfscope.corpus import sample
from wfscope.io import (SignalFormatError, decode_binary, decode_csv, encode_binary, encode_csv, parse_report,
                        read_signal, write_signal)

from conftest import random_signal


@pytest.fixture(scope="module")
def files(tmp_path_factory):
    d = tmp_path_factory.mktemp("signals")
    out = {}
    for name in ("heaviside", "delta", "smooth_bump"):
        p = d / f"{name}.wfs"
        write_signal(sample(name), p)
        out[name] = p
    p = d / "edge.wfs"
    write_signal(sample("half_plane_edge"), p)
    out["edge"] = p
    return out


def run(argv, capsys):
    code = main([str(a) for a in argv])
    cap = capsys.readouterr()
    return code, cap.out, cap.err


class TestSignalFiles:
    @pytest.mark.parametrize("seed", range(3))
    def test_binary_bitwise(self, small_grid, seed, tmp_path):
        f = random_signal(small_grid, seed)
        p = tmp_path / "a.wfs"
        write_signal(f, p)
        g = read_signal(p)
        assert g.grid == f.grid
        assert g.samples.tobytes() == f.samples.tobytes()
        write_signal(g, tmp_path / "b.wfs")
        assert (tmp_path / "b.wfs").read_bytes() == p.read_bytes()

    def test_binary_layout(self):
        g = Grid(1, (-2.0,), 0.25, 16)
        f = SampledSignal(g, np.arange(16) + 1j)
        b = encode_binary(f)
        assert b[:4] == b"WFS1"
        assert struct.unpack_from("<IIdd", b, 4) == (1, 16, -2.0, 0.25)
        assert struct.unpack_from("<dd", b, 28) == (0.0, 1.0)
        assert len(b) == 28 + 16 * 16

    def test_csv_roundtrip(self, small_grid, tmp_path):
        f = random_signal(small_grid, 5)
        p = tmp_path / "a.csv"
        write_signal(f, p)
        g = read_signal(p)
        assert g.grid == f.grid
        err = np.max(np.abs(g.samples - f.samples)) / np.max(np.abs(f.samples))
        assert err <= 1e-15

    def test_csv_2d(self):
        g = Grid.centered(2, 16, 0.5)
        rng = np.random.default_rng(0)
        f = SampledSignal(g, rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape))
        text = encode_csv(f)
        assert text.splitlines()[0] == "t1,t2,re,im"
        h = decode_csv(text)
        assert h.grid == g and np.array_equal(h.samples, f.samples)

    def test_2d_binary(self):
        f = sample("half_plane_edge")
        assert decode_binary(encode_binary(f)).samples.tobytes() == f.samples.tobytes()

    def test_bad_magic(self):
        with pytest.raises(SignalFormatError) as e:
            decode_binary(b"WFS2" + bytes(40))
        assert e.value.offset == 0

    def test_truncated_samples(self):
        b = encode_binary(SampledSignal(Grid.centered(1, 16, 1.0), np.ones(16)))
        with pytest.raises(SignalFormatError, match="byte"):
            decode_binary(b[:-5])

    def test_bad_grid(self):
        b = bytearray(encode_binary(SampledSignal(Grid.centered(1, 16, 1.0), np.ones(16))))
        struct.pack_into("<I", b, 8, 17)
        with pytest.raises(SignalFormatError):
            decode_binary(bytes(b))

    def test_csv_errors(self):
        with pytest.raises(SignalFormatError, match="line 1"):
            decode_csv("x,y,z\n0,1,2\n")
        rows = "t,re,im\n" + "".join(f"{i},0,0\n" for i in range(16))
        with pytest.raises(SignalFormatError, match="line 5"):
            decode_csv(rows.replace("3,0,0", "3,zero,0"))
        with pytest.raises(SignalFormatError, match="uniformly"):
            decode_csv(rows.replace("7,0,0", "7.5,0,0"))


class TestCli:
    def test_list(self, capsys):
        code, out, _ = run(["corpus", "list"], capsys)
        assert code == 0 and len(out.strip().splitlines()) == 7

    def test_export_reingest(self, tmp_path, capsys):
        p = tmp_path / "d.wfs"
        assert run(["corpus", "export", "delta", p], capsys)[0] == 0
        assert read_signal(p).samples.tobytes() == sample("delta").samples.tobytes()

    def test_export_unknown(self, tmp_path, capsys):
        code, _, err = run(["corpus", "export", "nope", tmp_path / "x.wfs"], capsys)
        assert code == 2 and "unknown corpus member" in err

    def test_analyze_exit_codes(self, files, capsys):
        code, out, _ = run(["analyze", files["heaviside"], "--point", "0", "--direction=+1", "--mode", "smooth"],
                           capsys)
        assert code == 10
        header, recs = parse_report(out)
        assert recs[0]["verdict"] == "Singular"
        assert abs(recs[0]["exponent"] - 1) < 0.3
        assert recs[0]["config_hash"] == header["config_hash"]
        code, _, _ = run(["analyze", files["heaviside"], "--point", "0.5"], capsys)
        assert code == 0

    def test_analyze_inconclusive(self, files, capsys):
        code, out, _ = run(["analyze", files["heaviside"], "--point", "15.99"], capsys)
        assert code == 11
        assert "overhangs" in out

    def test_s_without_mode(self, files, capsys):
        code, _, err = run(["analyze", files["heaviside"], "--point", "0", "--s", "0.7"], capsys)
        assert code == 2 and "--mode sobolev" in err
        assert run(["analyze", files["heaviside"], "--point", "0", "--mode", "sobolev"], capsys)[0] == 2

    def test_sobolev(self, files, capsys):
        code, out, _ = run(["analyze", files["heaviside"], "--point", "0", "--mode", "sobolev", "--s", "0.3"],
                           capsys)
        assert code == 0 and parse_report(out)[1][0]["tail"] == "Finite"

    def test_malformed(self, tmp_path, capsys):
        p = tmp_path / "bad.wfs"
        p.write_bytes(b"WFS1" + bytes(3))
        code, _, err = run(["analyze", p, "--point", "0"], capsys)
        assert code == 2 and "byte" in err
        q = tmp_path / "bad.csv"
        q.write_text("t,re,im\n0,1\n")
        code, _, err = run(["analyze", q, "--point", "0"], capsys)
        assert code == 2 and "line 2" in err

    def test_bad_flags(self, files, capsys):
        assert run(["analyze", files["heaviside"], "--point", "0", "--window", "hann:1"], capsys)[0] == 2
        assert run(["analyze", files["heaviside"], "--point", "0", "--shells", "x"], capsys)[0] == 2
        assert run(["analyze", files["heaviside"]], capsys)[0] == 2
        assert run(["frobnicate"], capsys)[0] == 2

    def test_map(self, files, capsys):
        code, out, _ = run(["map", files["heaviside"], "--xs=-1,-0.5,0,0.5,1", "--dirs=1,-1"], capsys)
        assert code == 0
        _, recs = parse_report(out)
        assert len(recs) == 10
        assert {tuple(r["x"]) for r in recs if r["verdict"] == "Singular"} == {(0.0,)}
        keys = [(tuple(r["x"]), tuple(r["direction"])) for r in recs]
        assert keys == sorted(keys)

    def test_map_empty(self, files, capsys):
        assert run(["map", files["heaviside"], "--xs="], capsys)[0] == 2

    def test_map_2d(self, files, capsys):
        code, out, _ = run(["map", files["edge"], "--xs=0,0", "--dirs", "compass"], capsys)
        assert code == 0
        _, recs = parse_report(out)
        sing = sorted(tuple(r["direction"]) for r in recs if r["verdict"] == "Singular")
        assert sing == [(-1.0, 0.0), (1.0, 0.0)]

    def test_report_deterministic_across_threads(self, files, capsys):
        argv = ["map", files["heaviside"], "--xs=-0.5,0,0.5"]
        a = run(argv, capsys)[1]
        b = run(argv + ["--threads", "3"], capsys)[1]
        assert a == b

    def test_config_precedence(self, files, tmp_path, capsys, monkeypatch):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"window": "bump:0.5", "k_radius": 0.03125}))
        monkeypatch.setenv("WFSCOPE_CONFIG", str(cfg))
        _, out, _ = run(["analyze", files["heaviside"], "--point", "0"], capsys)
        h = parse_report(out)[0]
        assert h["config"]["window"] == "bump:0.5" and h["config"]["k_radius"] == 0.03125
        _, out, _ = run(["analyze", files["heaviside"], "--point", "0", "--window", "bump:1"], capsys)
        h2 = parse_report(out)[0]
        assert h2["config"]["window"] == "bump:1" and h2["config"]["k_radius"] == 0.03125
        assert h2["config_hash"] != h["config_hash"]
        cfg.write_text(json.dumps({"colour": "red"}))
        assert run(["analyze", files["heaviside"], "--point", "0"], capsys)[0] == 2

    def test_emit_plot_delta_flat(self, files, capsys):
        code, out, _ = run(["emit-plot", files["delta"], "--point", "0", "--s=-1,0"], capsys)
        assert code == 0
        rows = list(csv.DictReader(io.StringIO(out)))
        logm = [float(r["log_m"]) for r in rows if r["kind"] == "shell"]
        assert len(logm) == 4 and max(logm) - min(logm) < 1e-9
        assert len([r for r in rows if r["kind"] == "tail"]) == 8

    def test_emit_plot_heaviside(self, files, capsys):
        _, out, _ = run(["emit-plot", files["heaviside"], "--point", "0", "--s", "0.7"], capsys)
        rows = list(csv.DictReader(io.StringIO(out)))
        shell = [r for r in rows if r["kind"] == "shell"]
        x = np.log1p([float(r["radius"]) for r in shell])
        fit = np.array([float(r["fit"]) for r in shell])
        slope = np.diff(fit) / np.diff(x)
        assert np.allclose(slope, slope[0]) and abs(slope[0] + 1) < 0.3
        part = [float(r["partial"]) for r in rows if r["kind"] == "tail"]
        inc = [float(r["increment"]) for r in rows if r["kind"] == "tail"]
        assert all(b > a for a, b in zip(part, part[1:]))
        assert all(b >= a for a, b in zip(inc, inc[1:]))

    def test_emit_plot_help_documents_columns(self, capsys):
        from wfscope.cli import build_parser
        with pytest.raises(SystemExit):
            build_parser().parse_args(["emit-plot", "--help"])
        assert "increment" in capsys.readouterr().out

    def test_audit_robustness(self, files, capsys):
        code, out, _ = run(["audit", "robustness", files["heaviside"], "--point", "0"], capsys)
        d = json.loads(out)
        assert code == 0 and d["agreement"] and d["verdicts"] == ["Singular"] * 3

    def test_audit_seminorm_seed(self, files, capsys):
        argv = ["audit", "seminorm", files["smooth_bump"], "--point", "0", "-m", "4", "-k", "3", "--seed", "11"]
        a = run(argv, capsys)
        b = run(argv, capsys)
        assert a[0] == 0 and a[1] == b[1]
        assert json.loads(a[1])["seed"] == 11

    def test_audit_seminorm_not_regular(self, files, capsys):
        code, _, err = run(["audit", "seminorm", files["heaviside"], "--point", "0", "-m", "2"], capsys)
        assert code == 2 and "not Regular" in err

    def test_corpus_validate_member(self, capsys):
        code, out, _ = run(["corpus", "validate", "heaviside"], capsys)
        assert code == 0
        assert all(json.loads(l)["passed"] for l in out.splitlines())

    def test_module_entry_point(self, files):
        r = subprocess.run([sys.executable, "-m", "wfscope", "analyze", str(files["heaviside"]), "--point", "0"],
                           capture_output=True, text=True)
        assert r.returncode == 10
