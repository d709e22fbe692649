import json
import os

import numpy as np
import pytest
from PIL import Image

from mscb.cli import (EXIT_BACKEND, EXIT_FORMAT, EXIT_OK, EXIT_USAGE, main)
from mscb.imagefiles import load_raster, save_png

from conftest import synthetic_raster


@pytest.fixture
def blocks_png(tmp_path):
    path = tmp_path / "blocks.png"
    save_png(str(path), synthetic_raster("blocks", 96, 96, seed=1))
    return str(path)


def run(*argv) -> int:
    return main(list(argv))


class TestEncodeDecode:
    def test_encode_inspect_decode_flow(self, tmp_path, blocks_png, capsys):
        out = str(tmp_path / "out.mscb")
        assert run("encode", "--level", "1", "--backend", "mock", "--seed", "0",
                   blocks_png, "-o", out) == EXIT_OK
        assert os.path.exists(out)

        assert run("inspect", out) == EXIT_OK
        text = capsys.readouterr().out
        assert "level 1" in text
        assert "detail_all:" in text
        assert text.count("item ") == 3
        assert "bpp" in text

        png = str(tmp_path / "recon.png")
        assert run("decode", out, "-o", png) == EXIT_OK
        recon = load_raster(png)
        assert recon.shape == (96, 96, 3)

    def test_deterministic_outputs(self, tmp_path, blocks_png):
        a = str(tmp_path / "a.mscb")
        b = str(tmp_path / "b.mscb")
        for out in (a, b):
            assert run("encode", "--seed", "0", blocks_png, "-o", out) == EXIT_OK
        with open(a, "rb") as fa, open(b, "rb") as fb:
            assert fa.read() == fb.read()

    def test_ppm_input_accepted(self, tmp_path):
        img = synthetic_raster("gradient", 32, 32)
        ppm = tmp_path / "in.ppm"
        Image.fromarray(img).save(str(ppm), format="PPM")
        out = str(tmp_path / "out.mscb")
        assert run("encode", str(ppm), "-o", out) == EXIT_OK

    def test_jpeg_input_rejected_as_format_error(self, tmp_path):
        jpg = tmp_path / "in.jpg"
        Image.fromarray(synthetic_raster("noise", 16, 16)).save(str(jpg), format="JPEG")
        assert run("encode", str(jpg), "-o", str(tmp_path / "x.mscb")) == EXIT_FORMAT

    def test_multiple_inputs_with_jobs(self, tmp_path):
        paths = []
        for i in range(3):
            p = tmp_path / f"img{i}.png"
            save_png(str(p), synthetic_raster("rings", 48, 48, seed=i))
            paths.append(str(p))
        outdir = tmp_path / "out"
        outdir.mkdir()
        assert run("encode", *paths, "-o", str(outdir), "--jobs", "3") == EXIT_OK
        assert sorted(os.listdir(outdir)) == ["img0.mscb", "img1.mscb", "img2.mscb"]

    def test_multiple_inputs_require_directory(self, tmp_path, blocks_png):
        other = tmp_path / "b.png"
        save_png(str(other), synthetic_raster("noise", 16, 16))
        code = run("encode", blocks_png, str(other), "-o", str(tmp_path / "x.mscb"))
        assert code == EXIT_USAGE

    def test_ablation_flags(self, tmp_path, blocks_png, capsys):
        out = str(tmp_path / "ablated.mscb")
        assert run("encode", "--drop-ndm", "--drop-bitstream", blocks_png,
                   "-o", out) == EXIT_OK
        assert run("inspect", out) == EXIT_OK
        text = capsys.readouterr().out
        assert "pixel: empty" in text
        assert "item " not in text


class TestRoundtrip:
    def test_writes_all_artifacts(self, tmp_path, blocks_png):
        outdir = str(tmp_path / "rt")
        assert run("roundtrip", "--level", "1", blocks_png, "-o", outdir) == EXIT_OK
        names = sorted(os.listdir(outdir))
        assert names == ["blocks.mscb", "blocks.recon.png", "blocks.report.json"]
        with open(os.path.join(outdir, "blocks.report.json")) as fh:
            report = json.load(fh)
        assert report["items"] == 3
        assert report["bpp"] > 0
        assert set(report["section_bits"]) == {"header", "semantic", "maps",
                                               "pixel", "crc"}


class TestErrors:
    def test_inspect_truncated_file(self, tmp_path, blocks_png):
        out = str(tmp_path / "t.mscb")
        assert run("encode", blocks_png, "-o", out) == EXIT_OK
        with open(out, "rb") as fh:
            blob = fh.read()
        with open(out, "wb") as fh:
            fh.write(blob[: len(blob) // 2])
        assert run("inspect", out) == EXIT_FORMAT

    def test_missing_input_is_io_error(self, tmp_path):
        from mscb.cli import EXIT_IO
        assert run("inspect", str(tmp_path / "nope.mscb")) == EXIT_IO

    def test_unknown_flag_is_usage_error(self, blocks_png):
        with pytest.raises(SystemExit) as exc:
            run("encode", "--frobnicate", blocks_png, "-o", "x")
        assert exc.value.code == EXIT_USAGE

    def test_remote_without_endpoint_is_usage_error(self, blocks_png, tmp_path,
                                                    monkeypatch):
        monkeypatch.delenv("MSCB_ENDPOINT", raising=False)
        code = run("encode", "--backend", "remote", blocks_png,
                   "-o", str(tmp_path / "x.mscb"))
        assert code == EXIT_USAGE

    def test_unreachable_remote_is_backend_error(self, blocks_png, tmp_path):
        code = run("encode", "--backend", "remote",
                   "--endpoint", "http://127.0.0.1:1",
                   blocks_png, "-o", str(tmp_path / "x.mscb"))
        assert code == EXIT_BACKEND

    def test_help_lists_every_command(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run("--help")
        assert exc.value.code == 0
        text = capsys.readouterr().out
        for command in ("encode", "decode", "roundtrip", "inspect", "evaluate"):
            assert command in text


class TestEvaluate:
    def test_three_point_fixture(self, tmp_path, capsys):
        table = tmp_path / "metrics.csv"
        table.write_text("label,m\n__direction__,higher\na,0\nb,5\nc,10\n")
        assert run("evaluate", "--table", str(table)) == EXIT_OK
        doc = json.loads(capsys.readouterr().out)
        assert [row["values"][0] for row in doc["rows"]] == [-1.0, 0.0, 1.0]
        assert [row["average"] for row in doc["rows"]] == [-1.0, 0.0, 1.0]

    def test_csv_output_file(self, tmp_path):
        table = tmp_path / "metrics.json"
        table.write_text(json.dumps({
            "columns": ["m"], "directions": {"m": "lower"},
            "rows": [{"label": "a", "values": [1.0]},
                     {"label": "b", "values": [3.0]}]}))
        out = tmp_path / "report.csv"
        assert run("evaluate", "--table", str(table), "--emit", "csv",
                   "-o", str(out)) == EXIT_OK
        text = out.read_text()
        assert text.startswith("label,m,__average__")

    def test_bad_extension_is_usage_error(self, tmp_path):
        bad = tmp_path / "metrics.txt"
        bad.write_text("x")
        assert run("evaluate", "--table", str(bad)) == EXIT_USAGE
