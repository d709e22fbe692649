"""Command-line surface: encode, decode, roundtrip, inspect, evaluate.

Exit codes: 0 success, 2 usage, 3 I/O, 4 format, 5 backend.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from . import evalkit, imagefiles, pipeline
from .backend import BackendHandle
from .container import parse, rate_report, serialize
from .errors import BackendError, FormatError, MscbError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_FORMAT = 4
EXIT_BACKEND = 5

ENDPOINT_ENV = "MSCB_ENDPOINT"
TOKEN_ENV = "MSCB_TOKEN"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mscb",
        description="Ultra-low bitrate semantic image compression toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_backend_flags(p):
        p.add_argument("--backend", choices=["mock", "remote"], default="mock",
                       help="model backend (default: mock)")
        p.add_argument("--seed", type=int, default=0,
                       help="mock backend seed (default: 0)")
        p.add_argument("--endpoint", default=os.environ.get(ENDPOINT_ENV, ""),
                       help=f"remote service URL (or ${ENDPOINT_ENV})")
        p.add_argument("--token", default=os.environ.get(TOKEN_ENV, ""),
                       help=f"bearer token for the remote service (or ${TOKEN_ENV})")

    def add_jobs_flag(p):
        p.add_argument("--jobs", type=int, default=1,
                       help="process independent input files concurrently")

    p = sub.add_parser("encode", help="compress rasters into .mscb containers")
    p.add_argument("inputs", nargs="+", metavar="IMAGE")
    p.add_argument("-o", "--output", required=True,
                   help="output file (single input) or directory")
    p.add_argument("--level", type=int, choices=[1, 2, 3], default=1)
    p.add_argument("--drop-ndm", action="store_true",
                   help="drop all name/detail/map groups")
    p.add_argument("--drop-detail-all", action="store_true",
                   help="drop the whole-image description")
    p.add_argument("--drop-bitstream", action="store_true",
                   help="drop the pixel payload")
    p.add_argument("--ndm-keep", type=int, default=3, choices=[0, 1, 2, 3],
                   help="cap on kept item groups (default: 3)")
    add_backend_flags(p)
    add_jobs_flag(p)

    p = sub.add_parser("decode", help="reconstruct rasters from .mscb containers")
    p.add_argument("inputs", nargs="+", metavar="CONTAINER")
    p.add_argument("-o", "--output", required=True,
                   help="output PNG (single input) or directory")
    p.add_argument("--level", type=int, choices=[1, 2, 3], default=None,
                   help="decode policy level (default: container level)")
    add_backend_flags(p)
    add_jobs_flag(p)

    p = sub.add_parser("roundtrip", help="encode + decode + rate report")
    p.add_argument("inputs", nargs="+", metavar="IMAGE")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.add_argument("--level", type=int, choices=[1, 2, 3], default=1)
    add_backend_flags(p)
    add_jobs_flag(p)

    p = sub.add_parser("inspect", help="print container structure and rates")
    p.add_argument("inputs", nargs="+", metavar="CONTAINER")

    p = sub.add_parser("evaluate", help="normalize a metrics table into a report")
    p.add_argument("--table", required=True, help="metrics table file (.csv/.json)")
    p.add_argument("--format", choices=["csv", "json"], default=None,
                   help="table format (default: by file extension)")
    p.add_argument("--emit", choices=["csv", "json"], default="json",
                   help="report format (default: json)")
    p.add_argument("-o", "--output", default=None,
                   help="report file (default: stdout)")

    return parser


def _open_backend(args):
    handle = BackendHandle(mode=args.backend, endpoint=args.endpoint,
                           seed=args.seed, token=args.token)
    return handle.open()


def _output_path(args, in_path: str, suffix: str) -> str:
    if len(args.inputs) == 1 and not os.path.isdir(args.output):
        return args.output
    stem = os.path.splitext(os.path.basename(in_path))[0]
    return os.path.join(args.output, stem + suffix)


def _fan_out(args, work) -> None:
    if len(args.inputs) > 1 and not os.path.isdir(args.output):
        raise ValueError("-o must name a directory when encoding multiple inputs")
    jobs = max(1, args.jobs)
    if jobs == 1 or len(args.inputs) == 1:
        for path in args.inputs:
            work(path)
        return
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        for future in [pool.submit(work, p) for p in args.inputs]:
            future.result()


def cmd_encode(args) -> int:
    backend = _open_backend(args)
    policy = pipeline.LevelPolicy.for_level(args.level)
    ablation = pipeline.AblationFlags(drop_ndm=args.drop_ndm,
                                      drop_detail_all=args.drop_detail_all,
                                      drop_bitstream=args.drop_bitstream,
                                      ndm_keep=args.ndm_keep)

    def work(path):
        image = imagefiles.load_raster(path)
        container = pipeline.encode(image, policy, backend, ablation)
        out = _output_path(args, path, ".mscb")
        with open(out, "wb") as fh:
            fh.write(serialize(container))
        report = rate_report(container)
        print(f"{path} -> {out}  J={container.semantic.j}  "
              f"{report.total_bits} bits  {report.bpp:.6f} bpp")

    _fan_out(args, work)
    return EXIT_OK


def cmd_decode(args) -> int:
    backend = _open_backend(args)

    def work(path):
        with open(path, "rb") as fh:
            container = parse(fh.read())
        level = args.level if args.level is not None else container.level
        policy = pipeline.LevelPolicy.for_level(level)
        image = pipeline.decode(container, policy, backend)
        out = _output_path(args, path, ".png")
        imagefiles.save_png(out, image)
        print(f"{path} -> {out}  {container.width}x{container.height}")

    _fan_out(args, work)
    return EXIT_OK


def cmd_roundtrip(args) -> int:
    backend = _open_backend(args)
    policy = pipeline.LevelPolicy.for_level(args.level)
    os.makedirs(args.output, exist_ok=True)

    def work(path):
        image = imagefiles.load_raster(path)
        container, recon, report = pipeline.roundtrip_report(image, policy, backend)
        stem = os.path.splitext(os.path.basename(path))[0]
        with open(os.path.join(args.output, stem + ".mscb"), "wb") as fh:
            fh.write(serialize(container))
        imagefiles.save_png(os.path.join(args.output, stem + ".recon.png"), recon)
        summary = {
            "input": path,
            "level": container.level,
            "items": container.semantic.j,
            "total_bits": report.total_bits,
            "bpp": report.bpp,
            "section_bits": report.section_bits,
            "psnr_vs_original": evalkit.psnr(recon, image),
        }
        with open(os.path.join(args.output, stem + ".report.json"), "w") as fh:
            json.dump(summary, fh, indent=2)
            fh.write("\n")
        print(f"{path}: {report.bpp:.6f} bpp, "
              f"psnr {summary['psnr_vs_original']:.2f} dB")

    _fan_out(args, work)
    return EXIT_OK


def cmd_inspect(args) -> int:
    for path in args.inputs:
        with open(path, "rb") as fh:
            container = parse(fh.read())
        report = rate_report(container)
        print(f"== {path}")
        print(f"version {container.version}  level {container.level}  "
              f"{container.width}x{container.height}  flags {container.flags:#04x}")
        print(f"total {report.total_bits} bits  {report.bpp:.6f} bpp")
        for name, bits in report.section_bits.items():
            print(f"  {name:<9} {bits:>8} bits  "
                  f"{bits / (container.width * container.height):.6f} bpp")
        print(f"detail_all: {container.semantic.detail_all!r}")
        for j, ((name, detail), bmap) in enumerate(
                zip(container.semantic.items, container.maps)):
            print(f"item {j}: name={name!r} detail={detail!r} "
                  f"map {bmap.rows}x{bmap.cols} ({bmap.popcount} set)")
            for row in bmap.to_array():
                print("    " + "".join("#" if b else "." for b in row))
        branch = container.pixel.branch
        if branch == "quantized":
            print(f"pixel: quantized {container.pixel.ds_w}x{container.pixel.ds_h} "
                  f"@ {container.pixel.bits_per_channel} bits/channel")
        elif branch == "neural":
            print(f"pixel: neural blob, {len(container.pixel.blob)} bytes")
        else:
            print("pixel: empty (bitstream dropped)")
    return EXIT_OK


def _guess_format(path: str, override: str | None) -> str:
    if override:
        return override
    ext = os.path.splitext(path)[1].lower()
    if ext == ".csv":
        return "csv"
    if ext == ".json":
        return "json"
    raise ValueError(f"cannot infer table format from {path!r}; pass --format")


def cmd_evaluate(args) -> int:
    fmt = _guess_format(args.table, args.format)
    with open(args.table, "rb") as fh:
        table = evalkit.load_table(fh.read(), fmt)
    report = evalkit.normalize(table)
    blob = evalkit.emit_report(report, args.emit)
    if args.output:
        with open(args.output, "wb") as fh:
            fh.write(blob)
    else:
        sys.stdout.write(blob.decode("utf-8"))
    return EXIT_OK


_COMMANDS = {
    "encode": cmd_encode,
    "decode": cmd_decode,
    "roundtrip": cmd_roundtrip,
    "inspect": cmd_inspect,
    "evaluate": cmd_evaluate,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except BackendError as exc:
        print(f"mscb: backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except FormatError as exc:
        print(f"mscb: format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except MscbError as exc:
        print(f"mscb: error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except OSError as exc:
        print(f"mscb: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"mscb: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
