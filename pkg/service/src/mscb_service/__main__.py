"""Run the model service: python -m mscb_service [--port N] [--mode stub|full]."""

import argparse
import sys

import uvicorn

from .app import create_app
from .config import ServiceConfig, ServiceConfigError


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="mscb-service")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8080)
    parser.add_argument("--mode", choices=["stub", "full"], default="stub")
    parser.add_argument("--seed", type=int, default=0,
                        help="stub determinism seed (default: 0)")
    parser.add_argument("--models", default="",
                        help="full mode model-set factory, package.module:factory")
    parser.add_argument("--device", default="cpu")
    args = parser.parse_args(argv)

    config = ServiceConfig(host=args.host, port=args.port, mode=args.mode,
                           seed=args.seed, models=args.models, device=args.device)
    try:
        app = create_app(config)
    except ServiceConfigError as exc:
        print(f"mscb-service: {exc}", file=sys.stderr)
        return 1
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    return 0


if __name__ == "__main__":
    sys.exit(main())
