"""``ttcsw-server``: run the protocol server."""

from __future__ import annotations

import argparse
import logging
import sys

import uvicorn

from .config import DecodingConfig, ServerConfig
from .service import create_app


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ttcsw-server",
        description="Serve the ttcsw wire protocol (echo, fixture or real "
                    "checkpoints).")
    parser.add_argument("--config", help="JSON server config file")
    parser.add_argument("--mode", choices=("echo", "fixture", "models"))
    parser.add_argument("--fixture-table", help="lookup table for fixture mode")
    parser.add_argument("--model", action="append", default=[],
                        metavar="TASK=MODEL_ID",
                        help="model for a task (translate/aste/align); "
                             "repeatable")
    parser.add_argument("--device", default=None)
    parser.add_argument("--max-batch-size", type=int, default=None)
    parser.add_argument("--num-beams", type=int, default=None)
    parser.add_argument("--max-length", type=int, default=None)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8801)
    return parser


def config_from_args(args) -> ServerConfig:
    if args.config:
        config = ServerConfig.from_file(args.config)
    else:
        config = ServerConfig()
    if args.mode:
        config.mode = args.mode
    if args.fixture_table:
        config.fixture_table = args.fixture_table
    for spec in args.model:
        task, _, model_id = spec.partition("=")
        config.models[task] = model_id
    if args.device:
        config.device = args.device
    if args.max_batch_size:
        config.max_batch_size = args.max_batch_size
    decoding = config.decoding or DecodingConfig()
    if args.num_beams:
        decoding.num_beams = args.num_beams
    if args.max_length:
        decoding.max_length = args.max_length
    config.decoding = decoding
    config.__post_init__()  # re-validate after overrides
    return config


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO)
    app = create_app(config_from_args(args))
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


if __name__ == "__main__":
    sys.exit(main())
