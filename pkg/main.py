"""vqsbi - Main Entry Point"""

import argparse
import os
import sys
from typing import Optional, Sequence

from dotenv import load_dotenv
from loguru import logger

from cli import setup_commands

# Load environment variables
load_dotenv()


def configure_logging():
    """stderr sink at VQSBI_LOG_LEVEL; commands add a run.log sink per output directory"""
    logger.remove()
    logger.add(sys.stderr, level=os.getenv("VQSBI_LOG_LEVEL", "INFO"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vqsbi",
        description="Posterior sampling and credible sets by conditional vector quantiles",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    setup_commands(subparsers)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    configure_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except Exception as e:
        logger.error(f"Error in {args.command}: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
