#!/usr/bin/env python3
"""Entry point for the immune-system toolkit."""

import sys

from ais.main import main


def run() -> None:
    """Run one toolkit subcommand and exit with its status."""
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        print("\nRun interrupted by user", file=sys.stderr)
        sys.exit(130)


if __name__ == "__main__":
    run()
