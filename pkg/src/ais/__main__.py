"""Entry point for running the ais package."""

import sys

from ais.main import main

if __name__ == "__main__":
    sys.exit(main())
