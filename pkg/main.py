"""
Main entry point for the secrecy outage laboratory.
"""

import sys

from experiments.cli import main

if __name__ == "__main__":
    sys.exit(main())
