"""
Optimal Recovery Toolkit

Main entry point for the command-line tool.

Usage:
    python app.py build data/e1_box.json
    python app.py verify data/e1_box.json data/e1_box.estimator.json --samples 100000 --seed 7
"""

import sys

from src.cli import main


if __name__ == "__main__":
    sys.exit(main())
