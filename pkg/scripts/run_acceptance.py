"""Run the full-size acceptance criteria and print one line per criterion."""

import sys
from pathlib import Path

import pytest

if __name__ == "__main__":
    tests = Path(__file__).resolve().parent.parent / "tests" / "test_acceptance.py"
    sys.exit(pytest.main([str(tests), "-q", "-p", "no:cacheprovider", *sys.argv[1:]]))
