"""Fixtures for the exporter suite.

The analysis tool is exercised strictly as a subprocess through its public
command line and file formats; nothing in this suite imports it.
"""

import subprocess
import sys

import pytest


@pytest.fixture(scope="session")
def primary_cli():
    """Callable running the analysis CLI; skips the test if it is absent."""
    probe = subprocess.run(
        [sys.executable, "-m", "specmargin", "--version"],
        capture_output=True,
        text=True,
    )
    if probe.returncode != 0:
        pytest.skip("analysis CLI is not runnable in this environment")

    def run(*args):
        return subprocess.run(
            [sys.executable, "-m", "specmargin", *args],
            capture_output=True,
            text=True,
        )

    return run
