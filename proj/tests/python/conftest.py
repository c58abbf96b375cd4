import os
import shutil
import subprocess
from pathlib import Path

import pytest

import spdc


@pytest.fixture(scope="session")
def cli():
    exe = os.environ.get("SPDC_CLI") or shutil.which("spdc")
    if not exe:
        pytest.skip("spdc executable not found (set SPDC_CLI)")
    return exe


@pytest.fixture
def run(cli):
    def _run(*args, check=None):
        proc = subprocess.run([cli, *map(str, args)], capture_output=True, text=True, timeout=600)
        if check is not None:
            assert proc.returncode == check, proc.stderr
        return proc

    return _run


@pytest.fixture
def config(tmp_path):
    """Writes a config that includes the shipped defaults plus extra lines."""

    def _config(text="", name="run.conf"):
        path = tmp_path / name
        path.write_text(f"include = {spdc.DEFAULT_CONFIG}\n{text}")
        return path

    return _config


def read_bytes(directory: Path):
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir()) if p.is_file()}
