import re
import subprocess
import sys

import pytest

SERVER_ARGS = ["--env", "outdoor20", "--task", "search", "--seed", "42"]


@pytest.fixture(scope="session")
def server():
    """The engine's own CLI serving on an ephemeral port (external interface only)."""
    proc = subprocess.Popen(
        [sys.executable, "-m", "agvsim.cli", "serve", "--port", "0"] + SERVER_ARGS,
        stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
    banner = proc.stdout.readline()
    match = re.search(r"listening on ([\d.]+):(\d+)", banner)
    if not match:
        proc.terminate()
        raise RuntimeError(f"no listening banner, got {banner!r}")
    yield match.group(1), int(match.group(2))
    proc.terminate()
    proc.wait(timeout=10)
