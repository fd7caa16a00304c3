import subprocess
import sys
from pathlib import Path

import pytest

SCRIPTS = Path(__file__).resolve().parent.parent / "scripts"


@pytest.mark.parametrize("argv", [
    ["tail_exponents.py", "--n", "4", "--a", "0.5", "--tmax", "16"],
    ["bubble_curvature.py", "--n", "3", "--h", "0.1"],
    ["lambda_scan.py", "--N", "32"],
    ["homotopy_demo.py", "--N", "64"],
])
def test_script_runs(argv):
    out = subprocess.run([sys.executable, str(SCRIPTS / argv[0]), *argv[1:]], capture_output=True, text=True, timeout=300)
    assert out.returncode == 0, out.stderr
    assert len(out.stdout.splitlines()) >= 2


@pytest.mark.slow
def test_degree_study_runs():
    out = subprocess.run([sys.executable, str(SCRIPTS / "degree_study.py"), "--count", "1", "--seeds", "16",
                          "--s", "0.9"], capture_output=True, text=True, timeout=600)
    assert out.returncode == 0, out.stderr
