"""Driving the command-line tool from a script.

A corpus member is exported to a signal file, analyzed at one point, and
mapped over a few positions. ``analyze`` reports its verdict in the exit
code (0 Regular, 10 Singular, 11 Inconclusive) and prints JSON lines.
"""
import subprocess
import sys
import tempfile
from pathlib import Path


def wfscope(*args):
    return subprocess.run([sys.executable, "-m", "wfscope", *args], capture_output=True, text=True)


with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "heaviside.wfs"
    r = wfscope("corpus", "export", "heaviside", str(path))
    print(f"exported heaviside ({path.stat().st_size} bytes), exit {r.returncode}")
    for x in ("0", "0.5"):
        r = wfscope("analyze", str(path), f"--point={x}", "--direction=1")
        print(f"analyze at x={x}: exit {r.returncode}")
        print("   ", r.stdout.splitlines()[-1])
    r = wfscope("map", str(path), "--xs=-0.5,0,0.5", "--mode", "sobolev", "--s", "0.3")
    print(r.stdout)
