"""simulate -> predict -> compare through the command-line entry point."""
import tempfile
from pathlib import Path

from distcache.cli import main

d = Path(tempfile.mkdtemp())
common = ["--preset", "tiny", "--uniform-k", "16", "-n", "200000"]
main(["simulate", *common, "--seeds", "5", "--out", str(d / "sim.csv")])
main(["predict", *common, "--formula", "cor1,cor2,thm1", "--out", str(d / "pred.csv")])
code = main(["compare", str(d / "sim.csv"), str(d / "pred.csv"), "--out", str(d / "cmp.csv")])
print((d / "cmp.csv").read_text())
print("exit code", code)
