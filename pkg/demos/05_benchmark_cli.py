"""
Driving the benchmark command
=============================

The ``dmttkrp`` command times kernels and prints CSV. This script calls it
the way a shell would and reads the output back with the csv module.
"""

import csv
import io
import subprocess
import sys
import tempfile
from pathlib import Path


def dmttkrp(*args):
    out = subprocess.run([sys.executable, "-m", "dmttkrp", *args],
                         capture_output=True, text=True, check=True).stdout
    return list(csv.DictReader(io.StringIO(out)))


# Per-mode MTTKRP timings, checked against the brute-force reference.
rows = dmttkrp("mttkrp", "--dims", "60,50,40", "--rank", "10", "--trials", "3",
               "--threads", "1", "--check")
for r in rows:
    print(f"mode {r['mode']} {r['algo']:9s} {float(r['total']) * 1e3:6.2f} ms  err {r['check_error']}")

# Desk-scale presets keep the shape of the large benchmark tensors.
rows = dmttkrp("mttkrp", "--preset", "fmri4d", "--rank", "5", "--mode", "2",
               "--algo", "twostep", "--trials", "1", "--threads", "1")
print("fmri4d desk dims:", rows[0]["dims"])

# A CP-ALS run gives one row per mode and a summary row per iteration.
rows = dmttkrp("cp", "--dims", "40,30,20", "--ranks", "5,10", "--iters", "2", "--threads", "1")
for r in rows:
    if r["mode"] == "all":
        print(f"rank {r['rank']} iteration {r['iteration']}: fit {float(r['fit']):.4f}")

# Tensors can be written once and reused across runs.
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "x.dnt"
    subprocess.run([sys.executable, "-m", "dmttkrp", "gen", "--dims", "20,20,20", "--out", str(path)],
                   check=True)
    print("file bytes:", path.stat().st_size)
    rows = dmttkrp("krp", "--dims", "20,20,20", "--rank", "8", "--trials", "5", "--threads", "1")
    for r in rows:
        print(f"krp {r['algo']:5s} {r['hadamards']} hadamard products")
