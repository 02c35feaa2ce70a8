"""The config-driven sweep runner, end to end in a temp directory.

Everything the command line does is importable, so this script drives a
miniature study the same way a shell user would: write a JSON config,
run the sweep, evaluate one saved model against a different family, run
the assumption checks on its weights, and merge the run into a report.
All artifacts land in a temporary directory that is printed, not cleaned
up, so you can poke at the files afterwards.
"""

import json
import tempfile
from pathlib import Path

from arlab.cli import main

root = Path(tempfile.mkdtemp(prefix="arlab-demo-"))
out = root / "rotation-study"
config = {
    "dataset": {"kind": "minidigits", "n": 400, "seed": 0},
    "model": {"hidden": [16]},
    "family": "rotation",
    "methods": ["B", "V", "S"],
    "lambda_grid": [1e-4, 1e-3, 1e-2],
    "seeds": [0, 1],
    "epochs": 4,
    "lr": {"initial": 0.5},
    "batch_size": 32,
    "output_dir": str(out),
}
config_path = root / "config.json"
config_path.write_text(json.dumps(config, indent=2))

# -- 1. train the whole grid (2 plain methods + 3 penalties) x 2 seeds ------
print("== train ==")
assert main(["train", "--config", str(config_path)]) == 0

# -- 2. re-score one cell's weights on a family it never trained against ----
print("\n== eval (contrast family, against saved baseline weights) ==")
weights = out / "B_none_0" / "weights.bin"
assert main(["eval", "--weights", str(weights),
             "--data", "minidigits:400:10000", "--family", "contrast"]) == 0

# -- 3. assumption checks on the same weights -------------------------------
print("\n== theory ==")
assert main(["theory", "--weights", str(weights),
             "--data", "minidigits:200:10000", "--family", "rotation"]) == 0

# -- 4. merge the run directory into a markdown + csv report ----------------
print("\n== report ==")
assert main(["report", str(out), "--out", str(root / "report")]) == 0

print(f"\nartifacts under {root}")
for path in sorted(root.rglob("*")):
    if path.is_file():
        print(f"  {path.relative_to(root)}")
