"""
The end-to-end pipeline
=======================

Run the ``pipeline`` subcommand on the fixture inputs shipped with the package
and inspect the manifest it writes next to the artifacts.

The same run from a shell::

    policylens pipeline --policies policies.csv --wdi wdi.csv --out-dir out
"""

# %%
import json
import tempfile
from importlib import resources
from pathlib import Path

from policylens.cli import main

fixtures = Path(str(resources.files("policylens").joinpath("data/fixtures")))
out = Path(tempfile.mkdtemp()) / "run"
code = main(["--quiet", "pipeline", "--policies", str(fixtures / "policies.csv"),
             "--wdi", str(fixtures / "wdi.csv"), "--out-dir", str(out)])
print("exit code", code)

# %%
manifest = json.loads((out / "manifest.json").read_text())
for name, digest in sorted(manifest["outputs"].items()):
    print(f"{Path(name).name:<16} {digest[:16]}")
print("failed regressions:", manifest["failures"] or "none")

# %%
print((out / "ca_summary.csv").read_text())
print("\n".join((out / "battery.csv").read_text().splitlines()[:5]))
