#!/usr/bin/env python3
"""Full-cutoff conditional-teleportation run (states, Wigner grids, P values).

Writes to out/fig3/ and, when the plotting component is present, renders the
state panels to out/fig3/states.png. Expect a few minutes at cutoff 45.
"""
import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
OUT = ROOT / "out" / "fig3"


def main() -> int:
    rc = subprocess.call(
        [sys.executable, "-m", "telefock.cli", "teleport",
         "--config", str(ROOT / "configs" / "fig3.toml"), "--out", str(OUT)]
    )
    if rc != 0:
        return rc
    renderer = ROOT / "plots" / "render_states"
    if renderer.exists():
        return subprocess.call([str(renderer), str(OUT / "manifest.json"), str(OUT / "states.png")])
    print("plots/ component not present; skipped rendering")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
