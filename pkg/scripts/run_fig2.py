#!/usr/bin/env python3
"""P(L) curve for the experimental parameters, plus the vacuum closed form.

Writes out/fig2/curve.csv and renders out/fig2/curve.png when the plotting
component is present.
"""
import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
OUT = ROOT / "out" / "fig2"


def main() -> int:
    rc = subprocess.call(
        [sys.executable, "-m", "telefock.cli", "curve",
         "--config", str(ROOT / "configs" / "curve.toml"), "--out", str(OUT)]
    )
    if rc != 0:
        return rc
    renderer = ROOT / "plots" / "render_curve"
    if renderer.exists():
        return subprocess.call([str(renderer), str(OUT / "curve.csv"), str(OUT / "curve.png")])
    print("plots/ component not present; skipped rendering")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
