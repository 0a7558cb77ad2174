#!/usr/bin/env python3
"""Simulated homodyne tomography of the single-photon mixture with bootstrap errors."""
import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]


def main() -> int:
    return subprocess.call(
        [sys.executable, "-m", "telefock.cli", "tomo",
         "--config", str(ROOT / "configs" / "tomo.toml"), "--out", str(ROOT / "out" / "tomo")]
    )


if __name__ == "__main__":
    raise SystemExit(main())
