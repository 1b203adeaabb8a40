#!/usr/bin/env python3
from __future__ import annotations

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from harness.config import ExperimentConfig  # noqa: E402
from harness.flops import flops_report  # noqa: E402


GOLDEN_DIR = ROOT / "tests" / "golden"


def main() -> None:
    GOLDEN_DIR.mkdir(parents=True, exist_ok=True)
    report = flops_report(ExperimentConfig())
    (GOLDEN_DIR / "flops.json").write_text(json.dumps(report.as_dict(), indent=2) + "\n")
    print(f"[golden] wrote {GOLDEN_DIR / 'flops.json'}")


if __name__ == "__main__":
    main()
