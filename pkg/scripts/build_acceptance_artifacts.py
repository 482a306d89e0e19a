#!/usr/bin/env python3
"""Pre-build the acceptance-suite artifacts (dataset, models, ablation).

The acceptance tests build these lazily on first run; running this
script ahead of time moves the ~1h build off the test critical path.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

import test_acceptance  # noqa: E402


def main():
    cache = test_acceptance.ensure_artifacts(progress=True)
    print(f"acceptance artifacts ready in {cache}")


if __name__ == "__main__":
    main()
