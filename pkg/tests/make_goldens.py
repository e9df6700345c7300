#!/usr/bin/env python3
"""Freeze the golden PNG fixtures for the image-op regression tests.

Only rerun after an intentional rendering change, then eyeball the PNGs:

    python tests/make_goldens.py
"""

import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

from test_imaging import GOLDEN_CASES, GOLDEN_DIR, golden_output  # noqa: E402


def main():
    os.makedirs(GOLDEN_DIR, exist_ok=True)
    for name in GOLDEN_CASES:
        path = os.path.join(GOLDEN_DIR, f"{name}.png")
        with open(path, "wb") as f:
            f.write(golden_output(name).to_png())
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
