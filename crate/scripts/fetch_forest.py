#!/usr/bin/env python3
"""Fetch the forest test image and write it as 8-bit grayscale data/forest.pgm.

Clones https://github.com/JAcostaS/Code-and-Example-Codismap.git (shallow) and
converts the first image whose name mentions "forest". Use --image to convert
a local copy instead.
"""

import argparse
import subprocess
import sys
import tempfile
from pathlib import Path

from PIL import Image

REPO = "https://github.com/JAcostaS/Code-and-Example-Codismap.git"
SUFFIXES = {".png", ".jpg", ".jpeg", ".tif", ".tiff", ".bmp", ".pgm", ".gif"}


def find_image(root):
    images = sorted(p for p in root.rglob("*") if p.suffix.lower() in SUFFIXES)
    named = [p for p in images if "forest" in p.name.lower()]
    return (named or images or [None])[0]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--image", type=Path, help="local image to convert")
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "data" / "forest.pgm")
    args = ap.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        src = args.image
        if src is None:
            subprocess.run(["git", "clone", "--depth", "1", REPO, tmp], check=True)
            src = find_image(Path(tmp))
            if src is None:
                print("no image found in the repository", file=sys.stderr)
                return 1
        args.out.parent.mkdir(parents=True, exist_ok=True)
        img = Image.open(src).convert("L")
        img.save(args.out, format="PPM")
        print(f"wrote {img.size[0]}x{img.size[1]} grayscale image from {src.name} to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
