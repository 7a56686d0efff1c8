#!/usr/bin/env python3
"""Writes the 64x64 grayscale test image used by the HOG golden test.

Source: scikit-image's bundled `astronaut` sample (NASA photograph of Eileen
Collins, public domain).
"""
import argparse

import numpy as np
from skimage import color, data, transform


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("out", help="output .pgm path")
    parser.add_argument("--size", type=int, default=64)
    args = parser.parse_args()

    gray = color.rgb2gray(data.astronaut())
    small = transform.resize(gray, (args.size, args.size), anti_aliasing=True)
    pixels = np.clip(np.rint(small * 255.0), 0, 255).astype(np.uint8)
    with open(args.out, "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (args.size, args.size))
        f.write(pixels.tobytes())


if __name__ == "__main__":
    main()
