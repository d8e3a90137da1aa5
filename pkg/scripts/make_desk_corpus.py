#!/usr/bin/env python3
"""Write a synthetic two-talker corpus as mixNNN/s1.wav, mixNNN/s2.wav.

The output directory can be passed to ``asymsep eval --corpus`` or
``asymsep sweep --corpus``.
"""

import argparse

from asymsep.corpus import write_corpus


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("out", help="output directory")
    p.add_argument("--mixtures", type=int, default=30)
    p.add_argument("--rate", type=int, default=8000)
    p.add_argument("--duration", type=float, default=1.5, help="seconds per source")
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    write_corpus(args.out, args.mixtures, args.rate, args.duration, seed=args.seed)
    print(f"wrote {args.mixtures} mixtures to {args.out}")


if __name__ == "__main__":
    main()
