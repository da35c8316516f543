"""Write a seeded census-like demo dataset plus schema, rules, attack and plan JSON."""

import argparse

from synthmark.demo import COLUMNS, write_demo


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out", help="output directory")
    ap.add_argument("--rows", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--columns", default=",".join(COLUMNS), help="comma list of demo columns")
    args = ap.parse_args()
    paths = write_demo(args.out, args.rows, args.seed, [c for c in args.columns.split(",") if c])
    for name, path in sorted(paths.items()):
        print(f"{name}: {path}")


if __name__ == "__main__":
    main()
