#!/usr/bin/env python3
"""Print the six-configuration top-10 table for the bundled 1984 fixture."""
import argparse

from kgrec.pipeline import case_fixture_report


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default=None, help="also write case_study.txt/json here")
    args = ap.parse_args()
    study = case_fixture_report(seed=args.seed, out_dir=args.out)
    print(study.format_table())
    for label in study.columns:
        print(f"{label}: Fahrenheit_451 at rank {study.rank_of(label, 'Fahrenheit_451')}")


if __name__ == "__main__":
    main()
