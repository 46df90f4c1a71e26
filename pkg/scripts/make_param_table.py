#!/usr/bin/env python3
"""Print free vs dense weight counts for algebra-bound and parameterized
variants of the same layer shapes."""
import argparse

from hxnn.experiments import experiment_param_table, param_table_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("spec", nargs="*", default=["fc:64:64", "conv:24:24:3"],
                    help="fc:<d>:<s> or conv:<in>:<out>:<k>")
    args = ap.parse_args()
    print(param_table_csv(experiment_param_table(args.spec)), end="")


if __name__ == "__main__":
    main()
