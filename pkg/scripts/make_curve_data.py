#!/usr/bin/env python3
"""Regenerate the plot-ready penalty and majorizer curve CSVs."""

import sys

from sparsestep.cli import main as cli_main


def main(argv=None):
    args = ["curves"] + (argv if argv is not None else sys.argv[1:])
    return cli_main(args)


if __name__ == "__main__":
    sys.exit(main())
