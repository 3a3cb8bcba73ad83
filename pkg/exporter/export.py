#!/usr/bin/env python3
"""Thin script entry point; equivalent to the installed `pda-export` command."""

import sys

from pda_exporter.cli import main

if __name__ == "__main__":
    sys.exit(main())
