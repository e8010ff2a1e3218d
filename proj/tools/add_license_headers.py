#!/usr/bin/env python3
"""Prepends the license header to every .h/.cc file that lacks one."""

import argparse
import pathlib

SUFFIXES = {".h", ".cc"}
SKIP_DIRS = {"build", "vendor", "examples", ".git"}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("header", type=pathlib.Path)
    parser.add_argument("root", type=pathlib.Path, nargs="?", default=".")
    args = parser.parse_args()
    header = args.header.read_text().rstrip("\n") + "\n\n"
    changed = 0
    for path in sorted(args.root.rglob("*")):
        if path.suffix not in SUFFIXES or not path.is_file():
            continue
        if SKIP_DIRS.intersection(path.relative_to(args.root).parts):
            continue
        text = path.read_text()
        if "Copyright" in text:
            continue
        path.write_text(header + text)
        changed += 1
    print(f"added header to {changed} file(s)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
