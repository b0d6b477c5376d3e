"""Command-line entry: render one figure per spec file."""

from __future__ import annotations

import sys

from .figures import FigureSpec, SchemaError, render


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] in ("-h", "--help"):
        print("usage: walkplots SPEC.json [SPEC.json ...]", file=sys.stderr)
        return 0 if argv else 2
    status = 0
    for path in argv:
        try:
            out = render(FigureSpec.from_file(path))
            print(f"{path} -> {out}")
        except (SchemaError, ValueError, FileNotFoundError) as exc:
            print(f"error: {path}: {exc}", file=sys.stderr)
            status = 2
    return status


if __name__ == "__main__":
    sys.exit(main())
