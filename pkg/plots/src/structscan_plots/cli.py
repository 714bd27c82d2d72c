"""Standalone figure script: ``plots --config figure.json``.

The config is one figure spec or a list of them:

    {"reports": ["report.json"], "kind": "bias_mu", "out": "bias_mu.png"}
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

from .figures import FigureSpec, SchemaError, render


def spec_from_dict(d: dict) -> FigureSpec:
    try:
        return FigureSpec(
            reports=tuple(d["reports"]),
            kind=d["kind"],
            out=d["out"],
            image_format=d.get("image_format", "png"),
            labels=tuple(d["labels"]) if d.get("labels") else None,
        )
    except KeyError as exc:
        raise ValueError(f"figure config missing field {exc}") from exc


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="plots", description="Render structscan report figures")
    parser.add_argument("--config", required=True, help="figure spec JSON (one spec or a list)")
    args = parser.parse_args(argv)
    try:
        with open(args.config) as fh:
            payload = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    specs = payload if isinstance(payload, list) else [payload]
    try:
        for raw in specs:
            out = render(spec_from_dict(raw))
            print(f"wrote {out}")
    except (SchemaError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
