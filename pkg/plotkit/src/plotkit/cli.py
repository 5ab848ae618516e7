"""CLI: plotkit <recipe.json> renders one figure from simulator runs."""

from __future__ import annotations

import argparse
import sys

from .recipe import RecipeError, load_recipe
from .render import render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plotkit", description="Render figures from cavimol run directories")
    parser.add_argument("recipe", help="figure recipe (JSON)")
    args = parser.parse_args(argv)
    try:
        out = render(load_recipe(args.recipe))
    except (RecipeError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"figure written to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
