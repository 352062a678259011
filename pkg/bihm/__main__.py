"""Entry point for ``python -m bihm`` and the ``bihm`` console script."""
import sys

from bihm.app import BihmApp


def main(argv=None) -> int:
    """Run the command line and return its exit code."""
    return BihmApp().run(argv)


if __name__ == "__main__":
    sys.exit(main())
