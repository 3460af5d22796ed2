"""Allow ``python -m embed_client`` as an alternative to the ``encode`` script."""

import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())
