"""Module entry point so `python -m listdec` matches the installed script."""

import sys

from .cli import main

sys.exit(main())
