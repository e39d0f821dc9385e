"""Runs the vulcan-fem command line: ``python -m vulcan_fem``."""

import sys

from .cli import main

sys.exit(main())
