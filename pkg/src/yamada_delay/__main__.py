"""Module entry point: ``python -m yamada_delay``."""

import sys

from .cli import main

sys.exit(main())
