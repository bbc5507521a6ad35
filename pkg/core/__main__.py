"""
SocSec entry point.

    python -m core run --preset fig4
"""
from __future__ import annotations

import sys

from core.cli import main

if __name__ == "__main__":
    sys.exit(main())
