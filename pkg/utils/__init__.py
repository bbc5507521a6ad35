"""
Utility Modules
- Logging setup
- File checksums
"""

from utils.digest import compute_file_checksum
from utils.log import LOG_FORMAT, setup_logging

__all__ = [
    "compute_file_checksum",
    "setup_logging",
    "LOG_FORMAT",
]
