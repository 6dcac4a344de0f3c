#!/usr/bin/env python3
"""
delaylab Main Entry Point

Runs the delaylab command line interface from a source checkout without
installing the package:

    python main.py simulate --p 0.4 --m 2 --init 1,2,3 --steps 500
    python main.py sweep --config config/config.json --workers 4

Sweeps with more than one worker use a process pool, so the multiprocessing
start method is pinned here before anything imports the package.

Project: delaylab
Version: 1.0.0
License: MIT
"""

import os
import sys
import platform
from multiprocessing import set_start_method

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

# Set multiprocessing start method for Windows compatibility
# This doesn't affect Linux which already uses 'fork' by default
if platform.system() == 'Windows':
    try:
        set_start_method('spawn', force=True)
    except RuntimeError:
        # Already set, ignore
        pass

from delaylab.cli import main


if __name__ == "__main__":
    sys.exit(main())
