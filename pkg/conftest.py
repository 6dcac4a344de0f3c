#!/usr/bin/env python3
"""
Shared pytest fixtures for the delaylab test suite.

Project: delaylab
Version: 1.0.0
License: MIT
"""

import logging
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from delaylab.utils import ROOT_LOGGER_NAME


@pytest.fixture(autouse=True)
def reset_delaylab_logger():
    """
    Drop handlers between tests.

    The console handler binds sys.stderr when it is created, and capsys swaps
    sys.stderr per test, so a handler left over from an earlier test would write
    into a closed capture.
    """
    yield
    logger = logging.getLogger(ROOT_LOGGER_NAME)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()
    logger.setLevel(logging.NOTSET)
    logger.propagate = True


@pytest.fixture(autouse=True)
def clear_logging_env(monkeypatch):
    """LOG_LEVEL / LOG_DIR from the developer's shell must not leak into config tests."""
    monkeypatch.delenv("LOG_LEVEL", raising=False)
    monkeypatch.delenv("LOG_DIR", raising=False)


@pytest.fixture
def rng():
    return np.random.default_rng(20240101)


def bisect_equilibrium(p: float, tol: float = 1e-15) -> float:
    """Independent root of y**2 - y - p on [1, 1 + p] by bisection."""
    lo, hi = 1.0, 1.0 + p
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid * mid - mid - p > 0.0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= tol * hi:
            break
    return 0.5 * (lo + hi)
