#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Test configuration and fixtures for magweyl tests.
"""

import tempfile
from pathlib import Path

import pytest


@pytest.fixture
def temp_dir():
    """Create a temporary directory for tests."""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


@pytest.fixture
def landau_config_text():
    """Constant-field scenario at a resolution every guard accepts."""
    return (
        "scenario:\n"
        "  name: landau\n"
        "  builtin: constant_field\n"
        "  params: {V: 1.0, F: 1.0}\n"
        "regime:\n"
        "  mu: 1.0\n"
        "  h: 0.1\n"
        "grid:\n"
        "  n: 16\n"
    )


@pytest.fixture
def landau_config_file(temp_dir, landau_config_text):
    """Write the constant-field config to disk."""
    path = temp_dir / "landau.yaml"
    path.write_text(landau_config_text, encoding="utf-8")
    return path
