# tests/__init__.py

"""Tests for the magweyl package."""
