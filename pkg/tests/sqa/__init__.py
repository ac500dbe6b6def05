"""Tests for the gjsq.sqa package."""
