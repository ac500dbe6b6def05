"""Tests for the gjsq.pipeline package."""
