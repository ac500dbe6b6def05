"""Tests for the gjsq.model package."""
