"""Tests for the gjsq.oracle package."""
