"""Tests for the gjsq.step package."""
