"""Tests for the gjsq.simulation package."""
