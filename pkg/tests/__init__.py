"""Unit test package for phasetopo."""
