"""Test package for the sucs test suite."""
