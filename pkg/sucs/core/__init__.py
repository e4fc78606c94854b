"""Core interfaces, errors and configuration."""
