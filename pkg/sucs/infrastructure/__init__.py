"""Infrastructure adapters (artifact storage)."""
