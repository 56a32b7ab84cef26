"""Storage adapters for study results."""
