"""Trial cache and problem-instance dumps."""
