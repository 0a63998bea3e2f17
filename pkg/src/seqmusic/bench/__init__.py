"""Monte Carlo benchmark: configs, presets, seeded trials and result files."""
