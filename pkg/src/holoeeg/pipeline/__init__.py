"""Dataset I/O, synthetic data, feature-set assembly and selection."""
