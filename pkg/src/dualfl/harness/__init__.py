"""Configuration, data, reference solvers, baselines and the CLI."""
