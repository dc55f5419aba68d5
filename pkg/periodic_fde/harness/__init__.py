"""Experiment harness: seeding, sweeps, operator-form experiments and output files."""
