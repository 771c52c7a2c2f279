"""Experiment orchestration, acceptance checks and the command-line interface."""
