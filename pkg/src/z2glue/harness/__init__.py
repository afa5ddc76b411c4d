"""Experiment harness: configuration, runners and the command line."""
