"""Experiment drivers, CSV artifacts and the command line."""
