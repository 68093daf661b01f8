"""Experiment orchestration: run directories, the staged pipeline and the data-scaling sweep."""
