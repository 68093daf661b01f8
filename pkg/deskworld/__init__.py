"""Parametric 2-D pixel tabletop used for prior data, training and evaluation."""
