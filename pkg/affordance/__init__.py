"""Conditional autoregressive model of plausible outcome latents p(z_t | z0)."""
