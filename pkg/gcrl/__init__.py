"""Goal-conditioned advantage-weighted actor-critic on latent states."""
