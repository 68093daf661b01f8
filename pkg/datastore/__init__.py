"""Dataset files, latent trajectories, replay buffer and checkpoints."""
