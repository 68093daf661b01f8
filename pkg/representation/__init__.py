"""Discrete latent representation: VQVAE, quantizer and image augmentation."""
