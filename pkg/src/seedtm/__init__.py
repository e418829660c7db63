"""Seed-guided spherical neural topic modeling.

A topic model with a von Mises-Fisher latent space that accepts user
keyword groups as anchors, matches and merges topics against them,
sharpens topics via embedding-aware negative sampling, and supports fast
warm-start fine-tuning for interactive refinement.
"""

__version__ = "0.1.0"
