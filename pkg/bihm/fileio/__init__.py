"""File formats: datasets, checkpoints, images and metrics."""
