"""Runnable demonstrations: a flock of boids and a replicating genome."""
