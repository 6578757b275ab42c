"""Bundled models and desk-scale experiment configurations."""
