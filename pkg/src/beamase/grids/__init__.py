"""Bundled sweep grids."""
