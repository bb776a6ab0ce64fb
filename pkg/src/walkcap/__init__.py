"""Pedestrian walkable-area and carrying-capacity calculator on OSM data."""

__version__ = "0.1.0"
