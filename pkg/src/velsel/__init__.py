"""Velocity selection of cold atoms by a dipole barrier swept through a magnetic trap."""
__version__ = "0.1.0"
