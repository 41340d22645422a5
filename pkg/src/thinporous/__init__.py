"""Homogenization toolkit for power-law flow through a thin porous medium
coupled to a thin film."""

__version__ = "0.1.0"
