# spiralloc/__init__.py
"""Single mobile-anchor localization simulator: square-spiral coverage,
obstacle detouring, reactive safety and range-free DV-Hop localization."""

__version__ = "0.1.0"
