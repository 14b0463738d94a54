"""
kv-string-lab: numerical laboratory for the wave equation with degenerate Kelvin-Voigt damping
"""

__version__ = "0.1.0"
