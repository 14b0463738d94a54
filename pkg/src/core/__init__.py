"""Discretization, time stepping, spectra, resolvent scans and acceptance checks."""
