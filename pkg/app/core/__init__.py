"""Numerical core: geometry, boundary integral forward model, GPST and the inversion formula."""
