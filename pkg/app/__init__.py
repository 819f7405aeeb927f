# Cavity Reconstruction - conformal map of a cavity from boundary measurements
