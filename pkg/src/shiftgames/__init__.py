"""Equilibrium construction toolkit for two-player stochastic games."""
