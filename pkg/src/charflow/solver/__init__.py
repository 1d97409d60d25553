"""Constraint, Picard, marching and hodograph solvers."""
