"""Equation-of-state models and pointwise state algebra."""
