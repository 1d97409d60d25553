"""Residuals, bound ledgers, contraction and convergence studies."""
