"""Eigenvalue spectra of RIS spatial-correlation matrices and SNR-dependent
effective degrees of freedom of the doubly-correlated composite channel."""

__version__ = "0.1.0"
