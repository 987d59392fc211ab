"""Value distribution and zeros of Epstein zeta functions of binary quadratic forms."""
__version__ = "0.1.0"
