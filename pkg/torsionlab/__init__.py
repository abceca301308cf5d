"""
Numerical verification of harmonicity and minimality of U(n) and U(n)x1
structures.
"""
__version__ = "0.1.0"
