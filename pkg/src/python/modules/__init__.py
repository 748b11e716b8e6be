"""
aGPSR toolkit - approximate generalized parameter-shift rules
"""

__version__ = "1.0.0"
__author__ = "Quantum Differentiation Team"
