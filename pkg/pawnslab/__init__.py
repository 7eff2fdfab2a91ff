"""
pawnslab
Checker and interpreter for Pawns, a functional language with explicit
sharing declarations and destructive update
"""

__version__ = "0.1.0"
