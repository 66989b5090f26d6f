"""Temporal Hierarchy Coordination Runtime"""

__version__ = "1.0.0"
__author__ = "Temporal Hierarchy Team"
