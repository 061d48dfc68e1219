"""
This package contains utility functions that are used throughout the project.
"""
