"""
This package contains the command line of the pose voting pipeline, see app/cli.py.
"""
