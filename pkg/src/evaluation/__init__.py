"""
Pose error metrics, detection scoring, data set I/O, synthetic test scenes and the timed detection
pipeline with its sweeps and benchmarks.
"""
