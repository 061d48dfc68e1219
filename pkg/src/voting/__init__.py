"""
6D vote casting, vote filtering into pose hypotheses and segmentation maps.
"""
