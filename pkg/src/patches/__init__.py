"""
Scale invariant RGB-D patch sampling and training augmentation.
"""
