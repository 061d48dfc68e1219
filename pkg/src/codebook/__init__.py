"""
Codebooks of synthetic patch descriptors with their local votes, and the k-NN index over them.
"""
