"""
Projective ICP refinement, depth and normal verification and the selection of final detections.
"""
