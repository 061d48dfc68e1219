"""
Software RGB-D rendering of colored triangle meshes.
"""
