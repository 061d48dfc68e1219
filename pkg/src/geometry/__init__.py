"""
Camera geometry, rigid transforms, quaternion algebra and viewpoint sampling.
"""
