"""
OptiQ: quiescence-based second-order optimization with reference baselines.
"""
__version__ = "1.0.0"
