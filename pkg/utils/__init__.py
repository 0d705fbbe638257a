"""
Utils package for helpers shared outside the MorseInsight package.
"""

from utils.rng import RandomStreams, generator_for

__all__ = ["RandomStreams", "generator_for"]
