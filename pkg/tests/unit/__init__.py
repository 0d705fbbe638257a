"""
Unit tests for MorseInsight

Unit tests test individual components and functions in isolation.
"""
