"""
Test suite for MorseInsight

This package contains unit, integration, and end-to-end tests
for the analysis pipeline and its command line.
"""
