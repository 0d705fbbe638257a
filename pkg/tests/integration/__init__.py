"""
Integration tests for MorseInsight

Integration tests run the pipeline stages together on small experiments.
"""
