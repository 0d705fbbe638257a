"""
End-to-end tests for MorseInsight

E2E tests drive the command line and the shipped example experiments.
"""
