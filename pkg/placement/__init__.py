"""
Placement module - Observability certificates and greedy PMU placement
"""
