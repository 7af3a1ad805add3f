"""
Detection module - Trend vectors, projections and online detectors
"""
