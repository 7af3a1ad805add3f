"""
Signatures module - Transition signature library and PMU placements
"""
