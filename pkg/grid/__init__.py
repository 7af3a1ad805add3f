"""
Grid module - Feeder model, admittance algebra and power flow
"""
