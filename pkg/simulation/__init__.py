"""
Simulation module - Load and measurement models, scenarios and Monte Carlo
"""
