"""
Service module - Online detection API and event storage
"""
