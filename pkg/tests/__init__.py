"""
QuFTI Simulator Tests
"""
