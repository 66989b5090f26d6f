"""API modules for the coordination runtime"""
