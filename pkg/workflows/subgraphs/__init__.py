"""Subgraph modules for the step workflow"""
