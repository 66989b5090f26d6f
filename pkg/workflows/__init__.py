"""Workflow modules for the coordination runtime"""
