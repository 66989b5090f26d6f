"""Simulation harness: scripted environments, fault injection, scenarios and experiments"""
