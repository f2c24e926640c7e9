"""
Tests for collision polygon generator.
"""
