"""Verification lab for typicality, practical certainty and C-measures."""
