"""Desk-scale on-policy RL inside a learned action-conditioned pixel world model."""

__version__ = "0.1.0"
