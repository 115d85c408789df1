"""Flapping-flyer control: immersed-boundary flow, flexible wing, rigid body, TD3."""

__version__ = "0.1.0"
