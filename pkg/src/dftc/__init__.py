"""Fault-tolerant control workbench for a reaction-wheel inverted pendulum."""

__version__ = "0.1.0"
