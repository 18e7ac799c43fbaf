"""Queue-aware control of a quantum repeater node."""

__version__ = "0.1.0"
