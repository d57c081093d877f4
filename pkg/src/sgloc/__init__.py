"""Scene-graph guided frame localization for video question answering."""

__version__ = "0.1.0"
