"""Compile IoT component models to ThingML and check their real-time schedulability."""

__version__ = "0.1.0"
