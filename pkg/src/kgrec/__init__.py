"""Knowledge-graph walk embeddings and text recommendation."""

__version__ = "0.1.0"
