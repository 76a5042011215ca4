"""Schema and data migration between relational and document stores through
a unified pivot model, with trace-driven instance transfer."""

__version__ = "0.1.0"
