"""Deliberation platform engine: agents contribute opinions, author
candidate statements, rank the pool, and a winner is continuously
re-aggregated under lazy consensus."""

__version__ = "0.1.0"
