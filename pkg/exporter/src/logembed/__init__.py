"""Offline event-embedding exporter.

Consumes the canonical JSON-lines log format, embeds each unique
preprocessed event text with a 12-layer, 768-dimension transformer
encoder, and writes a CSLG lookup table for the detection pipeline.
"""

__version__ = "0.1.0"
