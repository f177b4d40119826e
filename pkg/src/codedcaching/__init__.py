"""Decentralized coded caching: placement, delivery, index-coding bounds, and error-correcting delivery."""

__version__ = "0.1.0"
