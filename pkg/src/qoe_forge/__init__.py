"""Demographic-aware QoE data augmentation and MOS regression models."""

__version__ = "0.1.0"
