"""Simulator for a hydrogen/battery hybrid-energy tail-sitter UAV."""

__version__ = "0.1.0"
