"""Simulator for decentralized federated learning over UAV networks."""

__version__ = "0.1.0"
