"""Bandwidth-incentive simulator for Kademlia-routed storage networks."""

__version__ = "0.1.0"
