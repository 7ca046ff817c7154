"""Simulator for distributed MIS / GMIS on linear hypergraphs."""
