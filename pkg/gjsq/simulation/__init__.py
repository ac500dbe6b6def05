"""Discrete-event simulation of GJSQ-routed processor-sharing servers."""
