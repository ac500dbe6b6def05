"""Exact stationary analysis of the two-server exponential system on a truncated grid."""
