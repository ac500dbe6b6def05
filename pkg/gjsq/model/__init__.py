"""System configuration, GJSQ routing, job-size laws and result types."""
