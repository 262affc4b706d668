"""Link-level simulation of two-user downlink NOMA."""

__version__ = "0.1.0"
