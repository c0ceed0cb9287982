"""Income-class inference from call detail records."""
__version__ = "0.1.0"
