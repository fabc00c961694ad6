"""Figure generation from spherewalk CLI CSV/JSON outputs."""

__version__ = "0.1.0"
