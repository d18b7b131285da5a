"""
contpath - CLI Commands
One module per subcommand, each exposing add_parser and handle
"""

from . import bench, path, solve, synth, validate

__all__ = [
    "solve",
    "path",
    "bench",
    "synth",
    "validate",
]
