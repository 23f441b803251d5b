"""Isolated evaluation worker.

Reads one JSON request per line on stdin, executes the contained heuristic
code in a fresh namespace against the requested problem rollouts, and
writes one JSON response per line on stdout. The parent process owns the
hard kill; this process only enforces a soft time budget.
"""

__version__ = "0.1.0"

PROTOCOL_VERSION = 1
