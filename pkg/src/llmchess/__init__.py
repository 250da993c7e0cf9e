"""Harness for playing, recording, and scoring chess games between a
chat-based language model and a UCI chess engine."""

__version__ = "0.1.0"
