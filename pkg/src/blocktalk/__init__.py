"""Blocks-world collaboration platform.

Two clients are paired into asymmetric roles over a shared 2D grid of
flippable, lettered blocks: one player sees the goal and may only talk and
point, the other may only move and flip blocks.  Every game is logged as a
replayable transcript and scored with a communication-efficiency metric
stack; a corpus pipeline filters and summarises collections of games.
"""

__version__ = "0.1.0"

PROTOCOL_VERSION = 1
TRANSCRIPT_SCHEMA = 1
