"""bridgebench: measuring what cross-runtime chatter costs game-tree search.

A small self-contained lab: a deterministic game engine, two search
agents (UCT and anytime alpha-beta), three execution backends that differ
only in where the agent runs relative to the engine, throughput and match
benchmarks, and a log-log regression layer that turns the measurements
into closed-form cost models.
"""

__version__ = "0.1.0"
