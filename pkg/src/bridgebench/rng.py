"""Deterministic 64-bit generator used by every component in the lab.

The generator is SplitMix64: a 64-bit counter advanced by a fixed odd
constant, with the output produced by a bijective finalizer.  Every
consumer (playouts, per-iteration search seeds, synthetic state hashing,
and the foreign-runtime guest) reproduces this exact sequence, so any two
runs that share a seed share every downstream decision bit for bit.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1

_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    """Finalizer applied to the raw counter; bijective on 64-bit ints."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def sm64_next(state: int) -> tuple[int, int]:
    """One generator step: returns (next_state, output word)."""
    state = (state + _GAMMA) & MASK64
    return state, mix64(state)


def hash_step(h: int, token: int) -> int:
    """Absorb one token into a running hash.

    Defined as the output of a single generator step taken from state
    ``h XOR token``.  Used for synthetic-game path hashing, where it must
    match the foreign-runtime reimplementation exactly.
    """
    _, out = sm64_next((h ^ token) & MASK64)
    return out


def burn(state: int, steps: int) -> int:
    """Advance a throwaway generator `steps` times and fold the outputs.

    This is the engine's unit of deliberate work: one step is one full
    generator round.  The xor-fold keeps the loop from being dead code;
    callers discard the result.
    """
    s = state & MASK64
    acc = 0
    for _ in range(steps):
        s = (s + _GAMMA) & MASK64
        z = ((s ^ (s >> 30)) * _MIX1) & MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & MASK64
        acc ^= z ^ (z >> 31)
    return acc


class Rng:
    """Stateful wrapper around the SplitMix64 step function."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state, out = sm64_next(self.state)
        return out

    def next_below(self, bound: int) -> int:
        """Draw an index in [0, bound) by plain modulo reduction.

        Modulo (not rejection sampling) is part of the contract: the
        guest reimplementation must land on identical indices.
        """
        if bound <= 0:
            raise ValueError(f"bound must be positive, got {bound}")
        return self.next_u64() % bound
