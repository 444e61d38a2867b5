"""Counter-based random streams.

Every randomized operation in this package takes an :class:`RngStream`, a
value object naming one independent stream of a counter-based generator
(Philox).  The stream is fully determined by a 64-bit master seed and a
stream path, so Monte Carlo runs are reproducible bit for bit regardless of
how samples are scheduled across workers: worker ``i`` rebuilds
``RngStream(seed, i)`` and gets exactly the randomness it would have gotten
in a sequential run.

The simulation kernels (compiled and pure Python) consume raw 64-bit words
from the stream and reduce them to bounded integers with the same rejection
rule, so both kernels produce identical traces from identical streams.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["RngStream"]


@dataclass(frozen=True)
class RngStream:
    """One reproducible random stream, identified by (seed, stream path).

    ``stream`` is a tuple of nonnegative integers; a plain int is promoted
    to a length-1 tuple.  Derived streams (``child``) extend the path, so a
    per-sample stream can hand out independent sub-streams for graph
    generation and for the leaf-removal run.
    """

    seed: int
    stream: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        s = self.stream
        if isinstance(s, (int, np.integer)):
            s = (int(s),)
        object.__setattr__(self, "stream", tuple(int(k) for k in s))

    def child(self, *path: int) -> "RngStream":
        """Derive an independent sub-stream by extending the stream path."""
        return RngStream(self.seed, self.stream + tuple(path))

    def seed_sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence(entropy=self.seed, spawn_key=self.stream)

    def bit_generator(self) -> np.random.Philox:
        return np.random.Philox(self.seed_sequence())

    def generator(self) -> np.random.Generator:
        """A numpy Generator positioned at the start of this stream."""
        return np.random.Generator(self.bit_generator())
