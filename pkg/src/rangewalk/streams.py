"""Reproducible counter-based random streams.

One stream is a Weyl counter advanced by GAMMA with a 64-bit avalanche
finalizer applied to each counter value, so draw ``k`` of a stream is a pure
function of ``(master_seed, stream_index, k)``.  The same integer arithmetic
is mirrored inside the compiled kernels, which keeps Python-level and
kernel-level sampling bit-identical.

Derivation constants (all arithmetic mod 2^64):

* ``state_0  = mix64(master_seed XOR (GAMMA * (stream_index + 1)))``
* ``draw     : state += GAMMA; output = mix64(state)``
* ``substate for sample j inside a stream: mix64(state_0 XOR mix64((j + 1) * GAMMA2))``
* uniform doubles use the top 53 bits: ``(output >> 11) * 2**-53``.

``mix64`` is the standard 64-bit finalizer with multipliers
0xBF58476D1CE4E5B9 and 0x94D049BB133111EB.
"""

from __future__ import annotations

from dataclasses import dataclass

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
GAMMA2 = 0xD1B54A32D192ED03
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_INV_2_53 = 1.0 / 9007199254740992.0


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class RngStreamSpec:
    """Provenance of one reproducible substream: (master seed, stream index)."""

    master_seed: int
    stream: int = 0

    def __post_init__(self):
        if not 0 <= self.master_seed <= MASK64:
            raise ValueError("master seed must be an unsigned 64-bit integer")
        if self.stream < 0:
            raise ValueError("stream index must be nonnegative")

    def state0(self) -> int:
        return mix64(self.master_seed ^ ((GAMMA * (self.stream + 1)) & MASK64))

    def sample_state(self, sample_index: int) -> int:
        """Initial counter for per-sample substreams inside this stream."""
        return mix64(self.state0() ^ mix64(((sample_index + 1) * GAMMA2) & MASK64))


class Stream:
    """Sequential draws from one counter-based stream."""

    __slots__ = ("state",)

    def __init__(self, init: "RngStreamSpec | int"):
        if isinstance(init, RngStreamSpec):
            self.state = init.state0()
        else:
            self.state = init & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GAMMA) & MASK64
        return mix64(self.state)

    def next_double(self) -> float:
        return (self.next_u64() >> 11) * _INV_2_53

    def next_index(self, cum) -> int:
        """Categorical draw: smallest k with u < cum[k] (cum[-1] treated as 1)."""
        u = self.next_double()
        last = len(cum) - 1
        for k in range(last):
            if u < cum[k]:
                return k
        return last


def stream_layout(master_seed: int, streams: int, samples: int) -> list[tuple[RngStreamSpec, int]]:
    """Split ``samples`` across ``streams`` substreams, earlier streams taking
    the remainder.  The layout (and hence every estimate built on it) depends
    only on (master_seed, streams, samples)."""
    if streams < 1:
        raise ValueError("need at least one stream")
    if samples < 1:
        raise ValueError("need at least one sample")
    base, extra = divmod(samples, streams)
    out = []
    for i in range(streams):
        n_i = base + (1 if i < extra else 0)
        if n_i > 0:
            out.append((RngStreamSpec(master_seed, i), n_i))
    return out
