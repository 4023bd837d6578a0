"""Shared exception types.

The library distinguishes three failure families: bad arguments (plain
ValueError), computations that would exceed an explicit resource guard
(ResourceLimitError), and structural violations of a container's contract
(CrossBlockEdgeError, InvalidMessageError).  Decoding failure is *not* an
exception anywhere; decoders return a failure value instead.
"""


class ResourceLimitError(RuntimeError):
    """An enumeration or search would exceed its configured budget."""


class EmptyTypicalSetError(ValueError):
    """A typical set (or conditional typical set) contains no sequence."""


class CrossBlockEdgeError(ValueError):
    """A bipartite graph has an edge joining vertices of different blocks."""


class InvalidMessageError(ValueError):
    """A message index lies outside the codebook's index ranges."""
