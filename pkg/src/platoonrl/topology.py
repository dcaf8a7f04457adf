"""Look-ahead communication topologies over a leader and n followers.

Vehicles are indexed 0 (leader) to n; every follower listens only to
lower-indexed vehicles, so the graph is acyclic by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

#: Supported topology kinds, in CLI spelling.
KINDS = ("pf", "pfl", "tpf", "tpfl")


@dataclass(frozen=True)
class Topology:
    """Neighbor sets of each follower plus the consecutive desired spacing."""

    n_followers: int
    neighbor_sets: tuple  # neighbor_sets[i-1] = sorted tuple of predecessors of follower i
    gap: float = 5.0

    def neighbors(self, i: int):
        """Predecessor indices of follower i (1-based)."""
        return self.neighbor_sets[i - 1]


def make_topology(kind: str, n_followers: int, gap: float = 5.0) -> Topology:
    """Build one of the four standard look-ahead topologies.

    pf: each follower hears its predecessor. pfl: predecessor plus leader.
    tpf: two nearest predecessors. tpfl: two nearest predecessors plus
    leader. Duplicate indices collapse (follower 1 under pfl has just {0}).
    """
    kind = kind.lower()
    if kind not in KINDS:
        raise ValueError(f"unknown topology kind {kind!r}, expected one of {KINDS}")
    if n_followers < 1:
        raise ValueError("n_followers must be >= 1")
    if gap <= 0:
        raise ValueError("gap must be positive")
    sets = []
    for i in range(1, n_followers + 1):
        nbrs = {i - 1}
        if kind in ("tpf", "tpfl") and i - 2 >= 0:
            nbrs.add(i - 2)
        if kind in ("pfl", "tpfl"):
            nbrs.add(0)
        sets.append(tuple(sorted(nbrs)))
    return Topology(n_followers=n_followers, neighbor_sets=tuple(sets), gap=gap)


def desired_gap(i: int, j: int, gap: float) -> float:
    """Desired spacing between follower i and the vehicle j ahead of it.

    Gaps accumulate along the chain: a neighbor two positions ahead sits two
    gaps away.
    """
    if j >= i:
        raise ValueError(f"neighbor index {j} must precede vehicle {i}")
    return (i - j) * gap


def validate_dag(t: Topology) -> bool:
    """True iff every neighbor strictly precedes its vehicle (look-ahead)."""
    for i in range(1, t.n_followers + 1):
        nbrs = t.neighbors(i)
        if len(nbrs) == 0:
            return False
        if any(j >= i for j in nbrs):
            return False
    return True
