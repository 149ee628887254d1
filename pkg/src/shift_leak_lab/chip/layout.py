"""
Scan chain layout and stitching.

Chains are ordered from scan-in (position 0) toward scan-out. Each chain holds
regular cells RC(flop index) and secure cells SC(key index).
"""

import random
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import yaml

from src.shift_leak_lab.core.cells import CellKind, CellRef
from src.shift_leak_lab.locking.locks import LockedDesign
from src.shift_leak_lab.utils.exceptions import StitchError
from src.shift_leak_lab.utils.exporter import write_yaml_report
from src.shift_leak_lab.utils.logger import get_chip_logger

logger = get_chip_logger()


class StitchPolicy(str, Enum):
    INTERLEAVED = "interleaved"
    RANDOM = "random"
    EXPLICIT = "explicit"


@dataclass(frozen=True)
class ScanChainLayout:
    chains: Tuple[Tuple[CellRef, ...], ...]
    policy: str = StitchPolicy.EXPLICIT.value
    seed: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "chains", tuple(tuple(chain) for chain in self.chains))

    @property
    def n_chains(self) -> int:
        return len(self.chains)

    @property
    def total_cells(self) -> int:
        return sum(len(chain) for chain in self.chains)

    @cached_property
    def positions(self) -> Dict[CellRef, Tuple[int, int]]:
        """Cell → (chain, position)."""
        return {cell: (c, p) for c, chain in enumerate(self.chains) for p, cell in enumerate(chain)}

    def position(self, cell: CellRef) -> Tuple[int, int]:
        try:
            return self.positions[cell]
        except KeyError:
            raise StitchError(f"{cell} is not stitched into any chain") from None

    def cells_of(self, kind: CellKind) -> List[CellRef]:
        return sorted(cell for cell in self.positions if cell.kind is kind)

    def rc_subchain(self, chain: int) -> List[CellRef]:
        """RCs of a chain in shift order; the M1a shift path."""
        return [cell for cell in self.chains[chain] if cell.kind is CellKind.RC]

    @property
    def max_rcs_per_chain(self) -> int:
        return max((len(self.rc_subchain(c)) for c in range(self.n_chains)), default=0)

    def validate(self, n_flops: int, n_keys: int) -> None:
        """Raise StitchError unless every flop and key index appears exactly once."""
        if not self.chains:
            raise StitchError("layout has no chains")
        for c, chain in enumerate(self.chains):
            if not chain:
                raise StitchError(f"chain {c} is empty")
        seen: Dict[CellRef, int] = {}
        for c, chain in enumerate(self.chains):
            for cell in chain:
                if cell in seen:
                    raise StitchError(f"{cell} appears in chain {seen[cell]} and chain {c}")
                seen[cell] = c
        expected = {CellRef.rc(i) for i in range(n_flops)} | {CellRef.sc(k) for k in range(n_keys)}
        missing = sorted(expected - set(seen))
        extra = sorted(set(seen) - expected)
        if missing:
            raise StitchError(f"cells missing from layout: {', '.join(map(str, missing))}")
        if extra:
            raise StitchError(f"layout references unknown cells: {', '.join(map(str, extra))}")

    def to_dict(self) -> Dict[str, object]:
        return {
            "policy": self.policy,
            "seed": self.seed,
            "chains": [[str(cell) for cell in chain] for chain in self.chains],
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, object]) -> "ScanChainLayout":
        try:
            chains = [[CellRef.parse(token) for token in chain] for chain in payload["chains"]]
        except (KeyError, TypeError, ValueError) as e:
            raise StitchError(f"malformed layout: {e}")
        return cls(tuple(tuple(chain) for chain in chains),
                   policy=str(payload.get("policy", StitchPolicy.EXPLICIT.value)),
                   seed=payload.get("seed"))

    @classmethod
    def explicit(cls, chains: Sequence[Sequence[Union[str, CellRef]]]) -> "ScanChainLayout":
        return cls(tuple(tuple(c if isinstance(c, CellRef) else CellRef.parse(c) for c in chain)
                         for chain in chains))


def read_layout(path: Union[str, Path]) -> ScanChainLayout:
    try:
        payload = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as e:
        raise StitchError(f"cannot parse layout file {path}: {e}")
    if not isinstance(payload, dict):
        raise StitchError(f"layout file {path} does not hold a mapping")
    return ScanChainLayout.from_dict(payload)


def write_layout(path: Union[str, Path], layout: ScanChainLayout) -> Path:
    return write_yaml_report(path, layout.to_dict())


def _interleave(rcs: List[CellRef], scs: List[CellRef]) -> List[CellRef]:
    """
    SC j goes in front of RC floor((j+1)*F/(K+1)), which spaces SCs evenly and
    keeps at least one RC downstream of every SC.
    """
    if not rcs:
        return list(scs)
    slots: Dict[int, List[CellRef]] = {}
    for j, sc in enumerate(scs):
        slots.setdefault((j + 1) * len(rcs) // (len(scs) + 1), []).append(sc)
    order: List[CellRef] = []
    for r, rc in enumerate(rcs):
        order.extend(slots.get(r, []))
        order.append(rc)
    return order


def stitch(locked: LockedDesign, n_chains: int, seed: int,
           policy: Union[str, StitchPolicy] = StitchPolicy.INTERLEAVED,
           explicit: Optional[Sequence[Sequence[Union[str, CellRef]]]] = None) -> ScanChainLayout:
    """Distribute all RCs and SCs round-robin into n_chains chains."""
    policy = StitchPolicy(policy)
    n_flops, n_keys = locked.netlist.num_flops, locked.key_bits

    if policy is StitchPolicy.EXPLICIT:
        if explicit is None:
            raise StitchError("explicit stitching needs the chain contents")
        layout = ScanChainLayout.explicit(explicit)
        layout = ScanChainLayout(layout.chains, StitchPolicy.EXPLICIT.value, seed)
        layout.validate(n_flops, n_keys)
        return layout

    total = n_flops + n_keys
    if n_chains < 1 or n_chains > total:
        raise StitchError(f"cannot stitch {total} cells into {n_chains} chains",
                          {"cells": total, "chains": n_chains})

    rng = random.Random(seed)
    rcs = [CellRef.rc(i) for i in range(n_flops)]
    scs = [CellRef.sc(k) for k in range(n_keys)]
    if policy is StitchPolicy.INTERLEAVED:
        rng.shuffle(rcs)
        rng.shuffle(scs)
        order = _interleave(rcs, scs)
    else:
        order = rcs + scs
        rng.shuffle(order)

    chains: List[List[CellRef]] = [[] for _ in range(n_chains)]
    for t, cell in enumerate(order):
        chains[t % n_chains].append(cell)
    layout = ScanChainLayout(tuple(tuple(chain) for chain in chains), policy.value, seed)
    layout.validate(n_flops, n_keys)
    logger.info("Stitched %d RCs and %d SCs into %d chain(s) (%s, seed=%d)",
                n_flops, n_keys, n_chains, policy.value, seed)
    return layout
