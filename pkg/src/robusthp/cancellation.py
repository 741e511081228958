"""Second-stage zero-forcing of residual inter-receiver interference.

Works on the effective (combiner-channel-hybrid) scalar channels, so any
interference the factorization left behind is removed exactly, regardless of
how good the analog/baseband approximation was.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .digital import _phase_normalize_columns
from .errors import DegenerateChannelError
from .geometry import ChannelRealization
from .hybrid import HybridPrecoder

__all__ = [
    "EffectiveChannelSet",
    "CompositePrecoder",
    "effective_channels",
    "bd_precoder",
    "compose_hybrid",
]

_RANK_RTOL = 1e-10


@dataclass
class EffectiveChannelSet:
    """K x K matrix; row k is receiver k's effective channel through the hybrid."""

    rows: np.ndarray


@dataclass
class CompositePrecoder:
    """Final M_t x K transmit precoder, total power K."""

    matrix: np.ndarray
    scheme_tag: str


def effective_channels(
    channels: list[ChannelRealization],
    combiners: list[np.ndarray],
    hybrid: HybridPrecoder,
) -> EffectiveChannelSet:
    """Row k = w_k^H H_k F_RF F_BB."""
    if len(channels) != len(combiners):
        raise ValueError("channel and combiner counts disagree")
    product = hybrid.composite
    rows = np.vstack(
        [w.conj() @ ch.matrix @ product for ch, w in zip(channels, combiners)]
    )
    if rows.shape != (len(channels), product.shape[1]):
        raise ValueError(f"unexpected effective channel shape {rows.shape}")
    return EffectiveChannelSet(rows)


def bd_precoder(effective: EffectiveChannelSet) -> np.ndarray:
    """K x K zero-forcing stage; column k nulls every other effective row.

    Column k is the last right singular vector of the effective matrix with
    row k deleted.  With a single receiver there is nothing to null and the
    stage is the scalar identity.
    """
    rows = np.asarray(effective.rows, dtype=complex)
    k = rows.shape[0]
    if k == 1:
        return np.eye(1, dtype=complex)
    columns = np.zeros((k, k), dtype=complex)
    for i in range(k):
        others = np.delete(rows, i, axis=0)
        _, s, vh = np.linalg.svd(others, full_matrices=True)
        if s[-1] <= _RANK_RTOL * s[0]:
            raise DegenerateChannelError(
                f"effective channels excluding receiver {i} are rank deficient"
            )
        columns[:, i] = vh[-1].conj()
    return _phase_normalize_columns(columns)


def compose_hybrid(
    hybrid: HybridPrecoder, bd: np.ndarray, scheme_tag: str = "HP"
) -> CompositePrecoder:
    """Scale the analog-baseband-ZF product to total power K."""
    product = hybrid.composite @ bd
    k = product.shape[1]
    norm = np.linalg.norm(product)
    if norm <= 0:
        raise DegenerateChannelError("composite precoder has zero norm")
    return CompositePrecoder(product * (np.sqrt(k) / norm), scheme_tag)
