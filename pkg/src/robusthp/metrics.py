"""Beampatterns, achievable rates and closed-form flop estimators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cancellation import CompositePrecoder
from .geometry import ArrayGeometry, ChannelRealization, steering_vector

__all__ = [
    "Beampattern",
    "RateReport",
    "FlopEstimate",
    "beampattern",
    "per_user_rate",
    "rate_report",
    "flops_mo",
    "flops_gp",
    "flops_lsp",
]


@dataclass
class Beampattern:
    """Array gain |alpha(phi)^H f| sampled over a set of angles."""

    angles_deg: np.ndarray
    gains: np.ndarray


@dataclass
class RateReport:
    """Per-receiver and sum rates at one operating point."""

    per_user_bps_hz: list[float]
    sum_bps_hz: float
    snr_db: float
    sigma_sq: float
    power: float


@dataclass(frozen=True)
class FlopEstimate:
    scheme: str
    count: float
    params: tuple


def beampattern(
    precoder_column: np.ndarray, angles_deg, bs: ArrayGeometry
) -> Beampattern:
    angles = np.atleast_1d(np.asarray(angles_deg, dtype=float))
    rows = np.vstack([steering_vector(a, bs).conj() for a in angles])
    gains = np.abs(rows @ np.asarray(precoder_column, dtype=complex))
    return Beampattern(angles, gains)


def _link_gains(
    channel: ChannelRealization, combiner: np.ndarray, matrix: np.ndarray
) -> np.ndarray:
    """Squared magnitudes |w^H H f_j|^2 for every precoder column."""
    row = combiner.conj() @ channel.matrix
    return np.abs(row @ matrix) ** 2


def per_user_rate(
    channel: ChannelRealization,
    combiner: np.ndarray,
    composite: CompositePrecoder,
    user_index: int,
    power: float,
    sigma_sq: float,
) -> float:
    """Achievable rate of one receiver, interference summed over the others."""
    if not power > 0 or not sigma_sq > 0:
        raise ValueError("power and sigma_sq must be positive")
    gains = _link_gains(channel, combiner, composite.matrix)
    k = composite.matrix.shape[1]
    per_stream = power / k
    signal = per_stream * gains[user_index]
    interference = per_stream * (np.sum(gains) - gains[user_index])
    return float(np.log2(1.0 + signal / (sigma_sq + interference)))


def rate_report(
    channels: list[ChannelRealization],
    combiners: list[np.ndarray],
    composite: CompositePrecoder,
    power: float,
    sigma_sq: float,
    snr_db: float,
) -> RateReport:
    rates = [
        per_user_rate(ch, w, composite, i, power, sigma_sq)
        for i, (ch, w) in enumerate(zip(channels, combiners))
    ]
    return RateReport(rates, float(sum(rates)), snr_db, sigma_sq, power)


def _check_positive(**params: float) -> None:
    for name, value in params.items():
        if not value > 0:
            raise ValueError(f"{name} must be positive")


def flops_mo(m_t: int, n_rf: int, k: int, eta_ls: int, eta_max: int) -> float:
    """Flop count of the manifold-optimization analog solver (estimator only)."""
    _check_positive(m_t=m_t, n_rf=n_rf, k=k, eta_ls=eta_ls, eta_max=eta_max)
    inner = (
        2.0 * eta_ls * (m_t * n_rf + 2.0 * eta_ls) * k
        + (eta_ls + 1.0) * m_t * n_rf**2
        + (2.0 * eta_ls + 14.0) * n_rf
    )
    return 2.0 * eta_max * m_t * inner


def flops_gp(m_t: int, n_rf: int, k: int, eta_max: int) -> float:
    """Flop count of the gradient-projection analog solver."""
    _check_positive(m_t=m_t, n_rf=n_rf, k=k, eta_max=eta_max)
    return float(eta_max) * m_t * (7.0 * n_rf * (m_t * k + 1.0) + 2.0 * k)


def flops_lsp(m_t: int, n_rf: int, k: int) -> float:
    """Flop count of the one-shot least-squares phase-extraction solver."""
    _check_positive(m_t=m_t, n_rf=n_rf, k=k)
    return float(m_t) * n_rf * (m_t * k + 1.0)
