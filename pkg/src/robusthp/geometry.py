"""Uniform linear array geometry, sparse channels and beam misalignment sampling.

Angles are degrees at every public boundary and converted to radians
internally.  All random draws go through an explicit numpy Generator so that
callers control reproducibility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ArrayGeometry",
    "MisalignmentModel",
    "PathParams",
    "ChannelRealization",
    "steering_vector",
    "sample_misalignment",
    "generate_channel",
    "channel_from_paths",
    "receive_combiner",
]


@dataclass(frozen=True)
class ArrayGeometry:
    """A uniform linear array: element count and spacing over wavelength."""

    element_count: int
    spacing_ratio: float = 0.5

    def __post_init__(self):
        if self.element_count < 1:
            raise ValueError("element_count must be >= 1")
        if not self.spacing_ratio > 0:
            raise ValueError("spacing_ratio must be > 0")


@dataclass(frozen=True)
class MisalignmentModel:
    """Uniform beam-alignment error with standard deviation ``std_dev_deg``.

    The error is uniform on [-half_width_deg, +half_width_deg] with
    half_width_deg = sqrt(3) * std_dev_deg.  ``mainlobe_cap_deg`` is the
    alignment-failure bound: models whose half width exceeds it are rejected.
    """

    std_dev_deg: float
    mainlobe_cap_deg: float = math.inf
    half_width_deg: float = field(init=False)

    def __post_init__(self):
        if self.std_dev_deg < 0:
            raise ValueError("std_dev_deg must be >= 0")
        half_width = math.sqrt(3.0) * self.std_dev_deg
        if half_width > self.mainlobe_cap_deg:
            raise ValueError(
                "misalignment half width exceeds the mainlobe bound: "
                f"{half_width:.4f} > {self.mainlobe_cap_deg:.4f} deg"
            )
        object.__setattr__(self, "half_width_deg", half_width)


@dataclass(frozen=True)
class PathParams:
    """Complex gain plus departure/arrival angles of one propagation path."""

    complex_gain: complex
    aod_deg: float
    aoa_deg: float

    def __post_init__(self):
        for angle in (self.aod_deg, self.aoa_deg):
            if not 0.0 <= angle <= 180.0:
                raise ValueError(f"path angle {angle} outside [0, 180] degrees")


@dataclass
class ChannelRealization:
    """One channel draw: matrix, paths and the estimated strongest-path angles."""

    matrix: np.ndarray
    paths: list[PathParams]
    strongest_index: int
    est_aod_deg: float
    est_aoa_deg: float

    @property
    def strongest(self) -> PathParams:
        return self.paths[self.strongest_index]


def steering_vector(angle_deg: float, geometry: ArrayGeometry) -> np.ndarray:
    """Unit-norm array response of a ULA toward ``angle_deg``.

    Element m (0-based) is exp(j * 2*pi * spacing_ratio * m * cos(theta)),
    the whole vector scaled by 1/sqrt(M).
    """
    if not np.isfinite(angle_deg):
        raise ValueError("steering angle must be finite")
    m = geometry.element_count
    phase = 2.0 * np.pi * geometry.spacing_ratio * np.cos(np.deg2rad(angle_deg))
    return np.exp(1j * phase * np.arange(m)) / np.sqrt(m)


def sample_misalignment(model: MisalignmentModel, rng: np.random.Generator) -> float:
    """Draw one alignment error in degrees, uniform on [-beta, +beta]."""
    beta = model.half_width_deg
    if beta == 0.0:
        return 0.0
    return float(rng.uniform(-beta, beta))


def channel_from_paths(
    bs: ArrayGeometry, ru: ArrayGeometry, paths: list[PathParams]
) -> np.ndarray:
    """Assemble the M_r x M_t channel matrix from explicit path parameters."""
    if not paths:
        raise ValueError("at least one path is required")
    scale = np.sqrt(bs.element_count * ru.element_count / len(paths))
    h = np.zeros((ru.element_count, bs.element_count), dtype=complex)
    for p in paths:
        rx = steering_vector(p.aoa_deg, ru)
        tx = steering_vector(p.aod_deg, bs)
        h += p.complex_gain * np.outer(rx, tx.conj())
    return scale * h


def generate_channel(
    bs: ArrayGeometry,
    ru: ArrayGeometry,
    path_count: int,
    gain_var: float,
    model: MisalignmentModel,
    rng: np.random.Generator,
) -> ChannelRealization:
    """Draw a sparse multipath channel and the misaligned angle estimates.

    Path gains are i.i.d. circular complex normal with variance ``gain_var``;
    departure and arrival angles are uniform on [0, 180] degrees.  The
    estimated angles are the strongest path's true angles plus independent
    misalignment draws (one for the transmit side, one for the receive side).
    """
    if path_count < 1:
        raise ValueError("path_count must be >= 1")
    if not gain_var > 0:
        raise ValueError("gain_var must be > 0")

    sigma = np.sqrt(gain_var / 2.0)
    gains = sigma * (
        rng.standard_normal(path_count) + 1j * rng.standard_normal(path_count)
    )
    aods = rng.uniform(0.0, 180.0, path_count)
    aoas = rng.uniform(0.0, 180.0, path_count)
    paths = [
        PathParams(complex(g), float(aod), float(aoa))
        for g, aod, aoa in zip(gains, aods, aoas)
    ]
    matrix = channel_from_paths(bs, ru, paths)
    strongest = int(np.argmax(np.abs(gains)))
    est_aod = paths[strongest].aod_deg + sample_misalignment(model, rng)
    est_aoa = paths[strongest].aoa_deg + sample_misalignment(model, rng)
    return ChannelRealization(matrix, paths, strongest, est_aod, est_aoa)


def receive_combiner(channel: ChannelRealization, ru: ArrayGeometry) -> np.ndarray:
    """Receive combiner steering toward the estimated arrival angle."""
    return steering_vector(channel.est_aoa_deg, ru)
