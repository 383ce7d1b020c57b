"""Radar network geometry, point targets and jammers.

Angles are radians internally; degrees are only accepted at the config
boundary (see :mod:`sfmimo.harness.config`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT = 3.0e8  # m/s
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PolarNode:
    """Antenna position in polar coordinates around the array centre."""

    radius: float
    azimuth: float

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError(f"node radius must be >= 0, got {self.radius}")
        object.__setattr__(self, "azimuth", float(self.azimuth) % TWO_PI)

    @property
    def xy(self) -> tuple[float, float]:
        return (self.radius * math.cos(self.azimuth), self.radius * math.sin(self.azimuth))


@dataclass(frozen=True)
class Target:
    """Point target moving at constant radial speed.

    ``speed`` is positive for a closing target: range at time t is
    ``initial_range - speed * t``.
    """

    azimuth: float
    speed: float
    initial_range: float
    reflection: complex = 1.0 + 0.0j

    def __post_init__(self):
        if self.initial_range <= 0:
            raise ValueError(f"target range must be > 0, got {self.initial_range}")

    def doppler(self, carrier: float) -> float:
        return 2.0 * self.speed * carrier / SPEED_OF_LIGHT

    def absorbed_coefficient(self, carrier: float) -> complex:
        """Reflection coefficient with the constant-carrier range phase folded in."""
        return self.reflection * np.exp(-2j * math.pi * 2.0 * self.initial_range * carrier / SPEED_OF_LIGHT)


@dataclass(frozen=True)
class Jammer:
    """Stationary noise emitter. ``amplitude`` scales a unit-power Gaussian waveform."""

    range: float
    azimuth: float
    amplitude: float

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError(f"jammer amplitude must be >= 0, got {self.amplitude}")


@dataclass(frozen=True)
class Scenario:
    tx_nodes: tuple[PolarNode, ...]
    rx_nodes: tuple[PolarNode, ...]
    targets: tuple[Target, ...] = ()
    jammers: tuple[Jammer, ...] = ()
    noise_power: float = 0.0
    carrier: float = 5e9
    seed: int = 0
    far_field_factor: float = 100.0

    def __post_init__(self):
        for name in ("tx_nodes", "rx_nodes", "targets", "jammers"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if not self.tx_nodes or not self.rx_nodes:
            raise ValueError("scenario needs at least one transmit and one receive node")
        if self.noise_power < 0:
            raise ValueError("noise power must be >= 0")
        aperture = self.max_node_radius
        limit = self.far_field_factor * aperture
        for t in self.targets:
            if t.initial_range < limit:
                raise ValueError(
                    f"target at {t.initial_range} m violates far field "
                    f"({self.far_field_factor:g} x {aperture:g} m node radius)"
                )

    @property
    def n_tx(self) -> int:
        return len(self.tx_nodes)

    @property
    def n_rx(self) -> int:
        return len(self.rx_nodes)

    @property
    def max_node_radius(self) -> float:
        return max(n.radius for n in self.tx_nodes + self.rx_nodes)


def place_nodes_uniform_disk(count: int, disk_radius: float, rng: np.random.Generator) -> list[PolarNode]:
    """Draw ``count`` nodes uniformly by area over a disk."""
    if count < 1:
        raise ValueError(f"need at least one node, got {count}")
    if disk_radius <= 0:
        raise ValueError(f"disk radius must be positive, got {disk_radius}")
    radii = disk_radius * np.sqrt(rng.uniform(0.0, 1.0, count))
    azimuths = rng.uniform(0.0, TWO_PI, count)
    return [PolarNode(float(r), float(a)) for r, a in zip(radii, azimuths)]


def eta(node: PolarNode, theta):
    """Projection of the node position onto direction ``theta`` (meters)."""
    return node.radius * np.cos(theta - node.azimuth)


def node_arrays(nodes) -> tuple[np.ndarray, np.ndarray]:
    radii = np.array([n.radius for n in nodes], dtype=float)
    azimuths = np.array([n.azimuth for n in nodes], dtype=float)
    return radii, azimuths


def eta_all(nodes, theta) -> np.ndarray:
    """Vectorised :func:`eta`; returns shape ``(len(nodes),) + np.shape(theta)``."""
    radii, azimuths = node_arrays(nodes)
    theta = np.asarray(theta, dtype=float)
    return radii.reshape((-1,) + (1,) * theta.ndim) * np.cos(
        theta[None, ...] - azimuths.reshape((-1,) + (1,) * theta.ndim)
    )
