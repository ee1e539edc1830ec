"""Problem data model, random channel instance generation, and (de)serialization.

An instance holds everything a solver needs: the channel gain matrix, power
budgets, user weights, the multiplexing limit M, and the number of power
discretization levels J. Instances are generated from a physical channel
configuration (COST-231-Hata path loss, log-normal shadowing, Rayleigh
fading) or read from a JSON file.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "ChannelModelConfig",
    "ProblemInstance",
    "SicOrder",
    "InstanceFormatError",
    "generate_instance",
    "draw_channel",
    "sic_order",
    "read_instance",
    "write_instance",
]

# COST-231-Hata urban-macro geometry (model parameters are not tied to the
# instance config; they only enter through the generated gains).
BS_HEIGHT_M = 30.0
UE_HEIGHT_M = 1.5
URBAN_CORRECTION_DB = 3.0
MIN_DISTANCE_M = 10.0


class InstanceFormatError(ValueError):
    """Raised when an instance file is malformed; message names the field."""


@dataclass(frozen=True)
class ChannelModelConfig:
    """Physical-layer parameters for random instance generation."""

    cell_radius_m: float = 200.0
    carrier_hz: float = 2.0e9
    bandwidth_hz: float = 4.5e6
    shadowing_db: float = 8.0
    noise_psd_dbm_hz: float = -173.0
    seed: int = 0
    # Fraction of users placed in the edge annulus r in [0.7*R, R]; None
    # places all users uniformly over the disk.
    edge_fraction: float | None = None

    def __post_init__(self):
        for name in ("cell_radius_m", "carrier_hz", "bandwidth_hz", "shadowing_db"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.edge_fraction is not None and not 0.0 <= self.edge_fraction <= 1.0:
            raise ValueError(f"edge_fraction must be in [0, 1], got {self.edge_fraction}")

    def noise_per_subcarrier(self, n_subcarriers: int) -> float:
        """Noise power (W) for one subcarrier when the band is split N ways."""
        psd_w = 10.0 ** (self.noise_psd_dbm_hz / 10.0) * 1e-3
        return psd_w * self.bandwidth_hz / n_subcarriers


@dataclass(frozen=True)
class ProblemInstance:
    """Complete input to any solver in this package.

    gains[k, n] is the linear channel power gain of user k on subcarrier n.
    """

    K: int
    N: int
    gains: np.ndarray  # (K, N)
    weights: np.ndarray  # (K,)
    P_tot: float
    P_user: np.ndarray  # (K,)
    M: int
    noise: float
    J: int

    def __post_init__(self):
        object.__setattr__(self, "gains", np.asarray(self.gains, dtype=float))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))
        object.__setattr__(self, "P_user", np.asarray(self.P_user, dtype=float))
        if self.K < 1 or self.N < 1:
            raise ValueError(f"K and N must be >= 1, got K={self.K}, N={self.N}")
        if self.gains.shape != (self.K, self.N):
            raise ValueError(f"gains must have shape ({self.K}, {self.N}), got {self.gains.shape}")
        if not np.all(np.isfinite(self.gains)) or np.any(self.gains <= 0):
            raise ValueError("all channel gains must be strictly positive and finite")
        if self.weights.shape != (self.K,) or np.any(self.weights <= 0):
            raise ValueError("weights must be a positive length-K vector")
        if self.P_tot <= 0:
            raise ValueError(f"P_tot must be positive, got {self.P_tot}")
        if self.P_user.shape != (self.K,) or np.any(self.P_user <= 0):
            raise ValueError("P_user must be a positive length-K vector")
        if not 1 <= self.M <= self.K:
            raise ValueError(f"M must satisfy 1 <= M <= K, got M={self.M}, K={self.K}")
        if self.noise <= 0:
            raise ValueError(f"noise must be positive, got {self.noise}")
        if self.J < 1:
            raise ValueError(f"J must be >= 1, got {self.J}")

    def with_weights(self, weights) -> "ProblemInstance":
        return replace(self, weights=np.asarray(weights, dtype=float))


@dataclass(frozen=True)
class SicOrder:
    """Per-subcarrier decoding order: descending channel gain, ties broken by
    ascending user index.

    ranked[i, n] is the user at position i (0-based) on subcarrier n;
    position[k, n] is the inverse permutation.  A user is interfered only by
    users at strictly earlier positions.
    """

    ranked: np.ndarray  # (K, N) int
    position: np.ndarray  # (K, N) int


def sic_order(inst: ProblemInstance) -> SicOrder:
    """Compute the SIC decoding order for every subcarrier."""
    ranked = np.empty((inst.K, inst.N), dtype=np.intp)
    position = np.empty((inst.K, inst.N), dtype=np.intp)
    for n in range(inst.N):
        # stable sort on -gain keeps ascending user index among equal gains
        order = np.argsort(-inst.gains[:, n], kind="stable")
        ranked[:, n] = order
        position[order, n] = np.arange(inst.K)
    return SicOrder(ranked=ranked, position=position)


def _cost231_hata_db(distance_m: np.ndarray, carrier_hz: float) -> np.ndarray:
    """COST-231-Hata urban path loss in dB."""
    f_mhz = carrier_hz / 1e6
    d_km = np.maximum(distance_m, MIN_DISTANCE_M) / 1000.0
    a_hm = (1.1 * math.log10(f_mhz) - 0.7) * UE_HEIGHT_M - (1.56 * math.log10(f_mhz) - 0.8)
    return (
        46.3
        + 33.9 * math.log10(f_mhz)
        - 13.82 * math.log10(BS_HEIGHT_M)
        - a_hm
        + (44.9 - 6.55 * math.log10(BS_HEIGHT_M)) * np.log10(d_km)
        + URBAN_CORRECTION_DB
    )


def draw_channel(cfg: ChannelModelConfig, K: int, N: int):
    """Draw one channel realization.

    Returns (gains, distances): gains is a (K, N) matrix of linear power
    gains (path loss x shadowing x unit-mean Rayleigh fading power), and
    distances the BS-user distances in meters.  Deterministic in cfg.seed.
    """
    if K < 1 or N < 1:
        raise ValueError(f"K and N must be >= 1, got K={K}, N={N}")
    rng = np.random.default_rng(cfg.seed)
    R = cfg.cell_radius_m
    u = rng.random(K)
    if cfg.edge_fraction is None:
        # uniform over the disk
        distances = R * np.sqrt(u)
    else:
        n_edge = int(math.ceil(cfg.edge_fraction * K))
        r_in = 0.7 * R
        distances = np.empty(K)
        # first n_edge users in the edge annulus, the rest in the center zone
        distances[:n_edge] = np.sqrt(r_in**2 + u[:n_edge] * (R**2 - r_in**2))
        distances[n_edge:] = np.sqrt(u[n_edge:] * r_in**2)
    distances = np.maximum(distances, MIN_DISTANCE_M)

    pl_db = _cost231_hata_db(distances, cfg.carrier_hz)
    shadow_db = rng.normal(0.0, cfg.shadowing_db, size=K)
    large_scale = 10.0 ** (-(pl_db + shadow_db) / 10.0)  # (K,)
    fading = rng.exponential(1.0, size=(K, N))  # Rayleigh power, unit mean
    gains = large_scale[:, None] * fading
    return gains, distances


def generate_instance(
    cfg: ChannelModelConfig,
    K: int,
    N: int,
    M: int,
    J: int,
    P_tot: float,
    P_user,
    weights=None,
) -> ProblemInstance:
    """Generate a random instance from the channel configuration.

    P_user may be a scalar (uniform per-user limit) or a length-K vector.
    """
    gains, _ = draw_channel(cfg, K, N)
    P_user = np.broadcast_to(np.asarray(P_user, dtype=float), (K,)).copy()
    if weights is None:
        weights = np.ones(K)
    eta = cfg.noise_per_subcarrier(N)
    return ProblemInstance(
        K=K, N=N, gains=gains, weights=np.asarray(weights, dtype=float),
        P_tot=P_tot, P_user=P_user, M=M, noise=eta, J=J,
    )


# --- serialization ---------------------------------------------------------

_SCALAR_FIELDS = {"K": int, "N": int, "M": int, "J": int, "P_tot": float, "noise": float}
_VECTOR_FIELDS = ("P_user", "weights")


def write_instance(inst: ProblemInstance, path) -> None:
    """Write an instance as JSON with >= 12 significant digits per number."""
    doc = {
        "K": inst.K,
        "N": inst.N,
        "M": inst.M,
        "J": inst.J,
        "P_tot": inst.P_tot,
        "noise": inst.noise,
        "P_user": inst.P_user.tolist(),
        "weights": inst.weights.tolist(),
        "gains": inst.gains.tolist(),
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=1)
        f.write("\n")


def read_instance(path) -> ProblemInstance:
    """Read an instance file written by write_instance (or by hand)."""
    with open(path) as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise InstanceFormatError(f"{path}: invalid JSON at line {e.lineno}: {e.msg}") from e
    if not isinstance(doc, dict):
        raise InstanceFormatError(f"{path}: top-level value must be an object")
    for name in list(_SCALAR_FIELDS) + list(_VECTOR_FIELDS) + ["gains"]:
        if name not in doc:
            raise InstanceFormatError(f"{path}: missing field '{name}'")
    kwargs = {}
    for name, cast in _SCALAR_FIELDS.items():
        try:
            kwargs[name] = cast(doc[name])
        except (TypeError, ValueError) as e:
            raise InstanceFormatError(f"{path}: field '{name}' is not a number") from e
    for name in _VECTOR_FIELDS:
        try:
            kwargs[name] = np.asarray(doc[name], dtype=float)
        except (TypeError, ValueError) as e:
            raise InstanceFormatError(f"{path}: field '{name}' is not a numeric array") from e
    try:
        gains = np.asarray(doc["gains"], dtype=float)
    except (TypeError, ValueError) as e:
        raise InstanceFormatError(f"{path}: field 'gains' is not a numeric matrix") from e
    try:
        return ProblemInstance(gains=gains, **kwargs)
    except ValueError as e:
        raise InstanceFormatError(f"{path}: {e}") from e
