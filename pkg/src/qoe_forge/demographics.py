"""Demographic profiles, per-session impact factors, and 6x MOS augmentation.

Six synthetic viewer classes carry sensitivity weights over four perception
channels (rebuffering, visual quality, bitrate, consistency). Augmentation
produces one adjusted copy of every base session per profile, perturbed with
seeded Gaussian noise and clipped to the [0, 100] MOS range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data_model import (
    AUGMENTED_SCHEMA,
    BITRATE_MAX_KBPS,
    BITRATE_MIN_KBPS,
    Dataset,
    StreamingSession,
    dataset_hash,
)
from .errors import DegenerateInputError, InvalidArgumentError


@dataclass(frozen=True)
class DemographicProfile:
    id: str
    w_rebuff: float
    w_quality: float
    w_bitrate: float
    w_consistency: float


# Weight table: (w_rebuff, w_quality, w_bitrate, w_consistency).
# Anchored orderings: gamers are most stall-averse (2.8) and elderly least
# (0.5); quality enthusiasts have the highest quality weight, mobile users
# the lowest. Overridable via the experiment config.
BUILTIN_PROFILES: tuple[DemographicProfile, ...] = (
    DemographicProfile("casual_viewer", 1.0, 1.0, 1.0, 1.0),
    DemographicProfile("quality_enthusiast", 1.2, 2.5, 1.2, 1.5),
    DemographicProfile("mobile_user", 1.5, 0.7, 0.6, 1.0),
    DemographicProfile("gamer_sports", 2.8, 1.0, 1.8, 0.8),
    DemographicProfile("elderly_user", 0.5, 0.8, 0.5, 2.0),
    DemographicProfile("professional_critical", 0.8, 2.2, 1.2, 1.5),
)

PROFILE_IDS = tuple(p.id for p in BUILTIN_PROFILES)
_PROFILE_INDEX = {p.id: i for i, p in enumerate(BUILTIN_PROFILES)}


def profile_by_id(profile_id: str) -> DemographicProfile:
    for p in BUILTIN_PROFILES:
        if p.id == profile_id:
            return p
    raise InvalidArgumentError(f"unknown demographic profile {profile_id!r}")


@dataclass(frozen=True)
class ImpactFactors:
    rebuff_impact: float      # [0,1], saturates at 2 s of stalling
    quality_boost: float      # [0,1]
    quality_variance: float   # >= 0
    smoothness: float         # 1 - min(quality_variance, 1)
    bitrate_norm: float       # [0,1], log-scale position in the bitrate range


@dataclass(frozen=True)
class AugmentationConfig:
    noise_sigma: float = 2.0
    adjustment_scale: float = 12.0
    seed: int = 0

    def __post_init__(self):
        if self.noise_sigma < 0:
            raise InvalidArgumentError("noise_sigma must be >= 0")
        if self.adjustment_scale <= 0:
            raise InvalidArgumentError("adjustment_scale must be > 0")


def compute_impact_factors(session: StreamingSession) -> ImpactFactors:
    """Derive the perception channels from a session's raw features."""
    if session.vmaf_mean <= 0 or session.bitrate_mean_kbps <= 0:
        raise DegenerateInputError(
            "vmaf_mean and bitrate_mean_kbps must be > 0 to compute factors"
        )
    rebuff = min(session.stall_duration_s / 2.0, 1.0)
    quality = 0.5 * (session.vmaf_mean / 100.0 + session.ssim_mean)
    variance = 0.5 * (
        session.vmaf_std / session.vmaf_mean
        + session.bitrate_std_kbps / session.bitrate_mean_kbps
    )
    smoothness = 1.0 - min(variance, 1.0)
    bitrate_norm = min(
        max(
            math.log2(session.bitrate_mean_kbps / BITRATE_MIN_KBPS)
            / math.log2(BITRATE_MAX_KBPS / BITRATE_MIN_KBPS),
            0.0,
        ),
        1.0,
    )
    return ImpactFactors(rebuff, quality, variance, smoothness, bitrate_norm)


def adjust_mos(
    base_mos: float,
    factors: ImpactFactors,
    profile: DemographicProfile,
    cfg: AugmentationConfig,
) -> float:
    """Pre-noise adjusted score: linear in the centered factors, clipped.

    The neutral point (quality_boost = smoothness = bitrate_norm = 1/2,
    rebuff_impact = 0) leaves the base MOS unchanged for every profile.
    """
    beta = cfg.adjustment_scale
    delta = beta * (
        profile.w_quality * (factors.quality_boost - 0.5)
        - profile.w_rebuff * factors.rebuff_impact
        + profile.w_consistency * (factors.smoothness - 0.5)
        + profile.w_bitrate * (factors.bitrate_norm - 0.5)
    )
    return min(max(base_mos + delta, 0.0), 100.0)


def _row_rng(seed: int, base_session_id: int, profile_id: str) -> np.random.Generator:
    # Seed per (session, profile) so augmentation is order-independent.
    return np.random.default_rng(
        [int(seed) & 0xFFFFFFFFFFFFFFFF, int(base_session_id), _PROFILE_INDEX[profile_id]]
    )


def augment_dataset(
    base: Dataset,
    cfg: AugmentationConfig,
    profiles: tuple[DemographicProfile, ...] = BUILTIN_PROFILES,
) -> Dataset:
    """Expand a base dataset sixfold, one adjusted copy per demographic.

    Output rows are grouped by base session with profiles in builtin order;
    ``session_id`` is reassigned to keep it unique, ``base_session_id``
    records the source session.
    """
    if len(base) == 0:
        raise InvalidArgumentError("base dataset is empty")
    if base.provenance.get("source") == "augmented":
        raise InvalidArgumentError("base dataset is already augmented")

    rows = []
    next_id = 0
    if tuple(p.id for p in profiles) != PROFILE_IDS:
        raise InvalidArgumentError("profiles must cover the six builtin ids in order")
    for row, session in zip(base.rows, base.sessions()):
        factors = compute_impact_factors(session)
        for profile in profiles:
            adjusted = adjust_mos(session.mos, factors, profile, cfg)
            rng = _row_rng(cfg.seed, session.session_id, profile.id)
            noisy = adjusted + rng.normal(0.0, cfg.noise_sigma)
            new_row = dict(row)
            new_row["session_id"] = next_id
            new_row["mos"] = float(min(max(noisy, 0.0), 100.0))
            new_row["demographic"] = profile.id
            new_row["base_session_id"] = session.session_id
            rows.append(new_row)
            next_id += 1

    return Dataset(
        schema=AUGMENTED_SCHEMA,
        rows=rows,
        provenance={
            "source": "augmented",
            "seed": int(cfg.seed),
            "parent_hash": dataset_hash(base),
        },
    )
