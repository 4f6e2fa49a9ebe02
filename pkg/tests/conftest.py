"""Shared fixtures for the qoe-forge test suite."""

import numpy as np
import pytest

from qoe_forge.data_model import StreamingSession, generate_base_dataset
from qoe_forge.demographics import AugmentationConfig, augment_dataset


@pytest.fixture(scope="session")
def base450():
    return generate_base_dataset(450, seed=42)


@pytest.fixture(scope="session")
def aug2700(base450):
    return augment_dataset(base450, AugmentationConfig(seed=1))


def make_session(**overrides) -> StreamingSession:
    """A valid session with sensible defaults; override any field."""
    fields = dict(
        session_id=0,
        content_type="movie",
        device="tv",
        encoding_profile="h264_1080p",
        duration_s=300.0,
        bitrate_mean_kbps=4000.0,
        bitrate_std_kbps=400.0,
        vmaf_mean=80.0,
        vmaf_std=4.0,
        ssim_mean=0.95,
        qp_mean=26.0,
        stall_duration_s=0.0,
        stall_count=0,
        mos=70.0,
    )
    fields.update(overrides)
    return StreamingSession(**fields)


def random_session(rng: np.random.Generator) -> StreamingSession:
    """A random valid session for property-style checks."""
    stall_count = int(rng.integers(0, 5))
    stall = float(rng.uniform(0.1, 6.0)) if stall_count else 0.0
    return make_session(
        session_id=int(rng.integers(0, 10_000)),
        duration_s=float(rng.uniform(30, 600)),
        bitrate_mean_kbps=float(rng.uniform(300, 20_000)),
        bitrate_std_kbps=float(rng.uniform(0, 3_000)),
        vmaf_mean=float(rng.uniform(1, 100)),
        vmaf_std=float(rng.uniform(0, 15)),
        ssim_mean=float(rng.uniform(0.5, 1.0)),
        qp_mean=float(rng.uniform(10, 45)),
        stall_duration_s=stall,
        stall_count=stall_count,
        mos=float(rng.uniform(0, 100)),
    )
