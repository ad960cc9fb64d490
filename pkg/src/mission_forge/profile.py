"""Tunable degradation profile for the 2.5D world.

These constants stand in for the rendering-level weather and sensor
effects of a photorealistic simulator. They live in one place so tests
can pin them and scenario authors can see every knob.
"""

from __future__ import annotations

import numpy as np

# Detection range shrinks linearly with the worst weather axis:
# effective_range = max_range * (1 - WEATHER_RANGE_PENALTY * max(snow, rain, fog))
WEATHER_RANGE_PENALTY = 0.7

# Probability that a reported attribute is replaced by a decoy value:
# p_corrupt = CORRUPT_NOISE_COEFF * camera_noise + CORRUPT_WEATHER_COEFF * max(snow, rain, fog)
CORRUPT_NOISE_COEFF = 0.5
CORRUPT_WEATHER_COEFF = 0.3

# Horizontal drift at full wind (wind_speed_norm = 1), meters per second.
WIND_DRIFT_FULL = 3.0

# Decoy pools used when corrupting string attributes, keyed by attribute name.
DECOY_VALUES: dict[str, list[str]] = {
    "color": ["black", "blue", "gray", "green", "red", "silver", "white"],
    "model": ["hatchback", "impala", "civic", "pickup", "sedan", "suv", "van"],
    "shirt_color": ["black", "blue", "green", "red", "white", "yellow"],
}
FALLBACK_DECOYS = ["alpha", "bravo", "charlie", "delta"]


def decoy_value(name: str, true_value: object, rng: np.random.Generator) -> object:
    """Deterministically draw a plausible wrong value for an attribute."""
    if isinstance(true_value, bool):
        return not true_value
    if isinstance(true_value, (int, float)):
        return true_value + int(rng.integers(1, 4))
    pool = [v for v in DECOY_VALUES.get(name, FALLBACK_DECOYS) if v != true_value]
    if not pool:
        pool = [v for v in FALLBACK_DECOYS if v != true_value] or ["unknown"]
    return pool[int(rng.integers(0, len(pool)))]
