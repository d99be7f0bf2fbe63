"""Synthetic data generator for the 5-sensor pressure sleeve.

Physics: the applied bag pressure, scaled by a per-sensor gain and offset
(foam and skin-layer attenuation), compresses a force-sensitive resistor
whose resistance falls as r0 / (1 + alpha * contact). The FSR sits in a
voltage divider against r_fixed, and a 12-bit ADC referenced to vcc samples
the divider. The motion scenario adds a shared-frequency sinusoid with
per-sensor phase plus sparse uniform spikes, in ADC counts.

Generation is deterministic: all draws come from one splitmix64 stream in a
documented order (per dataset: five gains, five offsets, a shared phase base
and five phase lags; then per row and sensor a noise Gaussian, a spike
uniform, and a spike magnitude only when the spike fires). Running the
motionless scenario is exactly the motion scenario with amplitude and spike
probability forced to zero, so both consume the stream identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .dataset import Dataset, label_for_pressure
from .errors import DataError
from .rng import SplitMix64
from .validation import N_SENSORS

DEFAULT_LEVELS = (0.0, 10.0, 20.0, 30.0, 40.0, 50.0)
DEFAULT_ROWS_PER_LEVEL = 80
SAMPLE_RATE_HZ = 10.0

GAIN_RANGE = (0.85, 1.0)
OFFSET_RANGE_MMHG = (-6.0, 6.0)
PHASE_LAG_RAD = 0.15


@dataclass(frozen=True)
class MotionProfile:
    """Motion-artifact model: sinusoid plus sparse spikes, in ADC counts."""

    amplitude: float = 40.0
    frequency: float = 0.5
    phase: tuple[float, ...] | None = None  # drawn per dataset when None
    spike_prob: float = 0.02
    spike_mag: float = 150.0


@dataclass(frozen=True)
class SimConfig:
    """Electrical and artifact parameters of the simulated sleeve."""

    vcc: float = 3.3
    r_fixed: float = 10_000.0
    r0: float = 100_000.0
    alpha: float = 0.04            # per mmHg
    adc_max: int = 4095
    sensor_gain: tuple[float, ...] | None = None    # drawn in [0.85, 1.0] when None
    sensor_offset: tuple[float, ...] | None = None  # drawn in [-6, 6] mmHg when None
    noise_sigma: float = 8.0       # ADC counts
    motion: MotionProfile = field(default_factory=MotionProfile)


def validate_config(config: SimConfig) -> None:
    if config.vcc <= 0 or config.r_fixed <= 0 or config.r0 <= 0 or config.alpha <= 0:
        raise ValueError("electrical parameters must be strictly positive")
    if config.adc_max < 1:
        raise ValueError("adc_max must be at least 1")
    if config.noise_sigma < 0:
        raise ValueError("noise_sigma cannot be negative")
    for name in ("sensor_gain", "sensor_offset"):
        vals = getattr(config, name)
        if vals is not None and len(vals) != N_SENSORS:
            raise ValueError(f"{name} needs {N_SENSORS} values")
    if config.sensor_gain is not None:
        for g in config.sensor_gain:
            if not 0 < g <= 1:
                raise ValueError("sensor gains must be in (0, 1]")
    m = config.motion
    if m.amplitude < 0 or m.spike_mag < 0:
        raise ValueError("motion magnitudes cannot be negative")
    if m.frequency <= 0:
        raise ValueError("motion frequency must be positive")
    if not 0 <= m.spike_prob <= 1:
        raise ValueError("spike_prob must be a probability")
    if m.phase is not None and len(m.phase) != N_SENSORS:
        raise ValueError(f"motion phase needs {N_SENSORS} values")


# scalar knobs settable from a config file; tuples stay programmatic
_CONFIG_FLOAT_KEYS = ("vcc", "r_fixed", "r0", "alpha", "noise_sigma")
_MOTION_FLOAT_KEYS = ("amplitude", "frequency", "spike_prob", "spike_mag")
CONFIG_KEYS = frozenset(_CONFIG_FLOAT_KEYS + _MOTION_FLOAT_KEYS + ("adc_max",))


def parse_config_text(text: str) -> dict[str, str]:
    """Parse key=value lines into a dict. '#' starts a comment.

    Raises ValueError with a line number on anything unparseable.
    """
    pairs: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not sep or not key:
            raise ValueError(f"config line {lineno}: expected key=value")
        if key in pairs:
            raise ValueError(f"config line {lineno}: duplicate key {key!r}")
        pairs[key] = value
    return pairs


def config_from_mapping(pairs: dict[str, str], base: SimConfig | None = None) -> SimConfig:
    """Apply simulator keys from a parsed config file over base (defaults).

    Only keys in CONFIG_KEYS are consumed; the caller routes the rest.
    """
    cfg = base or SimConfig()
    motion = cfg.motion
    for key, raw in pairs.items():
        if key not in CONFIG_KEYS:
            continue
        try:
            value = int(raw) if key == "adc_max" else float(raw)
        except ValueError:
            raise ValueError(f"config key {key!r}: bad number {raw!r}") from None
        if key in _MOTION_FLOAT_KEYS:
            motion = replace(motion, **{key: value})
        else:
            cfg = replace(cfg, **{key: value})
    cfg = replace(cfg, motion=motion)
    validate_config(cfg)
    return cfg


def sensor_response(
    bag_pressure: float, sensor_index: int, config: SimConfig, rng: SplitMix64 | None = None
) -> int:
    """ADC counts for one sensor at the given bag pressure.

    With an rng, adds a rounded Gaussian noise term (sigma in counts). The
    result is clamped to [0, adc_max]. Without explicit gain/offset arrays
    the sensor is ideal (gain 1, offset 0).
    """
    if bag_pressure < 0:
        raise ValueError("bag pressure cannot be negative")
    if not 0 <= sensor_index < N_SENSORS:
        raise ValueError(f"sensor_index must be in [0, {N_SENSORS})")
    gain = config.sensor_gain[sensor_index] if config.sensor_gain else 1.0
    offset = config.sensor_offset[sensor_index] if config.sensor_offset else 0.0
    contact = max(0.0, gain * bag_pressure + offset)
    r_fsr = config.r0 / (1.0 + config.alpha * contact)
    v = config.vcc * config.r_fixed / (config.r_fixed + r_fsr)
    counts = round(v / config.vcc * config.adc_max)
    if rng is not None:
        counts += round(rng.normal(0.0, config.noise_sigma))
    return min(max(counts, 0), config.adc_max)


def motion_offset(t: float, sensor_index: int, config: SimConfig, rng: SplitMix64) -> float:
    """Signed motion artifact in counts at virtual time t seconds.

    Always consumes one uniform for the spike decision (and one more for the
    magnitude only when the spike fires), so scenarios with spike_prob 0
    stay stream-compatible with ones that merely never fire.
    """
    if t < 0:
        raise ValueError("time cannot be negative")
    if not 0 <= sensor_index < N_SENSORS:
        raise ValueError(f"sensor_index must be in [0, {N_SENSORS})")
    m = config.motion
    phase = m.phase[sensor_index] if m.phase else 0.0
    off = m.amplitude * math.sin(2.0 * math.pi * m.frequency * t + phase)
    if rng.random() < m.spike_prob:
        off += rng.uniform(-m.spike_mag, m.spike_mag)
    return off


def _resolve(config: SimConfig, rng: SplitMix64) -> SimConfig:
    # per-dataset draws, in a fixed order: gains, offsets, phase base + lags
    gain = config.sensor_gain or tuple(
        rng.uniform(*GAIN_RANGE) for _ in range(N_SENSORS)
    )
    offset = config.sensor_offset or tuple(
        rng.uniform(*OFFSET_RANGE_MMHG) for _ in range(N_SENSORS)
    )
    if config.motion.phase:
        phase = config.motion.phase
    else:
        # one mechanical motion drives all sensors; the foam transmits it
        # with a small per-sensor lag, so phases are common-mode plus jitter
        base = rng.uniform(0.0, 2.0 * math.pi)
        phase = tuple(
            base + rng.uniform(0.0, PHASE_LAG_RAD) for _ in range(N_SENSORS)
        )
    return replace(
        config,
        sensor_gain=gain,
        sensor_offset=offset,
        motion=replace(config.motion, phase=phase),
    )


def generate_dataset(
    scenario: str,
    config: SimConfig | None = None,
    seed: int = 0,
    levels: tuple[float, ...] = DEFAULT_LEVELS,
    rows_per_level: int = DEFAULT_ROWS_PER_LEVEL,
) -> Dataset:
    """Simulate one collection run: rows_per_level rows at each bag level.

    Rows are level-major at 10 Hz virtual time; labels follow the 30 mmHg
    rule. Same (scenario, config, seed, levels, rows_per_level) means the
    same dataset, byte for byte.
    """
    if scenario not in ("motionless", "motion"):
        raise ValueError(f"unknown scenario {scenario!r}")
    config = config or SimConfig()
    validate_config(config)
    if rows_per_level < 1:
        raise ValueError("rows_per_level must be at least 1")
    if not levels:
        raise DataError("need at least one pressure level")
    for lv in levels:
        if lv < 0:
            raise ValueError("pressure levels cannot be negative")

    rng = SplitMix64(seed)
    cfg = _resolve(config, rng)
    if scenario == "motionless":
        cfg = replace(cfg, motion=replace(cfg.motion, amplitude=0.0, spike_prob=0.0))

    n = len(levels) * rows_per_level
    timestamps = np.empty(n, dtype=np.int64)
    counts = np.empty((n, N_SENSORS), dtype=np.int64)
    pressures = np.empty(n, dtype=np.float64)
    labels = np.empty(n, dtype=np.uint8)

    row = 0
    for level in levels:
        for _ in range(rows_per_level):
            t = row / SAMPLE_RATE_HZ
            timestamps[row] = row * 100
            pressures[row] = level
            labels[row] = label_for_pressure(level)
            for i in range(N_SENSORS):
                c = sensor_response(level, i, cfg, rng)
                c += round(motion_offset(t, i, cfg, rng))
                counts[row, i] = min(max(c, 0), cfg.adc_max)
            row += 1

    return Dataset(
        scenario=scenario,
        timestamps=timestamps,
        counts=counts,
        pressures=pressures,
        labels=labels,
    )
