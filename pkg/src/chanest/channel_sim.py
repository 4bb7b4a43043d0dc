"""Synthetic multipath channel generation, normalization, and noisy observations.

Channels are sums of planar-wavefront path contributions over a uniform
rectangular array. Two named scenario presets (``env-A``, ``env-B``) provide
distinct propagation statistics so that training/testing on matched versus
mismatched environments can be exercised without external data.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import asdict, dataclass, replace

import numpy as np

from .errors import ConfigError
from .geometry import ArrayGeometry

_MAGIC = b"GMCD"
_FORMAT_VERSION = 1
_HEADER_FMT = "<4sIIIQQdI"  # magic, version, n_v, n_h, M, seed, norm scale, id length


@dataclass(frozen=True)
class ScenarioConfig:
    """Parameters of one synthetic propagation environment.

    Angles are radians; the per-path azimuth/elevation are drawn from wrapped
    Gaussians around the configured centers. Path delays are exponential with
    mean ``delay_spread_s``. With probability ``los_probability`` one dominant
    path carries the deterministic power fraction ``los_power_fraction``.
    """

    carrier_freq_hz: float
    num_paths_range: tuple[int, int]
    azimuth_center: float
    azimuth_spread: float
    elevation_center: float
    elevation_spread: float
    delay_spread_s: float
    los_probability: float
    los_power_fraction: float
    scenario_id: str
    seed: int

    def __post_init__(self):
        l_min, l_max = self.num_paths_range
        if l_min < 1 or l_max < l_min:
            raise ConfigError(f"invalid path count range [{l_min}, {l_max}]")
        if self.carrier_freq_hz <= 0.0 or self.delay_spread_s <= 0.0:
            raise ConfigError("carrier frequency and delay spread must be positive")
        if self.azimuth_spread < 0.0 or self.elevation_spread < 0.0:
            raise ConfigError("angular spreads must be nonnegative")
        for name in ("los_probability", "los_power_fraction"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {value}")


@dataclass(eq=False)
class Dataset:
    """A set of channel realizations normalized to unit average antenna power.

    ``samples`` has shape (M, N) with one channel per row. After construction
    the empirical mean of the squared channel norm equals N, and
    ``normalization_scale`` is the single scalar that was applied to achieve
    this.
    """

    geometry: ArrayGeometry
    scenario_id: str
    seed: int
    samples: np.ndarray
    normalization_scale: float

    @property
    def m(self) -> int:
        return self.samples.shape[0]


@dataclass(frozen=True, eq=False)
class Observation:
    """A noisy channel observation y = h + n with noise covariance sigma^2 I."""

    y: np.ndarray
    noise_var: float
    snr_db: float


PRESETS = {
    # Measurement-like stand-in: few paths, dominant line of sight, wide
    # horizontal spread relative to the vertical one.
    "env-A": ScenarioConfig(
        carrier_freq_hz=2.18e9,
        num_paths_range=(1, 5),
        azimuth_center=0.0,
        azimuth_spread=0.7,
        elevation_center=0.0,
        elevation_spread=0.12,
        delay_spread_s=1e-7,
        los_probability=0.7,
        los_power_fraction=0.7,
        scenario_id="env-A",
        seed=20231,
    ),
    # Simulator-like stand-in: richer scattering, shifted sector, weaker and
    # rarer line of sight, longer delays.
    "env-B": ScenarioConfig(
        carrier_freq_hz=2.18e9,
        num_paths_range=(4, 12),
        azimuth_center=0.9,
        azimuth_spread=0.35,
        elevation_center=0.15,
        elevation_spread=0.05,
        delay_spread_s=3e-7,
        los_probability=0.25,
        los_power_fraction=0.4,
        scenario_id="env-B",
        seed=20232,
    ),
}


def scenario_preset(name: str) -> ScenarioConfig:
    """Look up a named scenario preset."""
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown scenario preset {name!r}; known: {sorted(PRESETS)}") from None


def noise_var_from_snr_db(snr_db: float) -> float:
    """Noise variance sigma^2 = 10^(-snr_db/10) under unit antenna power."""
    return 10.0 ** (-snr_db / 10.0)


def steering_vector(geometry: ArrayGeometry, azimuth: float, elevation: float) -> np.ndarray:
    """Array response for a planar wavefront from (azimuth, elevation).

    The entry at antenna (v, h) is
    exp(j 2 pi (spacing_h * h * sin(az) cos(el) + spacing_v * v * sin(el))),
    so every entry has unit modulus and ||a||^2 = N.
    """
    v, h = geometry.antenna_indices()
    phase = 2.0 * np.pi * (
        geometry.spacing_h * h * np.sin(azimuth) * np.cos(elevation)
        + geometry.spacing_v * v * np.sin(elevation)
    )
    return np.exp(1j * phase)


def _steering_matrix(geometry: ArrayGeometry, azimuths: np.ndarray, elevations: np.ndarray) -> np.ndarray:
    """Stacked steering vectors, one row per path."""
    v, h = geometry.antenna_indices()
    phase = 2.0 * np.pi * (
        geometry.spacing_h * np.outer(np.sin(azimuths) * np.cos(elevations), h)
        + geometry.spacing_v * np.outer(np.sin(elevations), v)
    )
    return np.exp(1j * phase)


def _wrap_angle(angle: np.ndarray) -> np.ndarray:
    return np.mod(angle + np.pi, 2.0 * np.pi) - np.pi


def _path_powers(delays: np.ndarray, delay_spread_s: float, has_los: bool, los_fraction: float) -> np.ndarray:
    """Per-path powers, summing to one for every draw.

    Diffuse path powers decay exponentially in delay. When a line-of-sight
    path is present it sits at index 0 and carries ``los_fraction`` of the
    total power (all of it if it is the only path).
    """
    weights = np.exp(-delays / delay_spread_s)
    if has_los:
        if delays.size == 1:
            return np.ones(1)
        diffuse = weights[1:]
        diffuse = diffuse / diffuse.sum() * (1.0 - los_fraction)
        return np.concatenate(([los_fraction], diffuse))
    return weights / weights.sum()


def sample_channel(config: ScenarioConfig, geometry: ArrayGeometry, rng: np.random.Generator) -> np.ndarray:
    """Draw one channel realization h = sum_l g_l a(az_l, el_l) exp(-2 pi j f_c tau_l).

    Diffuse path gains are complex Gaussian with exponentially delay-decaying
    powers; the line-of-sight gain has deterministic magnitude and uniform
    phase. Powers are normalized per draw, so E[||h||^2] = N before any
    dataset-level normalization.
    """
    l_min, l_max = config.num_paths_range
    num_paths = int(rng.integers(l_min, l_max + 1))
    has_los = bool(rng.random() < config.los_probability)
    azimuths = _wrap_angle(config.azimuth_center + config.azimuth_spread * rng.standard_normal(num_paths))
    elevations = _wrap_angle(config.elevation_center + config.elevation_spread * rng.standard_normal(num_paths))
    delays = rng.exponential(config.delay_spread_s, size=num_paths)
    powers = _path_powers(delays, config.delay_spread_s, has_los, config.los_power_fraction)
    gains = np.sqrt(powers / 2.0) * (rng.standard_normal(num_paths) + 1j * rng.standard_normal(num_paths))
    if has_los:
        gains[0] = np.sqrt(powers[0]) * np.exp(2j * np.pi * rng.random())
    steering = _steering_matrix(geometry, azimuths, elevations)
    coeffs = gains * np.exp(-2j * np.pi * config.carrier_freq_hz * delays)
    return coeffs @ steering


def generate_dataset(config: ScenarioConfig, geometry: ArrayGeometry, m: int, seed: int | None = None) -> Dataset:
    """Generate M independent channels and scale them to mean ||h||^2 = N.

    Every sample uses its own substream derived from (seed, sample index), so
    the result is independent of evaluation order and reproducible.
    """
    if m < 1:
        raise ConfigError(f"dataset size must be at least 1, got {m}")
    if seed is None:
        seed = config.seed
    samples = np.empty((m, geometry.n), dtype=np.complex128)
    for i in range(m):
        rng = np.random.default_rng([seed, i])
        samples[i] = sample_channel(config, geometry, rng)
    mean_power = float(np.mean(np.abs(samples) ** 2)) * geometry.n
    scale = float(np.sqrt(geometry.n / mean_power))
    samples *= scale
    return Dataset(
        geometry=geometry,
        scenario_id=config.scenario_id,
        seed=int(seed),
        samples=samples,
        normalization_scale=scale,
    )


def add_noise(h: np.ndarray, snr_db: float, rng: np.random.Generator) -> Observation:
    """Corrupt a channel with circularly-symmetric AWGN at the given SNR."""
    h = np.asarray(h)
    if not np.all(np.isfinite(h)):
        raise ValueError("channel vector contains non-finite entries")
    noise_var = noise_var_from_snr_db(snr_db)
    noise = np.sqrt(noise_var / 2.0) * (rng.standard_normal(h.shape) + 1j * rng.standard_normal(h.shape))
    return Observation(y=h + noise, noise_var=noise_var, snr_db=float(snr_db))


def _atomic_write_bytes(path: str, payload: bytes) -> None:
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(payload)
    os.replace(tmp, path)


def save_dataset(dataset: Dataset, path: str) -> None:
    """Write a dataset in the bit-exact little-endian binary format.

    Layout: magic "GMCD", u32 version, u32 n_v, u32 n_h, u64 M, u64 seed,
    f64 normalization scale, u32 scenario-id byte length, the UTF-8 id, then
    M*N complex entries as interleaved (re, im) f64, sample-major.
    """
    sid = dataset.scenario_id.encode("utf-8")
    header = struct.pack(
        _HEADER_FMT,
        _MAGIC,
        _FORMAT_VERSION,
        dataset.geometry.n_v,
        dataset.geometry.n_h,
        dataset.m,
        dataset.seed,
        dataset.normalization_scale,
        len(sid),
    )
    body = np.ascontiguousarray(dataset.samples, dtype="<c16").tobytes()
    _atomic_write_bytes(path, header + sid + body)


def load_dataset(path: str, spacing_v: float = 0.5, spacing_h: float = 1.0) -> Dataset:
    """Read a dataset written by :func:`save_dataset`.

    The file stores only the antenna grid shape; spacings are supplied by the
    caller (defaults match the standard array used throughout).
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    head_size = struct.calcsize(_HEADER_FMT)
    magic, version, n_v, n_h, m, seed, scale, sid_len = struct.unpack(_HEADER_FMT, raw[:head_size])
    if magic != _MAGIC:
        raise ValueError(f"{path}: not a channel dataset file (bad magic {magic!r})")
    if version != _FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported format version {version}")
    sid = raw[head_size:head_size + sid_len].decode("utf-8")
    geometry = ArrayGeometry(n_v=n_v, n_h=n_h, spacing_v=spacing_v, spacing_h=spacing_h)
    body = np.frombuffer(raw[head_size + sid_len:], dtype="<c16", count=m * geometry.n)
    samples = body.reshape(m, geometry.n).astype(np.complex128)
    return Dataset(geometry=geometry, scenario_id=sid, seed=seed, samples=samples, normalization_scale=scale)


def save_scenario_config(config: ScenarioConfig, path: str) -> None:
    """Write a scenario config as JSON with keys matching the field names."""
    payload = asdict(config)
    payload["num_paths_range"] = list(payload["num_paths_range"])
    _atomic_write_bytes(path, (json.dumps(payload, indent=2) + "\n").encode("utf-8"))


def load_scenario_config(path: str) -> ScenarioConfig:
    """Read a scenario config written by :func:`save_scenario_config`."""
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    try:
        payload["num_paths_range"] = tuple(payload["num_paths_range"])
        return ScenarioConfig(**payload)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"{path}: malformed scenario config: {exc}") from exc


def resolve_scenario(spec: "str | ScenarioConfig") -> ScenarioConfig:
    """Accept a preset name, a config file path, or an already-built config."""
    if isinstance(spec, ScenarioConfig):
        return spec
    if spec in PRESETS:
        return PRESETS[spec]
    if os.path.exists(spec):
        return load_scenario_config(spec)
    raise ConfigError(f"unknown scenario {spec!r}: not a preset and not a file")


def with_seed(config: ScenarioConfig, seed: int) -> ScenarioConfig:
    """Copy of a scenario config with a different seed."""
    return replace(config, seed=seed)
