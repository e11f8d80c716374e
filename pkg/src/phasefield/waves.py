"""Synthetic wave-field generators over sensor grids.

Two families: plane waves with a jittered propagation direction (M-ary
direction classification) and elliptical radial waves whose center location
separates unidirectional from diverging propagation (binary testing).
Measurements are cosines of the phase field plus Gaussian noise at 0 dB
SNR for the default unit-amplitude signal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .signals import TimeSeriesPanel

#: Squared semi-axis coefficients of the elliptical phase field; the large
#: minor-axis coefficient makes the wave effectively unidirectional when its
#: center sits off the grid.
ELLIPTICAL_COEFF_MAJOR = 0.09
ELLIPTICAL_COEFF_MINOR = 225.0


@dataclass(frozen=True)
class SensorGrid:
    """rows x cols sensors evenly spaced over ``extent`` (x span, y span)."""

    rows: int
    cols: int
    extent: tuple[float, float]

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("grid needs at least one row and column")
        if len(self.extent) != 2 or any(e < 0 for e in self.extent):
            raise ValueError("extent must be two nonnegative spans")

    @classmethod
    def unit_spacing(cls, rows: int, cols: int) -> "SensorGrid":
        """Grid with unit distance between adjacent sensors."""
        return cls(rows, cols, (float(cols - 1), float(rows - 1)))

    @classmethod
    def unit_square(cls, rows: int, cols: int) -> "SensorGrid":
        """Grid spanning a 1 x 1 area regardless of sensor count."""
        return cls(rows, cols, (1.0, 1.0))

    @property
    def p(self) -> int:
        return self.rows * self.cols

    @property
    def coordinates(self) -> np.ndarray:
        """(p, 2) array of (x, y) positions, row-major."""
        xs = np.linspace(0.0, self.extent[0], self.cols) if self.cols > 1 else np.zeros(1)
        ys = np.linspace(0.0, self.extent[1], self.rows) if self.rows > 1 else np.zeros(1)
        gx, gy = np.meshgrid(xs, ys)
        return np.column_stack([gx.ravel(), gy.ravel()])


@dataclass(frozen=True)
class PlaneWaveSpec:
    """Plane wave with direction index m out of ``n_directions``.

    The wavenumber direction is the class angle 2*pi*m/M plus a von Mises
    jitter of concentration ``direction_noise_kappa``, drawn once per
    panel. ``omega`` defaults to 10 whole cycles over the 200 x 0.02 s
    window so the analytic signal is clean.
    """

    direction_index: int = 0
    n_directions: int = 16
    direction_noise_kappa: float = 30.0
    omega: float = 5.0 * math.pi
    n_t: int = 200
    dt: float = 0.02
    noise_sd: float = 1.0 / math.sqrt(2.0)

    def __post_init__(self):
        if not (0 <= self.direction_index < self.n_directions):
            raise ValueError("direction_index out of range")
        if self.noise_sd < 0 or self.dt <= 0 or self.n_t < 2:
            raise ValueError("invalid plane-wave settings")

    @property
    def theta(self) -> float:
        return 2.0 * math.pi * self.direction_index / self.n_directions


@dataclass(frozen=True)
class EllipticalWaveSpec:
    """Radial wave on a unit grid with randomized shape and center.

    Class 0 draws its center from ``center_ranges[0]`` (off-grid, so the
    wavefront crosses the sensors unidirectionally); class 1 draws from
    ``center_ranges[1]`` (on-grid, diverging). The default timing uses a
    1 s step so the 0.03-0.07 Hz analysis band is resolvable over the
    window; a 200-sample, 0.02 s protocol is too short for that band and
    is kept only as documentation (see ``reference_timing``).
    """

    kr_mean: float = 1.0
    kr_sd: float = 0.1
    rotation_loc: float = math.pi / 4.0
    rotation_kappa: float = 60.0
    omega: float = 2.0 * math.pi / 20.0
    center_ranges: tuple = (((1.0, 1.5), (1.0, 1.5)), ((0.0, 0.75), (0.0, 0.75)))
    n_t: int = 4096
    dt: float = 1.0
    noise_sd: float = 1.0 / math.sqrt(2.0)

    def __post_init__(self):
        if self.noise_sd < 0 or self.dt <= 0 or self.n_t < 2:
            raise ValueError("invalid elliptical-wave settings")

    @staticmethod
    def reference_timing() -> dict:
        """Nominal 200-point protocol; undersampled for the default band."""
        return {"n_t": 200, "dt": 0.02}


def plane_phase_field(k_vec, coords, times, omega: float) -> np.ndarray:
    """Phase K.r - omega*t at each (time, sensor), shape (n_t, p)."""
    k_vec = np.asarray(k_vec, dtype=float)
    coords = np.asarray(coords, dtype=float)
    times = np.asarray(times, dtype=float)
    spatial = coords @ k_vec
    return spatial[None, :] - omega * times[:, None]


def elliptical_phase_field(kr, theta, center, coords, times, omega: float) -> np.ndarray:
    """Elliptical radial phase field, shape (n_t, p).

    The spatial term is kr * sqrt(0.09 u^2 + 225 v^2) with (u, v) the
    sensor offsets from ``center`` rotated by ``theta``.
    """
    coords = np.asarray(coords, dtype=float)
    times = np.asarray(times, dtype=float)
    dx = coords[:, 0] - center[0]
    dy = coords[:, 1] - center[1]
    u = dx * math.cos(theta) - dy * math.sin(theta)
    v = dx * math.sin(theta) + dy * math.cos(theta)
    radial = kr * np.sqrt(ELLIPTICAL_COEFF_MAJOR * u**2 + ELLIPTICAL_COEFF_MINOR * v**2)
    return radial[None, :] - omega * times[:, None]


@dataclass(frozen=True)
class LabeledPanel:
    """One generated panel with its class label, generating parameters, and
    the noiseless phase field."""

    panel: TimeSeriesPanel
    label: int
    params: dict
    true_phases: np.ndarray | None


@dataclass(frozen=True)
class LabeledPanelSet:
    """Corpus of labeled panels plus the seed that reproduces it."""

    panels: tuple[LabeledPanel, ...]
    seed: int
    labels: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(lp.label for lp in self.panels))

    def by_label(self) -> dict[int, list[LabeledPanel]]:
        out: dict[int, list[LabeledPanel]] = {}
        for lp in self.panels:
            out.setdefault(lp.label, []).append(lp)
        return out


def gen_plane_wave(
    spec: PlaneWaveSpec,
    grid: SensorGrid,
    rng: np.random.Generator,
    store_phases: bool = True,
) -> LabeledPanel:
    """Generate one noisy plane-wave panel; one direction jitter per panel."""
    xi = float(rng.vonmises(0.0, spec.direction_noise_kappa))
    angle = spec.theta + xi
    k_vec = np.array([math.cos(angle), math.sin(angle)])
    times = np.arange(spec.n_t) * spec.dt
    phases = plane_phase_field(k_vec, grid.coordinates, times, spec.omega)
    values = np.cos(phases)
    if spec.noise_sd > 0:
        values = values + rng.normal(0.0, spec.noise_sd, size=values.shape)
    return LabeledPanel(
        panel=TimeSeriesPanel(values, spec.dt),
        label=spec.direction_index,
        params={"direction_index": spec.direction_index, "xi": xi, "omega": spec.omega},
        true_phases=phases if store_phases else None,
    )


def gen_elliptical_wave(
    spec: EllipticalWaveSpec,
    grid: SensorGrid,
    class_label: int,
    rng: np.random.Generator,
    store_phases: bool = True,
) -> LabeledPanel:
    """Generate one noisy elliptical-wave panel for the given class."""
    if class_label not in (0, 1):
        raise ValueError("class_label must be 0 or 1")
    kr = float(rng.normal(spec.kr_mean, spec.kr_sd))
    theta = float(rng.vonmises(spec.rotation_loc, spec.rotation_kappa))
    (x_lo, x_hi), (y_lo, y_hi) = spec.center_ranges[class_label]
    center = (float(rng.uniform(x_lo, x_hi)), float(rng.uniform(y_lo, y_hi)))
    times = np.arange(spec.n_t) * spec.dt
    phases = elliptical_phase_field(kr, theta, center, grid.coordinates, times, spec.omega)
    values = np.cos(phases)
    if spec.noise_sd > 0:
        values = values + rng.normal(0.0, spec.noise_sd, size=values.shape)
    return LabeledPanel(
        panel=TimeSeriesPanel(values, spec.dt),
        label=class_label,
        params={"kr": kr, "theta": theta, "center": center, "omega": spec.omega},
        true_phases=phases if store_phases else None,
    )


def plane_wave_specs(n_directions: int = 16, **overrides) -> dict[int, PlaneWaveSpec]:
    """One spec per direction class."""
    return {
        m: PlaneWaveSpec(direction_index=m, n_directions=n_directions, **overrides)
        for m in range(n_directions)
    }


def elliptical_specs(spec: EllipticalWaveSpec | None = None) -> dict[int, EllipticalWaveSpec]:
    """The two elliptical classes share one spec; the label picks the
    center distribution."""
    spec = spec or EllipticalWaveSpec()
    return {0: spec, 1: spec}


def gen_corpus(
    n_per_class: int,
    specs: dict,
    grid: SensorGrid,
    seed: int,
    store_phases: bool = True,
) -> LabeledPanelSet:
    """Generate ``n_per_class`` panels for every labeled spec.

    Each panel gets its own child stream spawned from ``seed``, so the
    corpus is byte-reproducible and insensitive to generation order.
    """
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    labels = sorted(specs)
    streams = np.random.SeedSequence(seed).spawn(len(labels) * n_per_class)
    panels = []
    for li, label in enumerate(labels):
        spec = specs[label]
        for k in range(n_per_class):
            rng = np.random.default_rng(streams[li * n_per_class + k])
            if isinstance(spec, PlaneWaveSpec):
                panels.append(gen_plane_wave(spec, grid, rng, store_phases))
            elif isinstance(spec, EllipticalWaveSpec):
                panels.append(gen_elliptical_wave(spec, grid, label, rng, store_phases))
            else:
                raise TypeError(f"unsupported spec type {type(spec)!r}")
    return LabeledPanelSet(panels=tuple(panels), seed=seed)


def stratified_split(
    panel_set: LabeledPanelSet, train_frac: float = 0.8, seed: int = 0
) -> tuple[list[LabeledPanel], list[LabeledPanel]]:
    """Deterministic train/test split preserving per-class proportions."""
    if not (0.0 < train_frac < 1.0):
        raise ValueError("train_frac must be in (0, 1)")
    rng = np.random.default_rng(seed)
    train: list[LabeledPanel] = []
    test: list[LabeledPanel] = []
    for label, group in sorted(panel_set.by_label().items()):
        order = rng.permutation(len(group))
        n_train = int(round(train_frac * len(group)))
        train.extend(group[i] for i in order[:n_train])
        test.extend(group[i] for i in order[n_train:])
    return train, test
