"""Phase extraction from raw oscillatory measurements.

Bandpass filtering (zero-phase Butterworth biquad cascade) plus the
analytic signal turn a panel of real time series into a
:class:`PhaseDataset` whose rows are time points treated as exchangeable
samples. Hilbert edge effects make the first and last 5% of rows
unreliable, so they are dropped unless explicitly kept.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal as sp_signal

from .model import PhaseDataset

#: Fraction of rows dropped at each end of the panel by default.
EDGE_FRACTION = 0.05


@dataclass(frozen=True)
class TimeSeriesPanel:
    """n_t time samples x p channels of real measurements at spacing ``dt``."""

    values: np.ndarray
    dt: float

    def __post_init__(self):
        values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if not np.all(np.isfinite(values)):
            raise ValueError("panel values must be finite")
        if not (self.dt > 0.0 and np.isfinite(self.dt)):
            raise ValueError("dt must be a positive number of seconds")
        object.__setattr__(self, "values", values)

    @property
    def n_t(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    @property
    def fs(self) -> float:
        return 1.0 / self.dt

    def to_csv(self, path) -> None:
        np.savetxt(path, self.values, delimiter=",", fmt="%.17g")

    @classmethod
    def from_csv(cls, path, dt: float) -> "TimeSeriesPanel":
        return cls(np.loadtxt(path, delimiter=",", ndmin=2), dt)


@dataclass(frozen=True)
class BandpassSpec:
    """Zero-phase Butterworth bandpass settings.

    ``order`` is the total bandpass order (analog lowpass prototype order
    ``order // 2``), so the default 8 gives four biquad sections.
    """

    low: float
    high: float
    fs: float
    order: int = 8

    def __post_init__(self):
        if self.order < 2 or self.order % 2 != 0:
            raise ValueError("order must be an even count >= 2")
        if not (0.0 < self.low < self.high < self.fs / 2.0):
            raise ValueError("band must satisfy 0 < low < high < fs/2")


@dataclass(frozen=True)
class BiquadCascade:
    """Second-order sections of a designed filter plus its spec."""

    sos: np.ndarray
    spec: BandpassSpec

    @property
    def n_sections(self) -> int:
        return self.sos.shape[0]

    @property
    def pad_len(self) -> int:
        return 3 * (2 * self.n_sections)


def design_bandpass(spec: BandpassSpec) -> BiquadCascade:
    """Butterworth bandpass via the analog prototype and bilinear transform
    with frequency prewarping, factored into biquads."""
    sos = sp_signal.butter(
        spec.order // 2, [spec.low, spec.high], btype="bandpass", fs=spec.fs, output="sos"
    )
    return BiquadCascade(sos=np.asarray(sos), spec=spec)


def filtfilt(coeffs: BiquadCascade, x) -> np.ndarray:
    """Zero-phase filtering: forward pass, reverse, second pass, reverse,
    with odd-reflection padding of 3 * (2 * sections) samples per end."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("filtfilt expects a 1-D series")
    if x.size <= coeffs.pad_len:
        raise ValueError(
            f"series length {x.size} too short; need more than {coeffs.pad_len} samples"
        )
    return sp_signal.sosfiltfilt(coeffs.sos, x, padtype="odd", padlen=coeffs.pad_len)


def analytic_signal(x) -> np.ndarray:
    """Analytic signal by frequency-domain construction: zero the negative
    frequencies, double the positive ones, keep DC (and Nyquist) at unit
    gain. The real part reproduces the input to rounding."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("analytic_signal expects a 1-D series of length >= 2")
    return sp_signal.hilbert(x)


def instantaneous_phase(
    panel: TimeSeriesPanel,
    bandpass: BandpassSpec | None = None,
    keep_edges: bool = False,
    edge_fraction: float = EDGE_FRACTION,
) -> PhaseDataset:
    """Per-channel instantaneous phase of (optionally bandpassed) data.

    Rows of the result are time points; the leading/trailing
    ``edge_fraction`` of rows are excluded unless ``keep_edges``. Narrow
    bands ring longer than the default 5%, so filtered short panels may
    need a deeper trim.
    """
    phases = np.empty_like(panel.values)
    cascade = None
    if bandpass is not None:
        if abs(bandpass.fs - panel.fs) > 1e-9 * max(bandpass.fs, panel.fs):
            raise ValueError(
                f"bandpass fs={bandpass.fs} does not match panel fs={panel.fs}"
            )
        cascade = design_bandpass(bandpass)
    for ch in range(panel.p):
        series = panel.values[:, ch]
        if cascade is not None:
            series = filtfilt(cascade, series)
        phases[:, ch] = np.angle(analytic_signal(series))
    if not keep_edges:
        if not (0.0 <= edge_fraction < 0.5):
            raise ValueError("edge_fraction must be in [0, 0.5)")
        trim = int(panel.n_t * edge_fraction)
        if panel.n_t - 2 * trim < 1:
            raise ValueError("panel too short to trim filter edges")
        if trim:
            phases = phases[trim:-trim]
    return PhaseDataset(phases)
