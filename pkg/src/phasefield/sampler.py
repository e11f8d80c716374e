"""Exact two-node sampling and Gibbs sampling from a :class:`GraphModel`.

One chain is strictly sequential. :func:`gibbs_sample_batch` advances many
chains in lock step (one model per chain, shared stream) purely as a
throughput device for recovery experiments; each chain is still a faithful
Gibbs sweep of its own model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circular import wrap
from .model import GraphModel, PhaseDataset


@dataclass(frozen=True)
class GibbsConfig:
    """Chain settings; the burn-in default matches the recovery experiments."""

    burn_in: int = 10000
    thin: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")


def sample_pair(kappa: float, mu: float, n: int, rng: np.random.Generator) -> PhaseDataset:
    """Exact draws from the two-node model: Y1 uniform, Y2 | Y1 von Mises
    located at Y1 + mu with concentration kappa."""
    if kappa < 0.0:
        raise ValueError("kappa must be >= 0")
    if n < 1:
        raise ValueError("n must be >= 1")
    y1 = rng.uniform(-np.pi, np.pi, size=n)
    if kappa == 0.0:
        y2 = rng.uniform(-np.pi, np.pi, size=n)
    else:
        y2 = rng.vonmises(wrap(y1 + mu), kappa)
    return PhaseDataset(np.column_stack([y1, y2]))


def _phasor_coefficients(models: list[GraphModel]) -> np.ndarray:
    """Dense conditional-resultant coefficients, (n_chains, p, p) complex.

    Row u holds, for each neighbor k, the coefficient of exp(1j*y_k) in the
    complex resultant whose magnitude/angle are node u's conditional
    (kappa, mu); mirrors :func:`phasefield.model.conditional_params`.
    """
    p = models[0].p
    coeff = np.zeros((len(models), p, p), dtype=complex)
    for c, m in enumerate(models):
        if m.p != p:
            raise ValueError("all models in a batch must share the node count")
        for idx, (i, j) in enumerate(m.structure.edges):
            coeff[c, i, j] += m.kappa[idx] * np.exp(-1j * m.mu[idx])
            coeff[c, j, i] += m.kappa[idx] * np.exp(1j * m.mu[idx])
    return coeff


def _run_chains(coeff: np.ndarray, n: int, cfg: GibbsConfig) -> np.ndarray:
    n_chains, p, _ = coeff.shape
    rng = np.random.default_rng(cfg.seed)
    y = rng.uniform(-np.pi, np.pi, size=(n_chains, p))
    z = np.exp(1j * y)
    out = np.empty((n_chains, n, p))
    kept = 0
    for sweep in range(cfg.burn_in + n * cfg.thin):
        for u in range(p):
            s = (coeff[:, u, :] * z).sum(axis=1)
            y_u = rng.vonmises(np.arctan2(s.imag, s.real), np.abs(s))
            y[:, u] = y_u
            z[:, u] = np.exp(1j * y_u)
        k = sweep - cfg.burn_in
        if k >= 0 and k % cfg.thin == 0:
            out[:, kept, :] = y
            kept += 1
    return wrap(out)


def gibbs_sample(m: GraphModel, n: int, cfg: GibbsConfig) -> PhaseDataset:
    """Gibbs-sample ``n`` draws from ``m``.

    Initializes uniformly on [-pi, pi)^p, sweeps nodes in fixed index order
    drawing each from its von Mises full conditional with the most recent
    values, discards ``cfg.burn_in`` sweeps, then keeps every
    ``cfg.thin``-th sweep. Deterministic for a fixed config.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    samples = _run_chains(_phasor_coefficients([m]), n, cfg)
    return PhaseDataset(samples[0])


def gibbs_sample_batch(models: list[GraphModel], n: int, cfg: GibbsConfig) -> list[PhaseDataset]:
    """Run one Gibbs chain per model in lock step over a shared stream.

    Output for a given seed is deterministic but depends on the full batch
    (the rejection sampler interleaves draws), so use :func:`gibbs_sample`
    when a chain must be reproducible in isolation.
    """
    if not models:
        return []
    if n < 1:
        raise ValueError("n must be >= 1")
    samples = _run_chains(_phasor_coefficients(models), n, cfg)
    return [PhaseDataset(samples[c]) for c in range(len(models))]
