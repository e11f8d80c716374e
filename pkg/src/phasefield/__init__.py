"""Pairwise von Mises phase-coupling graphical models.

Fit, sample, and test probabilistic models of multivariate phase data:
closed-form dependence-tree approximation, group-sparse interaction
screening for arbitrary graphs, Gibbs sampling, synthetic wave-field
generation, phase extraction from raw oscillatory measurements, and
likelihood-ratio classification with ROC/confusion evaluation.
"""

__version__ = "0.1.0"
