"""Copula-based synthetic data augmentation for physics emulators.

Fit empirical marginals and a copula (full Gaussian or regular vine) to
atmospheric profile inputs, simulate statistically consistent synthetic
profiles, label them with a toy longwave radiation model and train a
feed-forward emulator on the augmented set.
"""

__version__ = "0.1.0"
