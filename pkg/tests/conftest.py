"""Shared test fixtures: brute-force procedure oracles and null samplers."""

from __future__ import annotations

import numpy as np
import pytest

from activetest.rng import MC_SAMPLE, uniforms
from scipy.special import ndtri


# ---------------------------------------------------------------------------
# brute-force step-up oracles (independent of the library implementations)
# ---------------------------------------------------------------------------

def oracle_bh(p, alpha):
    """Largest k with p_(k) <= k*alpha/n by explicit search; threshold rejection."""
    n = len(p)
    ordered = sorted(p)
    k_hat = 0
    for k in range(1, n + 1):
        if ordered[k - 1] <= k * alpha / n:
            k_hat = k
    if k_hat == 0:
        return set(), 0
    threshold = k_hat * alpha / n
    return {i for i, v in enumerate(p) if v <= threshold}, k_hat


def oracle_by(p, alpha):
    h = sum(1.0 / i for i in range(len(p), 0, -1))
    return oracle_bh(p, alpha / h)


def oracle_ebh(e, alpha):
    n = len(e)
    ordered = sorted(e, reverse=True)
    k_hat = 0
    for k in range(1, n + 1):
        if ordered[k - 1] >= n / (alpha * k):
            k_hat = k
    if k_hat == 0:
        return set(), 0
    threshold = n / (alpha * k_hat)
    return {i for i, v in enumerate(e) if v >= threshold}, k_hat


@pytest.fixture
def procedure_oracles():
    return {"bh": oracle_bh, "by": oracle_by, "ebh": oracle_ebh}


# ---------------------------------------------------------------------------
# null samplers for the validity batteries
#
# Exact e-values are exp(Z - 1/2) with Z standard normal (unit mean), exact
# p-values are Phi(-Z) (uniform).  Auxiliaries vary from independent to
# functionally dependent.
# ---------------------------------------------------------------------------

def _normals(n, seed, tag):
    return ndtri(uniforms(seed, tag, np.arange(n, dtype=np.uint64), MC_SAMPLE))


def e_sampler_independent(n, seed):
    z = _normals(n, seed, 0)
    w = _normals(n, seed, 1)
    return np.exp(w - 0.5), np.exp(z - 0.5)


def e_sampler_noisy(n, seed):
    z = _normals(n, seed, 0)
    eps = _normals(n, seed, 1)
    return np.exp((z + eps) / np.sqrt(2.0) - 0.5), np.exp(z - 0.5)


def e_sampler_correlated(n, seed):
    z = _normals(n, seed, 0)
    w = 0.7 * z + np.sqrt(1 - 0.7**2) * _normals(n, seed, 1)
    return np.exp(w - 0.5), np.exp(z - 0.5)


def e_sampler_adversarial(n, seed):
    z = _normals(n, seed, 0)
    e = np.exp(z - 0.5)
    return e, e


def p_sampler_independent(n, seed):
    from scipy.special import ndtr

    z = _normals(n, seed, 0)
    w = _normals(n, seed, 1)
    return ndtr(-w), ndtr(-z)


def p_sampler_noisy(n, seed):
    from scipy.special import ndtr

    z = _normals(n, seed, 0)
    eps = _normals(n, seed, 1)
    return ndtr(-(z + eps) / np.sqrt(2.0)), ndtr(-z)


def p_sampler_correlated(n, seed):
    from scipy.special import ndtr

    z = _normals(n, seed, 0)
    w = 0.7 * z + np.sqrt(1 - 0.7**2) * _normals(n, seed, 1)
    return ndtr(-w), ndtr(-z)


def p_sampler_adversarial(n, seed):
    from scipy.special import ndtr

    z = _normals(n, seed, 0)
    p = ndtr(-z)
    return p, p


E_SAMPLERS = {
    "independent": e_sampler_independent,
    "noisy": e_sampler_noisy,
    "correlated": e_sampler_correlated,
    "adversarial": e_sampler_adversarial,
}

P_SAMPLERS = {
    "independent": p_sampler_independent,
    "noisy": p_sampler_noisy,
    "correlated": p_sampler_correlated,
    "adversarial": p_sampler_adversarial,
}

# allocation maps used by the batteries; e-type auxiliaries live in [0, inf),
# p-type in [0, 1]
E_H_FNS = {
    "saturating": lambda x: x / (1.0 + x),
    "constant": lambda x: np.full_like(np.asarray(x, dtype=float), 0.4),
    "clamping": lambda x: 1.5 * x / (1.0 + x),
}

P_H_FNS = {
    "linear": lambda x: 1.0 - np.asarray(x, dtype=float),
    "constant": lambda x: np.full_like(np.asarray(x, dtype=float), 0.4),
    "clamping": lambda x: 1.8 * (1.0 - np.asarray(x, dtype=float)),
}

S_GRID = (0.001, 0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0)
