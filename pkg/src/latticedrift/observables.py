"""Time series of wave-packet observables shared by propagation and ensembles."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class ObservableSeries:
    """Sampled observables along one evolution.

    sigma is the root of the *raw* second moment about the origin,
    sqrt(sum_l l^2 |psi_l|^2) (summed over m in 2D); sigma_centered is the
    conventional centered width, and edge_norm is the probability found in
    the outermost window ring at the sample time.
    """

    times: np.ndarray
    sigma: np.ndarray
    mean_x: np.ndarray
    edge_norm: np.ndarray
    sigma_centered: np.ndarray

    def __post_init__(self) -> None:
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("sample times must be strictly increasing")


def moments_x(density_x: np.ndarray, offset: int) -> tuple[np.ndarray, np.ndarray]:
    """(mean, raw second moment) along x of densities with leading batch axes."""
    sites = (offset + np.arange(density_x.shape[-1])).astype(float)
    mean = density_x @ sites
    second = density_x @ (sites**2)
    return mean, second
