from typing import Union

import numpy as np

Coordinate = Union[float, np.ndarray]

def phi_l_values(z: Coordinate, l_cut: float) -> Coordinate:
    """Piecewise-linear cutoff: 1 on |z| < L-1, L-|z| on the strip, 0 beyond L."""

    return np.clip(l_cut - np.abs(z), 0.0, 1.0)

def strip_mask(z: np.ndarray, l_cut: float) -> np.ndarray:

    distance = np.abs(z)
    return (distance >= l_cut - 1.0) & (distance <= l_cut)

def cutoff_ladder(z_period: float, start: float = 1.25, step: float = 0.25) -> list[float]:

    half = 0.5 * z_period
    count = int(np.floor((half - start) / step + 1e-9)) + 1
    return [start + step * k for k in range(max(count, 0))]

def check_cutoff_fits(l_cut: float, z_period: float) -> None:

    if l_cut > 0.5 * z_period * (1.0 + 1e-12):
        raise ValueError(
            f"Cutoff L={l_cut} exceeds half the axial period {0.5 * z_period}"
        )
