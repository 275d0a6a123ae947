import math
from typing import Literal, Optional

import numpy as np
from pydantic import Field as PydanticField, model_validator

from .annulus import Annulus
from .base import ArrayModel, FrozenModel

class Grid(FrozenModel):
    """Staggered MAC grid on the z-periodic annulus.

    Layout: v^r on radial faces (walls included), v^z on axial faces,
    v^theta and p at cell centres. Optional theta lattice is collocated.
    Axial coordinates span [-z_period/2, z_period/2).
    """

    annulus: Annulus
    n_r: int = PydanticField(ge=4)
    n_z: int = PydanticField(ge=4)
    z_period: float = PydanticField(gt=0.0)
    n_theta: Optional[int] = PydanticField(default=None, ge=4)

    @property
    def axisymmetric(self) -> bool:
        return self.n_theta is None

    @property
    def h_r(self) -> float:
        return self.annulus.gap / self.n_r

    @property
    def h_z(self) -> float:
        return self.z_period / self.n_z

    @property
    def h_theta(self) -> float:
        if self.n_theta is None:
            raise ValueError("Axisymmetric grid has no theta spacing")
        return 2.0 * math.pi / self.n_theta

    @property
    def r_faces(self) -> np.ndarray:
        return self.annulus.r_inner + self.h_r * np.arange(self.n_r + 1)

    @property
    def r_centers(self) -> np.ndarray:
        return self.annulus.r_inner + self.h_r * (np.arange(self.n_r) + 0.5)

    @property
    def z_faces(self) -> np.ndarray:
        return -0.5 * self.z_period + self.h_z * np.arange(self.n_z)

    @property
    def z_centers(self) -> np.ndarray:
        return -0.5 * self.z_period + self.h_z * (np.arange(self.n_z) + 0.5)

    @property
    def theta(self) -> np.ndarray:
        if self.n_theta is None:
            raise ValueError("Axisymmetric grid has no theta lattice")
        return self.h_theta * np.arange(self.n_theta)

    @property
    def face_shape(self) -> tuple[int, ...]:
        if self.n_theta is None:
            return (self.n_r + 1, self.n_z)
        return (self.n_r + 1, self.n_theta, self.n_z)

    @property
    def cell_shape(self) -> tuple[int, ...]:
        if self.n_theta is None:
            return (self.n_r, self.n_z)
        return (self.n_r, self.n_theta, self.n_z)

    def radial(self, values: np.ndarray) -> np.ndarray:
        """Reshape a radial profile so it broadcasts against field arrays."""

        extra = 1 if self.n_theta is None else 2
        return np.asarray(values).reshape((-1,) + (1,) * extra)

    def with_theta(self, n_theta: Optional[int]) -> "Grid":

        return self.model_copy(update={"n_theta": n_theta})

    def __repr__(self) -> str:
        theta = "" if self.n_theta is None else f", n_theta={self.n_theta}"
        return f"<Grid(n_r={self.n_r}, n_z={self.n_z}, L_z={self.z_period}{theta})>"

class Field(ArrayModel):

    v_r: np.ndarray
    v_theta: np.ndarray
    v_z: np.ndarray
    grid: Grid
    theta_walls: tuple[float, float] = (0.0, 0.0)

    @model_validator(mode="after")
    def validate_layout(self) -> "Field":

        if self.v_r.shape != self.grid.face_shape:
            raise ValueError(f"v_r has shape {self.v_r.shape}, expected {self.grid.face_shape}")
        for name in ("v_theta", "v_z"):
            shape = getattr(self, name).shape
            if shape != self.grid.cell_shape:
                raise ValueError(f"{name} has shape {shape}, expected {self.grid.cell_shape}")
        if np.any(self.v_r[0] != 0.0) or np.any(self.v_r[-1] != 0.0):
            raise ValueError("v_r must vanish on both walls")
        return self

    @classmethod
    def zeros(cls, grid: Grid, theta_walls: tuple[float, float] = (0.0, 0.0)) -> "Field":

        return cls(
            v_r=np.zeros(grid.face_shape),
            v_theta=np.zeros(grid.cell_shape),
            v_z=np.zeros(grid.cell_shape),
            grid=grid,
            theta_walls=theta_walls,
        )

    def velocity_linf(self) -> float:

        interior = max(
            float(np.max(np.abs(self.v_r))),
            float(np.max(np.abs(self.v_theta))),
            float(np.max(np.abs(self.v_z))),
        )
        return max(interior, abs(self.theta_walls[0]), abs(self.theta_walls[1]))

    def replace(self, **arrays: np.ndarray) -> "Field":

        return self.model_copy(update=arrays)

class PressureField(ArrayModel):

    p: np.ndarray
    grid: Grid
    # a of p = a*z + periodic part; never stored inside p
    axial_gradient: float = 0.0
    gauge: Literal["mean_zero", "closed_form", "free"] = "free"

    @model_validator(mode="after")
    def validate_layout(self) -> "PressureField":

        if self.p.shape != self.grid.cell_shape:
            raise ValueError(f"p has shape {self.p.shape}, expected {self.grid.cell_shape}")
        return self

    @classmethod
    def zeros(cls, grid: Grid, axial_gradient: float = 0.0) -> "PressureField":

        return cls(p=np.zeros(grid.cell_shape), grid=grid, axial_gradient=axial_gradient)

    def weighted_mean(self) -> float:

        weights = np.broadcast_to(self.grid.radial(self.grid.r_centers), self.p.shape)
        return float(np.sum(weights * self.p) / np.sum(weights))

    def regauged(self) -> "PressureField":

        return self.model_copy(update={"p": self.p - self.weighted_mean(), "gauge": "mean_zero"})
