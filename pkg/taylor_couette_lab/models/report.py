from typing import NamedTuple, Optional

import numpy as np
from pydantic import Field

from .base import FrozenModel

class ResidualArrays(NamedTuple):

    radial: np.ndarray
    azimuthal: np.ndarray
    axial: np.ndarray
    continuity: np.ndarray

class ResidualReport(FrozenModel):

    radial_linf: float = Field(ge=0.0)
    radial_l2: float = Field(ge=0.0)
    azimuthal_linf: float = Field(ge=0.0)
    azimuthal_l2: float = Field(ge=0.0)
    axial_linf: float = Field(ge=0.0)
    axial_l2: float = Field(ge=0.0)
    continuity_linf: float = Field(ge=0.0)
    continuity_l2: float = Field(ge=0.0)
    h_r: float = Field(gt=0.0)
    h_z: float = Field(gt=0.0)

    @property
    def momentum_linf(self) -> float:
        return max(self.radial_linf, self.azimuthal_linf, self.axial_linf)

    @property
    def linf(self) -> float:
        return max(self.momentum_linf, self.continuity_linf)

class PoincareReport(FrozenModel):

    norm_f_domain: float = Field(ge=0.0)
    norm_df_domain: float = Field(ge=0.0)
    norm_f_strip: float = Field(ge=0.0)
    norm_df_strip: float = Field(ge=0.0)
    # None when the profile vanishes identically
    ratio_domain: Optional[float] = None
    ratio_strip: Optional[float] = None
    bound: float = Field(gt=0.0, description="sqrt(C_P)")
    tolerance_factor: float = Field(gt=0.0, description="1 + 5 h_r")
    degenerate: bool = False
    holds: bool = True
