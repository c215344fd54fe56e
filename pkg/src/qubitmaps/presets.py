"""Named parameter sets: the figure reproductions and one canonical case per map family."""
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .two_qubit import BlockParams


@dataclass(frozen=True)
class FigurePreset:
    name: str
    omega: float
    tan_phi: float
    r_E: tuple = (0.0, 0.0, 0.0)
    r1: Optional[tuple] = None
    r2: Optional[tuple] = None
    t_max: float = 0.0
    n_times: int = 2001
    note: str = ""

    @property
    def block(self) -> BlockParams:
        return BlockParams.from_tan(self.omega, self.tan_phi)

    @property
    def t_grid(self):
        return np.linspace(0.0, self.t_max, self.n_times)


def _fig2_r2(theta=math.pi / 2):
    return (math.cos(theta), math.sin(theta), 0.0)


_W2 = math.sqrt(5) / 2
FIGURES = {
    # chi = omega t / pi runs over [0, 4]
    "fig2": FigurePreset("fig2", _W2, 2.0, r1=(1.0, 0.0, 0.0), r2=_fig2_r2(),
                         t_max=4 * math.pi / _W2, n_times=2001,
                         note="second state angle theta = pi/2"),
    "fig3a": FigurePreset("fig3a", math.sqrt(17) / 4, 0.5,
                          t_max=2 * math.pi / (math.sqrt(17) / 4), n_times=2001),
    "fig3b": FigurePreset("fig3b", math.sqrt(5), 4.0,
                          t_max=2 * math.pi / math.sqrt(5), n_times=2001),
    "fig4": FigurePreset("fig4", _W2, 2.0, r1=(1.0, 0.0, 0.0), r2=(-1.0, 0.0, 0.0),
                         t_max=4 * math.pi / _W2, n_times=801),
}


@dataclass(frozen=True)
class FamilyPreset:
    family: str
    block: BlockParams
    r_E: tuple = field(default=(0.0, 0.0, 0.0))


_R = (0.3, 0.2, 0.4)
_RD = (0.2, 0.3, 0.1)
_ZA = (0.0, 0.0, 0.6)
FAMILIES = {
    "N": FamilyPreset("N", BlockParams.from_angles(1.0, 0.4, math.sqrt(2), 0.9), _R),
    "C": FamilyPreset("C", BlockParams.from_angles(2.0, 0.4, 1.0, 0.9), _R),
    "D": FamilyPreset("D", BlockParams.from_angles(1.0, 0.4, 1.0, 0.9), _R),
    "D+": FamilyPreset("D+", BlockParams.from_angles(1.0, 0.5, 1.0, 0.5), _RD),
    "D-": FamilyPreset("D-", BlockParams.from_angles(1.0, 0.5, 1.0, -0.5), _RD),
    "M+": FamilyPreset("M+", BlockParams.from_angles(1.0, 0.5, 1.0, 0.5), (1.0, 0.0, 0.0)),
    "M-": FamilyPreset("M-", BlockParams.from_angles(1.0, 0.5, 1.0, -0.5), (0.0, 1.0, 0.0)),
    # Delta- = kappa+ = 0; omega+ = 2, omega- = 2 kappa-
    "A+∩N": FamilyPreset("A+∩N", BlockParams(1.0, 0.0, 0.0, math.sqrt(2) / 2), _ZA),
    "A+∩D": FamilyPreset("A+∩D", BlockParams(0.5, 0.0, 0.0, 0.5), _ZA),
    # Delta+ = kappa- = 0
    "A-∩N": FamilyPreset("A-∩N", BlockParams(0.0, 1.0, math.sqrt(2) / 2, 0.0), _ZA),
    "A-∩D": FamilyPreset("A-∩D", BlockParams(0.0, 0.5, 0.5, 0.0), _ZA),
}
