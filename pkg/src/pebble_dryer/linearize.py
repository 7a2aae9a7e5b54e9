"""Deviation-variable state-space models around an operating point.

Two sources: the published coefficient stencil (``assemble_coefficient_model``)
and a central-difference Jacobian of the nonlinear right-hand side
(``numeric_jacobian``). The Jacobian is the one used for control analysis;
``compare_models`` reports where the two disagree.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InvalidLinearizationPoint, SingularStateError
from .model import (INPUT_LABELS, N_INPUTS, N_STATES, STATE_LABELS, ModelVariant,
                    PlantState, rhs_vector)
from .params import DerivedConstants
from .steady import OperatingPoint


@dataclass(frozen=True)
class AlphaCoefficients:
    values: tuple  # alpha_1 .. alpha_33 at positions 0..32

    def __getitem__(self, n: int) -> float:
        if not 1 <= n <= 33:
            raise IndexError(f"alpha index {n} outside 1..33")
        return self.values[n - 1]

    def __getattr__(self, name: str) -> float:
        if name.startswith("alpha_"):
            return self[int(name[6:])]
        raise AttributeError(name)

    def as_dict(self) -> dict:
        return {f"alpha_{i + 1}": v for i, v in enumerate(self.values)}

    @classmethod
    def from_mapping(cls, mapping: dict, default: float = 0.0) -> "AlphaCoefficients":
        """Build from ``{n: value}`` or ``{"alpha_n": value}``; missing entries get ``default``."""
        vals = [default] * 33
        for key, v in mapping.items():
            n = int(str(key).replace("alpha_", ""))
            vals[n - 1] = float(v)
        return cls(tuple(vals))


def alpha_coefficients(op: OperatingPoint, consts: DerivedConstants) -> AlphaCoefficients:
    """The 33 small-signal coefficients, transcribed term for term.

    Several published entries use the evaporated-moisture flow where the
    chamber-to-windbox flow would be expected (alpha_4, 5, 7) or the exhaust
    temperature where the chamber temperature would be (alpha_3); they are
    kept as published and the Jacobian comparison shows the effect.
    """
    k = consts
    kv, uv = op.kv, op.uv
    mc, mw, mg, me = op.m_chamber_ss, op.m_windbox_ss, op.m_dryergas_ss, op.m_exhaust_ss
    for name, m in (("m_chamber_ss", mc), ("m_windbox_ss", mw),
                    ("m_dryergas_ss", mg), ("m_exhaust_ss", me)):
        if m == 0:
            raise SingularStateError(name, m)
    mf, ma, Fs, Xin, Xout, Ta = kv.mdot_fuel, kv.mdot_air, kv.F_solids, kv.X_in, kv.X_out, kv.T_air_in
    Tdin, Ts, Tamb = kv.T_dryer_in_ss, kv.T_bed_ss, kv.T_ambient
    mcw, mwd, mgo, mst = (uv.mdot_chamber_to_windbox, uv.mdot_windbox_to_dryer,
                          uv.mdot_gas_out, uv.mdot_stack)
    Tc, Tw, Tg, Te, Tdo = uv.T_chamber, uv.T_windbox, uv.T_dryergas, uv.T_exhaust, uv.T_dryer_out
    mew = op.mdot_evap_to_windbox_ss
    dX = Xin - Xout

    a = [0.0] * 34
    a[1] = (k.k12 - Tc) / mc
    a[2] = (k.k22 * (Ta - Tc) - Tc) / mc
    a[3] = -(Te - Tc) / mc
    a[4] = (-k.k12 * mf + mf * Tc - k.k22 * ma * (Ta - Tc) + ma * Tc + mew * (Tc - Tw)) / mc ** 2
    a[5] = (mf + k.k22 * ma + ma + mew) / mc ** 2
    a[6] = k.k22 * ma / mc
    a[7] = mew / mc
    a[8] = (k.k14 * (Tc - Tw) - k.k24 * Tw) / mw
    a[9] = (-k.k34 * (Tw - Tdin) + k.k24 * Tw) / mw ** 2
    a[10] = ((-k.k14 * mcw * (Tc - Tw) + k.k24 * mcw * Tw + k.k34 * mwd * (Tw - Tdin)) / mw ** 2
             - k.k24 * mwd * Tw / mw ** 2)
    a[11] = k.k14 * mcw / mw
    a[12] = (-k.k14 * mcw - k.k24 * mcw) / mw + (k.k24 * mwd - k.k34 * mwd) / mw
    a[13] = k.k34 * mwd / mw
    a[14] = dX
    a[15] = Fs
    a[16] = (Tw - Tg) / mg
    a[17] = Te / mg
    a[18] = (mwd * (Tw - Tg) / mg ** 2
             + (Fs * dX * Tg - mgo * Te + k.k17 * (Tg - Ts)) / mg ** 2)
    a[19] = mwd / mg
    a[20] = (mwd + Fs * dX + k.k17) / mg
    a[21] = mgo / mg
    a[22] = k.k17 / mg
    a[23] = Tg * dX / mg
    a[24] = Fs * Tg / mg
    a[25] = (Tdin - 2 * Te) / me
    a[26] = (-Te + 2 * Tamb) / me
    a[27] = ((-mgo * Tdin + 2 * Te * mgo - 2 * Tamb * mst) / me ** 2
             + (Te * mst + k.k18 * (Tdo - Tamb)) / me ** 2)
    a[28] = (mgo - k.k18) / me
    a[29] = 2 * mgo / me
    a[30] = k.k19 * (Tdo - Te)
    a[31] = -2 * k.k19 * Te + (1 + k.k19) * Tamb
    a[32] = k.k19 * (2 * mst + mgo)
    a[33] = k.k19 * mgo - k.k29
    return AlphaCoefficients(tuple(a[1:]))


@dataclass
class StateSpaceModel:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray = None
    D: np.ndarray = None
    state_labels: tuple = STATE_LABELS
    input_labels: tuple = INPUT_LABELS
    source: str = ""

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)
        self.B = np.asarray(self.B, dtype=float)
        n, m = self.A.shape[0], self.B.shape[1]
        if self.C is None:
            self.C = np.eye(n)
        if self.D is None:
            self.D = np.zeros((n, m))
        self.C = np.asarray(self.C, dtype=float)
        self.D = np.asarray(self.D, dtype=float)
        if self.A.shape != (n, n) or self.B.shape[0] != n:
            raise ValueError(f"inconsistent shapes A{self.A.shape} B{self.B.shape}")
        if not (np.array_equal(self.C, np.eye(n)) and not self.D.any()):
            raise ValueError("outputs are the states: C must be I and D must be 0")


def assemble_coefficient_model(alphas: AlphaCoefficients) -> StateSpaceModel:
    """A and B filled from the published stencil, signs included."""
    a = alphas
    A = np.zeros((N_STATES, N_STATES))
    B = np.zeros((N_STATES, N_INPUTS))
    A[1, [0, 1, 3]] = [a[4], -a[5], a[7]]
    A[3, [1, 2, 3]] = [a[11], a[10], a[12]]
    A[6, [3, 5, 6, 8]] = [a[19], a[18], -a[20], a[21]]
    A[8, [7, 8]] = [a[27], -a[29]]
    A[9, 8] = -a[32]

    B[0, [0, 1, 2]] = [1, 1, -1]
    B[1, [0, 1, 3, 4]] = [a[1], a[2], -a[3], a[6]]
    B[2, [2, 3, 6]] = [1, -1, -1]
    B[3, [2, 5, 6]] = [a[8], a[9], a[13]]
    B[4, [7, 8, 9]] = [a[14], a[15], -a[15]]
    B[5, [7, 8, 9, 10]] = [a[16], a[15], -a[15], -1]
    B[6, [5, 7, 8, 9, 10, 11]] = [a[16], -a[23], -a[24], a[24], a[17], a[22]]
    B[7, [10, 12]] = [1, -1]
    B[8, [10, 12, 13]] = [a[25], a[26], a[28]]
    B[9, [10, 12, 13]] = [a[30], a[31], a[33]]
    return StateSpaceModel(A, B, source="paper")


def central_jacobian(f: Callable, x: np.ndarray, u: np.ndarray,
                     rel_step: float = 1e-6, abs_floor: float = 1e-9):
    """(df/dx, df/du) of ``f(x, u)`` by central differences."""
    if rel_step <= 0:
        raise ValueError("step must be positive")
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    f0 = np.asarray(f(x, u), dtype=float)
    Jx = np.empty((f0.size, x.size))
    Ju = np.empty((f0.size, u.size))
    for J, vec, is_x in ((Jx, x, True), (Ju, u, False)):
        for j in range(vec.size):
            h = max(rel_step * abs(vec[j]), abs_floor)
            plus = vec.copy()
            minus = vec.copy()
            plus[j] += h
            minus[j] -= h
            if is_x:
                fp, fm = f(plus, u), f(minus, u)
            else:
                fp, fm = f(x, plus), f(x, minus)
            J[:, j] = (np.asarray(fp) - np.asarray(fm)) / (plus[j] - minus[j])
    return Jx, Ju


def numeric_jacobian(op: OperatingPoint, inputs_ss, consts: DerivedConstants,
                     variant: ModelVariant = ModelVariant.PAPER_VERBATIM,
                     step: float = 1e-6, residual_tol: float = 1e-6) -> StateSpaceModel:
    """Central-difference linearization of the nonlinear model at ``op``.

    Refuses points whose (scaled, determined-row) residual norm exceeds
    ``residual_tol``.
    """
    norm = op.norm()
    if not norm <= residual_tol:
        raise InvalidLinearizationPoint(
            f"operating point residual norm {norm:.3g} exceeds {residual_tol:g}")
    consistent = ModelVariant.parse(variant) is ModelVariant.MASS_CONSISTENT
    f = lambda x, u: rhs_vector(x, u, consts, consistent)
    A, B = central_jacobian(f, op.state().to_array(), inputs_ss.to_array(), step)
    return StateSpaceModel(A, B, source="jacobian")


@dataclass
class DiscrepancyReport:
    tol: float
    abs_diff_A: np.ndarray
    abs_diff_B: np.ndarray
    rel_diff_A: np.ndarray
    rel_diff_B: np.ndarray
    entries: list = field(default_factory=list)

    @property
    def empty(self) -> bool:
        return not self.entries

    def to_dict(self) -> dict:
        return {
            "tolerance": self.tol,
            "count": len(self.entries),
            "max_abs_diff_A": float(self.abs_diff_A.max(initial=0.0)),
            "max_abs_diff_B": float(self.abs_diff_B.max(initial=0.0)),
            "entries": self.entries,
        }


def compare_models(a: StateSpaceModel, b: StateSpaceModel, tol: float = 1e-6) -> DiscrepancyReport:
    if a.A.shape != b.A.shape or a.B.shape != b.B.shape:
        raise ValueError(f"shape mismatch: A {a.A.shape} vs {b.A.shape}, B {a.B.shape} vs {b.B.shape}")
    if tuple(a.state_labels) != tuple(b.state_labels) or tuple(a.input_labels) != tuple(b.input_labels):
        raise ValueError("label mismatch between models")
    entries = []
    diffs = {}
    for name, Ma, Mb, cols in (("A", a.A, b.A, a.state_labels), ("B", a.B, b.B, a.input_labels)):
        d = np.abs(Ma - Mb)
        scale = np.maximum(1.0, np.maximum(np.abs(Ma), np.abs(Mb)))
        diffs[name] = (d, d / scale)
        for i, j in zip(*np.nonzero(d > tol * scale)):
            entries.append({
                "matrix": name, "row": int(i), "col": int(j),
                "row_label": a.state_labels[i], "col_label": cols[j],
                "first": float(Ma[i, j]), "second": float(Mb[i, j]),
                "abs_diff": float(d[i, j]),
            })
    return DiscrepancyReport(tol, diffs["A"][0], diffs["B"][0], diffs["A"][1], diffs["B"][1], entries)


def to_deviation(state: PlantState, op: OperatingPoint) -> np.ndarray:
    return state.to_array() - op.state().to_array()


def from_deviation(dv, op: OperatingPoint, T_bed: Optional[float] = None) -> PlantState:
    return PlantState.from_array(np.asarray(dv, dtype=float) + op.state().to_array(), T_bed=T_bed)
