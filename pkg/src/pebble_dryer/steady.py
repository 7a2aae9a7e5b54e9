"""Steady-state operating points: closed form, residual check, Newton oracle."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import ConfigError, NonConvergenceError, SingularOperatingPointError
from .model import ExogenousInputs, PlantState, bedwater_for_moisture
from .params import DerivedConstants

# Row 5 (bed water) asks F_s*(X_in - X_out) = 0, which no drying point meets.
# Row 10 (pressure) equals k19 * row 9 plus E*T_amb*(1 - k19), so it cannot
# vanish together with row 9. Both are reported but kept out of the norm.
DEFAULT_EXCLUDED_ROWS = (4, 9)


@dataclass(frozen=True)
class KnownVariables:
    mdot_fuel: float
    mdot_air: float
    F_solids: float
    X_in: float
    X_out: float
    T_air_in: float
    T_dryer_in_ss: float
    T_bed_ss: float
    T_ambient: float

    def as_dict(self) -> dict:
        return asdict(self)


UV_ORDER = (
    "mdot_chamber_to_windbox", "mdot_windbox_to_dryer", "mdot_gas_out", "mdot_stack",
    "T_chamber", "T_windbox", "T_dryergas", "T_exhaust", "T_dryer_out",
)


@dataclass(frozen=True)
class UnknownVariables:
    mdot_chamber_to_windbox: float
    mdot_windbox_to_dryer: float
    mdot_gas_out: float
    mdot_stack: float
    T_chamber: float
    T_windbox: float
    T_dryergas: float
    T_exhaust: float
    T_dryer_out: float

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in UV_ORDER], dtype=float)

    @classmethod
    def from_array(cls, values) -> "UnknownVariables":
        return cls(**dict(zip(UV_ORDER, map(float, values))))

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class OperatingPoint:
    kv: KnownVariables
    uv: UnknownVariables
    residuals: np.ndarray
    m_chamber_ss: float = 1.0
    m_windbox_ss: float = 1.0
    m_dryergas_ss: float = 2.0
    m_exhaust_ss: float = 2.0
    M_bedwater_ss: float = 110.0
    P_ss: float = -1.0e5
    mdot_evap_to_windbox_ss: float = 0.2
    scaled_residuals: Optional[np.ndarray] = field(default=None, compare=False)

    def state(self) -> PlantState:
        uv = self.uv
        return PlantState(
            self.m_chamber_ss, uv.T_chamber, self.m_windbox_ss, uv.T_windbox,
            self.M_bedwater_ss, self.m_dryergas_ss, uv.T_dryergas,
            self.m_exhaust_ss, uv.T_exhaust, self.P_ss)

    def inputs(self) -> ExogenousInputs:
        kv, uv = self.kv, self.uv
        return ExogenousInputs(
            mdot_fuel=kv.mdot_fuel, mdot_air=kv.mdot_air,
            mdot_chamber_to_windbox=uv.mdot_chamber_to_windbox,
            mdot_evap_to_windbox=self.mdot_evap_to_windbox_ss,
            T_air_in=kv.T_air_in, mdot_windbox_to_dryer=uv.mdot_windbox_to_dryer,
            T_dryer_in=kv.T_dryer_in_ss, F_solids=kv.F_solids, X_in=kv.X_in,
            X_out_cmd=kv.X_out, mdot_gas_out=uv.mdot_gas_out, T_bed_input=kv.T_bed_ss,
            mdot_stack=uv.mdot_stack, T_dryer_out=uv.T_dryer_out)

    def masses(self) -> dict:
        return {"m_chamber_ss": self.m_chamber_ss, "m_windbox_ss": self.m_windbox_ss,
                "m_dryergas_ss": self.m_dryergas_ss, "m_exhaust_ss": self.m_exhaust_ss,
                "M_bedwater_ss": self.M_bedwater_ss}

    def norm(self, excluded=DEFAULT_EXCLUDED_ROWS) -> float:
        scaled = self.scaled_residuals
        if scaled is None:
            return float("nan")
        keep = [abs(v) for i, v in enumerate(scaled) if i not in excluded]
        return max(keep) if keep else 0.0

    def to_dict(self) -> dict:
        return {
            "known": self.kv.as_dict(),
            "unknown": self.uv.as_dict(),
            **self.masses(),
            "P_ss": self.P_ss,
            "mdot_evap_to_windbox_ss": self.mdot_evap_to_windbox_ss,
            "residuals": [float(r) for r in self.residuals],
            "scaled_residuals": None if self.scaled_residuals is None
            else [float(r) for r in self.scaled_residuals],
        }


def _solve2(a11, a12, a21, a22, b1, b2, what):
    det = a11 * a22 - a12 * a21
    scale = max(abs(a11 * a22), abs(a12 * a21), 1e-300)
    if det == 0.0 or abs(det) < 1e-13 * scale:
        raise SingularOperatingPointError(what)
    return (b1 * a22 - a12 * b2) / det, (a11 * b2 - b1 * a21) / det


def closed_form_op(kv: KnownVariables, consts: DerivedConstants) -> UnknownVariables:
    """Solve the steady balances directly.

    Flows come first from the mass rows. With flows fixed the energy rows are
    linear in temperature: chamber/windbox form one 2x2 system, dryer
    gas/exhaust another once T_dryer_out = T_dryergas closes the chain.
    """
    k = consts
    mf, ma = kv.mdot_fuel, kv.mdot_air
    mcw = mf + ma
    mwd = mcw

    Tc, Tw = _solve2(
        mf + k.k22 * ma + ma + mcw, -mcw,
        -k.k14 * mcw, (k.k14 + k.k24) * mcw + (k.k34 - k.k44) * mwd,
        k.k12 * mf + k.k22 * ma * kv.T_air_in, k.k34 * mwd * kv.T_dryer_in_ss,
        "chamber/windbox temperatures: determinant of rows 2 and 4 is zero "
        "(mdot_fuel + mdot_air = 0?)")

    mgo = kv.F_solids * (kv.X_in - kv.X_out)
    mst = mgo
    Tg, Te = _solve2(
        mwd + mgo + k.k17, -mgo,
        mgo - k.k18, -(2.0 * mgo + mst),
        mwd * Tw + k.k17 * kv.T_bed_ss, -(2.0 * mst + k.k18) * kv.T_ambient,
        "dryer-gas/exhaust temperatures: determinant of rows 7 and 9 is zero "
        "(F_solids*(X_in - X_out) = 0?)")
    return UnknownVariables(mcw, mwd, mgo, mst, Tc, Tw, Tg, Te, Tg)


def printed_closed_form(kv: KnownVariables, consts: DerivedConstants) -> dict:
    """Evaluate the published closed-form temperature quotients verbatim.

    Kept only for cross-reference: their values do not satisfy the steady
    balances, and the dryer-gas quotient divides by (mdot_gas_out - mdot_stack),
    which is zero at every steady state.
    """
    k = consts
    mf, ma, Ta, Tdin = kv.mdot_fuel, kv.mdot_air, kv.T_air_in, kv.T_dryer_in_ss
    mcw = mf + ma
    mwd = mcw
    out = {"mdot_chamber_to_windbox": mcw, "mdot_windbox_to_dryer": mwd}

    d1 = mcw + k.k22 * ma
    d2 = (k.k34 * mcw * mwd - k.k24 * (mcw ** 2 + k.k22 * ma * mcw)
          + k.k14 * k.k22 * ma * mcw + k.k22 * k.k34 * ma * mwd)
    num2 = (mcw ** 2 * (k.k34 * Tdin * mwd + k.k12 * k.k14 * mf)
            + k.k22 * ma * (k.k14 * mcw ** 2 * Ta + k.k34 * Tdin * mwd * mcw))
    out["T_chamber"] = (k.k12 * mf + k.k22 * ma * Ta) / d1 + num2 / (d1 * d2)

    dw = mcw * (k.k34 * mwd + k.k14 * k.k22 * ma - k.k22 * k.k24 * ma) + k.k22 * k.k34 * ma * mwd
    out["T_windbox"] = (mcw * (k.k34 * Tdin * mwd + k.k12 * k.k14 * mf + k.k14 * k.k22 * ma * Ta)
                        + k.k22 * k.k34 * Tdin * ma * mwd) / dw

    mgo = kv.F_solids * (kv.X_in - kv.X_out)
    mst = mgo
    out["mdot_gas_out"] = mgo
    out["mdot_stack"] = mst
    if mgo - mst == 0.0:
        out["T_dryergas"] = None
        out["T_dryergas_note"] = "singular: divides by (mdot_gas_out - mdot_stack) = 0"
    return out


def _row_terms(kv: KnownVariables, uv: UnknownVariables, k: DerivedConstants) -> list:
    """Additive terms of each steady-state balance row, state order."""
    mf, ma, Fs, Xin, Xout, Ta = (kv.mdot_fuel, kv.mdot_air, kv.F_solids, kv.X_in,
                                 kv.X_out, kv.T_air_in)
    Tdin, Ts, Tamb = kv.T_dryer_in_ss, kv.T_bed_ss, kv.T_ambient
    mcw, mwd, mgo, mst = (uv.mdot_chamber_to_windbox, uv.mdot_windbox_to_dryer,
                          uv.mdot_gas_out, uv.mdot_stack)
    Tc, Tw, Tg, Te, Tdo = uv.T_chamber, uv.T_windbox, uv.T_dryergas, uv.T_exhaust, uv.T_dryer_out
    E = Fs * (Xin - Xout)
    return [
        [mf, ma, -mcw],
        [k.k12 * mf, -mf * Tc, k.k22 * ma * (Ta - Tc), -ma * Tc, -mcw * (Tc - Tw)],
        [mcw, -mwd],
        [k.k14 * mcw * (Tc - Tw), -k.k24 * mcw * Tw, -k.k34 * mwd * (Tw - Tdin), k.k44 * mwd * Tw],
        [E],
        [E, -mgo],
        [mwd * (Tw - Tg), -E * Tg, -mgo * (Tg - Te), mgo * Tg, -k.k17 * (Tg - Ts)],
        [mgo, -mst],
        [mgo * (Tdo - Te), -mgo * Te, -mst * (Te - Tamb), mst * Te, -mst * (Te - Tamb),
         -k.k18 * (Tdo - Tamb)],
        [k.k19 * Te * (mgo - mst), k.k19 * mgo * (Tdo - Te), -k.k19 * mgo * Te,
         -k.k19 * mst * (Te - Tamb), mst * Te, -mst * (Te - Tamb), -k.k29 * (Tdo - Tamb)],
    ]


def residual_vector(kv: KnownVariables, uv: UnknownVariables, consts: DerivedConstants):
    """(raw, scaled) residuals of the ten steady balances.

    Scaled residual = raw / max(1, largest |term| in that row).
    """
    terms = _row_terms(kv, uv, consts)
    raw = np.array([math.fsum(row) for row in terms])
    scale = np.array([max(1.0, max(abs(t) for t in row)) for row in terms])
    return raw, raw / scale


def residuals(op: OperatingPoint, consts: DerivedConstants) -> np.ndarray:
    return residual_vector(op.kv, op.uv, consts)[0]


_NEWTON_ROWS = (0, 1, 2, 3, 5, 6, 7, 8)


def _newton_scales(kv: KnownVariables, k: DerivedConstants, z: np.ndarray) -> np.ndarray:
    uv = UnknownVariables.from_array(z)
    terms = _row_terms(kv, uv, k)
    scales = [max(1.0, max(abs(t) for t in terms[i])) for i in _NEWTON_ROWS]
    return np.array(scales + [max(1.0, abs(uv.T_dryergas))])


def _newton_system(kv: KnownVariables, k: DerivedConstants, z: np.ndarray,
                   scales: np.ndarray) -> np.ndarray:
    # scales stay fixed for the whole solve; rescaling per iterate lets the
    # merit function shrink by sending temperatures off to infinity
    uv = UnknownVariables.from_array(z)
    terms = _row_terms(kv, uv, k)
    out = [math.fsum(terms[i]) for i in _NEWTON_ROWS]
    out.append(uv.T_dryer_out - uv.T_dryergas)
    return np.array(out) / scales


@dataclass
class NewtonInfo:
    iterations: int
    norm: float
    condition: float


def newton_solve(kv: KnownVariables, consts: DerivedConstants, guess: UnknownVariables,
                 tol: float = 1e-12, max_iter: int = 50, return_info: bool = False):
    """Damped Newton on the nine determined steady balances.

    Equations: mass and energy rows for chamber, windbox, dryer gas and
    exhaust plus the closure T_dryer_out = T_dryergas. Finite-difference
    Jacobian, step halving (up to 30 times) when the residual norm grows.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    z = guess.to_array()
    if not np.all(np.isfinite(z)):
        raise ValueError("guess must be finite")
    scales = _newton_scales(kv, consts, z)
    F = _newton_system(kv, consts, z, scales)
    norm = float(np.max(np.abs(F)))
    cond = float("nan")
    it = 0
    while norm >= tol:
        if it >= max_iter:
            raise NonConvergenceError(
                f"Newton did not converge in {max_iter} iterations",
                last_norm=norm, iterations=it, condition=cond)
        it += 1
        J = np.empty((9, 9))
        for j in range(9):
            h = 1e-7 * max(1.0, abs(z[j]))
            zp = z.copy()
            zm = z.copy()
            zp[j] += h
            zm[j] -= h
            J[:, j] = (_newton_system(kv, consts, zp, scales) - _newton_system(kv, consts, zm, scales)) / (2 * h)
        cond = float(np.linalg.cond(J))
        if not np.isfinite(cond) or cond > 1e14:
            raise NonConvergenceError(
                "Newton Jacobian is singular", last_norm=norm, iterations=it, condition=cond)
        dz = np.linalg.solve(J, -F)
        step = 1.0
        for _ in range(31):
            z_new = z + step * dz
            F_new = _newton_system(kv, consts, z_new, scales)
            norm_new = float(np.max(np.abs(F_new)))
            if np.isfinite(norm_new) and norm_new < norm:
                break
            step *= 0.5
        else:
            raise NonConvergenceError(
                "line search failed to reduce the residual",
                last_norm=norm, iterations=it, condition=cond)
        z, F, norm = z_new, F_new, norm_new
    result = UnknownVariables.from_array(z)
    if return_info:
        return result, NewtonInfo(it, norm, cond)
    return result


def build_operating_point(kv: KnownVariables, consts: DerivedConstants,
                          uv: Optional[UnknownVariables] = None, *,
                          m_chamber_ss: float = 1.0, m_windbox_ss: float = 1.0,
                          m_dryergas_ss: float = 2.0, m_exhaust_ss: float = 2.0,
                          M_bedwater_ss: Optional[float] = None, M_solid: float = 750.0,
                          P_ss: float = -1.0e5,
                          mdot_evap_to_windbox_ss: float = 0.2) -> OperatingPoint:
    """Assemble an OperatingPoint, solving the closed form when ``uv`` is omitted.

    ``M_bedwater_ss`` defaults to the bed water that gives X_out through the
    wet-basis moisture relation, so the point is a true equilibrium of the
    moisture loop.
    """
    for name, value in (("m_chamber_ss", m_chamber_ss), ("m_windbox_ss", m_windbox_ss),
                        ("m_dryergas_ss", m_dryergas_ss), ("m_exhaust_ss", m_exhaust_ss)):
        if value == 0:
            raise SingularOperatingPointError(f"{name} = 0")
    if uv is None:
        uv = closed_form_op(kv, consts)
    if M_bedwater_ss is None:
        M_bedwater_ss = bedwater_for_moisture(kv.X_out, M_solid)
    raw, scaled = residual_vector(kv, uv, consts)
    return OperatingPoint(kv, uv, raw, m_chamber_ss, m_windbox_ss, m_dryergas_ss,
                          m_exhaust_ss, M_bedwater_ss, P_ss, mdot_evap_to_windbox_ss,
                          scaled_residuals=scaled)


def with_unknowns(op: OperatingPoint, uv: UnknownVariables, consts: DerivedConstants) -> OperatingPoint:
    raw, scaled = residual_vector(op.kv, uv, consts)
    return replace(op, uv=uv, residuals=raw, scaled_residuals=scaled)


def operating_point_from_dict(data: dict, consts: DerivedConstants) -> OperatingPoint:
    """Rebuild an OperatingPoint from ``to_dict`` output; residuals are recomputed."""
    try:
        kv = KnownVariables(**data["known"])
        uv = UnknownVariables(**data["unknown"])
        extras = {k: float(data[k]) for k in ("m_chamber_ss", "m_windbox_ss", "m_dryergas_ss",
                                              "m_exhaust_ss", "M_bedwater_ss", "P_ss",
                                              "mdot_evap_to_windbox_ss") if k in data}
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed operating point: {exc}") from None
    raw, scaled = residual_vector(kv, uv, consts)
    return OperatingPoint(kv, uv, raw, scaled_residuals=scaled, **extras)
