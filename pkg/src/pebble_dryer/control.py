"""Loop compensators: moisture PI by direct synthesis, furnace and draft IMC.

The ``g*_model`` / ``imc_compensator_g*`` functions reproduce the published
designs from the alpha coefficients. ``imc_design`` is the general recipe
(factor, filter, rationalize) that the simulator applies to loop models
taken from the Jacobian of the closed-loop plant.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DesignError, ImproperTransferFunctionError, TuningError
from .linearize import AlphaCoefficients
from .model import UnphysicalConditionWarning
from .steady import OperatingPoint
from .tf import RationalTransferFunction as TF

S = TF.s()


@dataclass(frozen=True)
class MoistureLoopModel:
    k_x: float
    K1: float
    tau: float

    def transfer_function(self) -> TF:
        return TF([self.K1], [1.0, self.tau])

    @property
    def dc_gain(self) -> float:
        # the linearized balance k_x*dX*df - k_x*F_s*dx has static gain K1*tau, not K1
        return self.K1 * self.tau

    def rescaled(self) -> "MoistureLoopModel":
        """Same lag with the gain implied by the linearized moisture balance."""
        return MoistureLoopModel(self.k_x, self.dc_gain, self.tau)


@dataclass(frozen=True)
class PIGains:
    Kc: float
    tau_I: float

    def transfer_function(self) -> TF:
        return TF([self.Kc, self.Kc * self.tau_I], [0.0, self.tau_I])


@dataclass
class IMCDesign:
    plant: TF
    noninvertible_part: TF
    invertible_part: TF
    filter: TF
    filter_lambda: float
    filter_order: int
    compensator: TF
    rhp_zero: Optional[float] = None
    drive_compensator: Optional[TF] = None
    warnings: list = field(default_factory=list)

    @property
    def internal_controller(self) -> TF:
        return self.invertible_part.inverse() * self.filter

    def to_dict(self) -> dict:
        out = {
            "plant": self.plant.to_dict(),
            "noninvertible_part": self.noninvertible_part.to_dict(),
            "invertible_part": self.invertible_part.to_dict(),
            "filter_lambda_s": self.filter_lambda,
            "filter_order": self.filter_order,
            "compensator": self.compensator.to_dict(),
            "rhp_zero": self.rhp_zero,
            "warnings": list(self.warnings),
        }
        if self.drive_compensator is not None:
            out["drive_compensator"] = self.drive_compensator.to_dict()
        return out


# moisture loop ----------------------------------------------------------------

def g1_model(op: OperatingPoint, M_solid: float) -> MoistureLoopModel:
    kv = op.kv
    if not M_solid > 0:
        raise DesignError(f"M_solid must be positive, got {M_solid}")
    if kv.F_solids == 0:
        raise DesignError("F_solids^ss = 0 gives an infinite moisture time constant")
    k_x = (1.0 - kv.X_out) ** 2 / M_solid
    K1 = k_x * (kv.X_in - kv.X_out)
    tau = M_solid / (kv.F_solids * (1.0 - kv.X_out) ** 2)
    if K1 == 0:
        warnings.warn("moisture loop gain is zero (X_in = X_out)", UnphysicalConditionWarning,
                      stacklevel=2)
    return MoistureLoopModel(k_x, K1, tau)


def pi_direct_synthesis(model: MoistureLoopModel, tau_c: float) -> PIGains:
    if not tau_c > 0:
        raise DesignError(f"closed-loop time constant must be positive, got {tau_c}")
    if model.K1 == 0:
        raise DesignError("cannot invert a zero-gain process")
    return PIGains(model.tau / (model.K1 * tau_c), model.tau)


def direct_synthesis(plant: TF, target: TF, reduce: bool = True) -> TF:
    """Gc = T/(G(1 - T)) for a desired closed loop T.

    With ``reduce=False`` the raw quotient is returned; cancelling repeated
    roots goes through a root finder and costs about sqrt(eps) in accuracy.
    """
    gc = target / (plant * (1 - target))
    return gc.minreal() if reduce else gc


# furnace-temperature loop -----------------------------------------------------

def g2_model(alphas: AlphaCoefficients) -> TF:
    a = alphas
    num = np.polynomial.polynomial.polymul([a[12], -1.0], [a[4], a[2]])
    den = [0.0, a[5] * a[12] + a[7] * a[11], a[12] + a[5], -1.0]
    return TF(num, den)


def _rhp_warnings(tf: TF, label: str) -> list:
    out = []
    for kind, roots in (("poles", tf.poles()), ("zeros", tf.zeros())):
        bad = roots[roots.real > 0]
        if bad.size:
            out.append(f"{label} has right-half-plane {kind} {np.round(bad, 6).tolist()}")
    return out


def g2_factorize(alphas: AlphaCoefficients) -> IMCDesign:
    """Split G2 into the published non-invertible and invertible parts.

    Only ``plant``, the two parts, ``rhp_zero`` and ``warnings`` are filled.
    When alpha_12 <= 0 the zero is not in the right half plane; the
    non-invertible part is then the bare integrator 1/s.
    """
    a = alphas
    d_plus = [a[5] * a[12] + a[7] * a[11], a[12] + a[5], -1.0]
    msgs = []
    if a[12] > 0:
        minus = TF([a[12], -1.0], [0.0, 1.0])
        plus = TF([a[4], a[2]], d_plus)
        rhp = a[12]
    else:
        minus = TF([1.0], [0.0, 1.0])
        plus = TF(np.polynomial.polynomial.polymul([a[12], -1.0], [a[4], a[2]]), d_plus)
        rhp = None
        msgs.append(f"alpha_12 = {a[12]:.6g} <= 0: no right-half-plane zero, G2- = 1/s")
    plant = g2_model(alphas)
    if not (minus * plus).equals(plant):
        msgs.append("factorization identity failed")
    bad = _rhp_warnings(plus, "invertible part")
    if bad:
        msgs.append("nonminimum-phase remainder: " + "; ".join(bad))
    for m in msgs:
        warnings.warn(m, UnphysicalConditionWarning, stacklevel=2)
    empty = TF([1.0], [1.0])
    return IMCDesign(plant, minus, plus, empty, float("nan"), 0, empty, rhp, warnings=msgs)


def lambda2_diagnostics(alphas: AlphaCoefficients) -> dict:
    a = alphas
    wn2 = a[7] * a[11] + a[5] * a[12]
    diag = {"omega_n_squared": wn2, "alpha_12": a[12], "alpha_5": a[5]}
    if not wn2 > 0:
        return diag
    wn = math.sqrt(wn2)
    gap = max(a[12] - a[5], 0.0)
    T_dom = max(1.0 / wn, 1.0 / gap) if gap > 0 else 1.0 / wn
    lam = max(1.0 / wn, 0.3 * T_dom)
    floor = 1.0 / (2.0 * a[12]) if a[12] > 0 else None
    raised = floor is not None and lam < floor
    diag.update({"omega_n": wn, "T_dom": T_dom, "lambda_rule": lam, "floor": floor,
                 "floor_applied": raised, "lambda2": floor if raised else lam})
    return diag


def lambda2_tuning(alphas: AlphaCoefficients) -> float:
    """Filter time constant: max(1/wn, 0.3*T_dom), raised to 1/(2*alpha_12) if below."""
    diag = lambda2_diagnostics(alphas)
    if "lambda2" not in diag:
        raise TuningError(
            f"omega_n^2 = alpha_7*alpha_11 + alpha_5*alpha_12 = {diag['omega_n_squared']:.6g} <= 0",
            diagnostics=diag)
    return diag["lambda2"]


def _imc_close(minus: TF, plus: TF, filt: TF) -> TF:
    """Gc = plus^-1 * F / (1 - minus * F), as one rational function."""
    gc = plus.inverse() * filt / (1 - minus * filt)
    return gc.minreal()


def imc_compensator_g2(alphas: AlphaCoefficients, lambda2: float,
                       k_air_actuator: Optional[float] = None) -> IMCDesign:
    if not lambda2 > 0:
        raise DesignError(f"lambda2 must be positive, got {lambda2}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        parts = g2_factorize(alphas)
    filt = TF([1.0], [1.0, lambda2]) ** 2
    gc = _imc_close(parts.noninvertible_part, parts.invertible_part, filt)
    if not gc.is_proper():
        raise ImproperTransferFunctionError(f"G2 compensator is improper: {gc}")
    drive = gc * (1.0 / k_air_actuator) if k_air_actuator else None
    return IMCDesign(parts.plant, parts.noninvertible_part, parts.invertible_part, filt,
                     lambda2, 2, gc, parts.rhp_zero, drive, list(parts.warnings))


# draft-pressure loop ----------------------------------------------------------

def g3_model(alphas: AlphaCoefficients):
    """(G3, rhp_zero). The zero z3 = alpha_27/alpha_26 is reported only when positive."""
    a = alphas
    num = [a[32] * a[27], a[31] * a[29] - a[32] * a[26], a[31]]
    den = [0.0, 0.0, a[29], 1.0]
    if np.allclose(num, 0.0, atol=0.0):
        raise DesignError("G3 numerator is identically zero")
    z3 = a[27] / a[26] if a[26] != 0 else None
    return TF(num, den), (z3 if z3 is not None and z3 > 0 else None)


def imc_compensator_g3(alphas: AlphaCoefficients, lambda3: Optional[float] = None,
                       filter_order: int = 2, stack_gain: Optional[float] = None) -> IMCDesign:
    a = alphas
    if lambda3 is None:
        lambda3 = 3.0 / a[29]
    if not lambda3 > 0:
        raise DesignError(f"lambda3 must be positive, got {lambda3}")
    if filter_order < 2:
        raise DesignError("draft-pressure filter order must be at least 2")
    plant, _ = g3_model(alphas)
    N3 = TF(plant.num, [1.0])
    z3 = a[27] / a[26] if a[26] != 0 else None
    if z3 is not None and z3 > 0:
        allpass = TF([1.0, -1.0 / z3], [1.0])
        minus = allpass / TF([0.0, 0.0, 1.0], [1.0])
        plus = N3 / TF([a[29], 1.0], [1.0]) / allpass
        rhp = z3
    else:
        minus = TF([1.0], [0.0, 0.0, 1.0])
        plus = N3 / TF([a[29], 1.0], [1.0])
        rhp = None
    filt = TF([1.0], [1.0, lambda3]) ** filter_order
    gc = _imc_close(minus, plus, filt)
    if not gc.is_proper():
        raise ImproperTransferFunctionError(f"G3 compensator is improper: {gc}")
    msgs = _rhp_warnings(plus, "invertible part")
    drive = gc * (1.0 / stack_gain) if stack_gain else None
    return IMCDesign(plant, minus, plus, filt, lambda3, filter_order, gc, rhp, drive, msgs)


# actuators ---------------------------------------------------------------------

def air_actuator(c2: float, k_a: float) -> float:
    if not k_a > 0:
        raise DesignError("k_a must be positive")
    return max(0.0, k_a * c2)


def stack_gain(k_f: float, P_ss: float) -> float:
    if not k_f > 0:
        raise DesignError("k_f must be positive")
    return k_f * math.sqrt(abs(P_ss))


def stack_actuator(c3: float, k_f: float, P_ss: float) -> float:
    return max(0.0, stack_gain(k_f, P_ss) * c3)


# general IMC ---------------------------------------------------------------------

def _series_inverse(c, n: int) -> np.ndarray:
    """First n Taylor coefficients of 1/c(s), c ascending with c[0] != 0."""
    out = np.zeros(n)
    for j in range(n):
        acc = 1.0 if j == 0 else 0.0
        for i in range(1, min(j, len(c) - 1) + 1):
            acc -= c[i] * out[j - i]
        out[j] = acc / c[0]
    return out


def imc_design(plant: TF, lam: float, order: Optional[int] = None, tol: float = 1e-9) -> IMCDesign:
    """IMC for a stable or integrating plant.

    Right-half-plane zeros go into the non-invertible part as (1 - s/z)
    factors (unit gain at s = 0). The filter order defaults to the relative
    degree of the invertible part (at least 1) plus the number of origin poles. With k
    origin poles the filter numerator is the degree-k polynomial that makes
    1 - G_minus*F vanish to order k+1 at s = 0, so the controller rejects
    ramp-like loads the integrators would otherwise pass.
    """
    if not lam > 0:
        raise DesignError(f"filter time constant must be positive, got {lam}")
    plant = plant.strip_origin()
    n_int = 0
    while n_int < len(plant.den) - 1 and plant.den[n_int] == 0.0:
        n_int += 1
    rhp = [z for z in plant.zeros() if z.real > 1e-12]
    minus = TF([1.0], [1.0])
    for z in rhp:
        if abs(z.imag) > 1e-12:
            raise DesignError("complex right-half-plane zeros are not supported")
        minus = minus * TF([1.0, -1.0 / z.real], [1.0])
    plus = plant / minus
    plus = plus.minreal()
    rel = max(plus.relative_degree, 1) + n_int
    order = rel if order is None else order
    if order < rel:
        raise DesignError(f"filter order {order} below the required {rel}")
    lag = np.polynomial.polynomial.polypow([1.0, lam], order)
    if n_int:
        k = n_int + 1
        target = np.zeros(k)
        target[:min(k, len(lag))] = lag[:k]
        num = np.polynomial.polynomial.polymul(target, _series_inverse(minus.num, k))[:k]
        filt = TF(num, lag)
    else:
        filt = TF([1.0], lag)
    gc = (plus.inverse() * filt / (1 - minus * filt)).minreal(1e-6)
    if not gc.is_proper():
        raise ImproperTransferFunctionError(f"IMC compensator is improper: {gc}")
    return IMCDesign(plant, minus, plus, filt, lam, order, gc,
                     float(rhp[0].real) if rhp else None)


# analysis ------------------------------------------------------------------------

def complementary_sensitivity(compensator: TF, plant: TF) -> TF:
    return (compensator * plant).feedback(1.0)


def loop_shaping_report(compensator: TF, plant: TF, w=None) -> dict:
    """Max sensitivity, phase margin and gain margin of L = Gc*G on a log grid."""
    if w is None:
        w = np.logspace(-6, 4, 20000)
    L = compensator(1j * w) * plant(1j * w)
    Ms = float(np.max(np.abs(1.0 / (1.0 + L))))
    mag = np.abs(L)
    phase = np.unwrap(np.angle(L))
    pm = gm = None
    cross = np.nonzero(np.diff(np.sign(mag - 1.0)))[0]
    if cross.size:
        i = cross[0]
        pm = float(np.degrees(phase[i]) % 360.0 - 180.0)
    pc = np.nonzero(np.diff(np.sign((np.degrees(phase) + 180.0) % 360.0 - 180.0)))[0]
    pc = [i for i in pc if abs(((np.degrees(phase[i]) + 180.0) % 360.0) - 180.0) < 90.0]
    if pc:
        gm = float(1.0 / mag[pc[0]]) if mag[pc[0]] > 0 else None
    return {
        "max_sensitivity": Ms, "phase_margin_deg": pm, "gain_margin": gm,
        "targets": {"max_sensitivity": 2.0, "phase_margin_deg": 50.0, "gain_margin": 2.0},
        "meets_targets": bool(Ms <= 2.0 and (pm is None or pm >= 50.0) and (gm is None or gm >= 2.0)),
    }


def closest_pole_distance(tf: TF, points) -> float:
    poles = tf.poles()
    if poles.size == 0 or not len(points):
        return float("inf")
    return float(min(abs(p - q) for p in poles for q in points))
