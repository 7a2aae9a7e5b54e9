"""Rational transfer functions with coefficients in ascending powers of s."""

from __future__ import annotations

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.signal import cont2discrete

from .errors import ImproperTransferFunctionError

TRIM_RTOL = 1e-12


def trim(coeffs, rtol: float = TRIM_RTOL) -> np.ndarray:
    """Zero out dust below ``rtol`` of the largest coefficient, drop top zeros."""
    c = np.atleast_1d(np.asarray(coeffs, dtype=float)).copy()
    if c.size == 0:
        return np.zeros(1)
    big = np.max(np.abs(c))
    if big == 0:
        return np.zeros(1)
    c[np.abs(c) < rtol * big] = 0.0
    nz = np.nonzero(c)[0]
    return c[: nz[-1] + 1]


def _as_tf(other) -> "RationalTransferFunction":
    if isinstance(other, RationalTransferFunction):
        return other
    return RationalTransferFunction([float(other)], [1.0])


class RationalTransferFunction:
    """N(s)/D(s); ``num[i]`` multiplies s**i."""

    __slots__ = ("num", "den")

    def __init__(self, num, den):
        num = trim(num)
        den = trim(den)
        if not den.any():
            raise ZeroDivisionError("denominator is identically zero")
        self.num = num
        self.den = den

    @classmethod
    def s(cls) -> "RationalTransferFunction":
        return cls([0.0, 1.0], [1.0])

    @classmethod
    def from_roots(cls, zeros, poles, gain: float = 1.0) -> "RationalTransferFunction":
        num = np.real_if_close(P.polyfromroots(zeros)) if len(zeros) else np.ones(1)
        den = np.real_if_close(P.polyfromroots(poles)) if len(poles) else np.ones(1)
        return cls(gain * np.real(num), np.real(den))

    # structure -----------------------------------------------------------
    @property
    def num_degree(self) -> int:
        return -1 if not self.num.any() else len(self.num) - 1

    @property
    def den_degree(self) -> int:
        return len(self.den) - 1

    @property
    def relative_degree(self) -> int:
        return self.den_degree - self.num_degree

    def is_proper(self) -> bool:
        return self.num_degree <= self.den_degree

    def is_strictly_proper(self) -> bool:
        return self.num_degree < self.den_degree

    def is_zero(self) -> bool:
        return not self.num.any()

    def zeros(self) -> np.ndarray:
        return P.polyroots(self.num) if self.num_degree > 0 else np.zeros(0, dtype=complex)

    def poles(self) -> np.ndarray:
        return P.polyroots(self.den) if self.den_degree > 0 else np.zeros(0, dtype=complex)

    def __call__(self, s):
        return P.polyval(s, self.num) / P.polyval(s, self.den)

    def dc_gain(self) -> float:
        d0 = self.den[0]
        if d0 == 0:
            return float("inf") if self.num[0] != 0 else float("nan")
        return self.num[0] / d0

    def normalized(self) -> "RationalTransferFunction":
        """Scale so the highest denominator coefficient is 1."""
        lead = self.den[-1]
        return RationalTransferFunction(self.num / lead, self.den / lead)

    # arithmetic ------------------------------------------------------------
    def __add__(self, other):
        o = _as_tf(other)
        return RationalTransferFunction(
            P.polyadd(P.polymul(self.num, o.den), P.polymul(o.num, self.den)),
            P.polymul(self.den, o.den))

    __radd__ = __add__

    def __neg__(self):
        return RationalTransferFunction(-self.num, self.den)

    def __sub__(self, other):
        return self + (-_as_tf(other))

    def __rsub__(self, other):
        return _as_tf(other) - self

    def __mul__(self, other):
        o = _as_tf(other)
        return RationalTransferFunction(P.polymul(self.num, o.num), P.polymul(self.den, o.den))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = _as_tf(other)
        if o.is_zero():
            raise ZeroDivisionError("division by a zero transfer function")
        return RationalTransferFunction(P.polymul(self.num, o.den), P.polymul(self.den, o.num))

    def __rtruediv__(self, other):
        return _as_tf(other) / self

    def __pow__(self, n: int):
        out = RationalTransferFunction([1.0], [1.0])
        base = self if n >= 0 else self.inverse()
        for _ in range(abs(n)):
            out = out * base
        return out

    def inverse(self) -> "RationalTransferFunction":
        return RationalTransferFunction(self.den, self.num)

    def feedback(self, other=1.0) -> "RationalTransferFunction":
        """Negative-feedback closed loop self/(1 + self*other)."""
        o = _as_tf(other)
        return RationalTransferFunction(
            P.polymul(self.num, o.den),
            P.polyadd(P.polymul(self.den, o.den), P.polymul(self.num, o.num)))

    def strip_origin(self, atol_rel: float = 1e-9) -> "RationalTransferFunction":
        """Cancel common factors of s whose low-order coefficients are numerically zero."""
        num, den = self.num.copy(), self.den.copy()
        for c in (num, den):
            big = np.max(np.abs(c))
            i = 0
            while i < len(c) - 1 and abs(c[i]) <= atol_rel * big:
                c[i] = 0.0
                i += 1
        k = 0
        while k < len(num) - 1 and k < len(den) - 1 and num[k] == 0.0 and den[k] == 0.0:
            k += 1
        return RationalTransferFunction(num[k:], den[k:])

    def minreal(self, tol: float = 1e-6) -> "RationalTransferFunction":
        """Cancel pole/zero pairs closer than ``tol`` (relative to their magnitude)."""
        tf = self.strip_origin()
        zs = list(tf.zeros())
        ps = list(tf.poles())
        keep_z = []
        for z in zs:
            best = None
            for i, p in enumerate(ps):
                if abs(z - p) <= tol * max(1.0, abs(z)) and (best is None or abs(z - p) < abs(z - ps[best])):
                    best = i
            if best is None:
                keep_z.append(z)
            else:
                ps.pop(best)
        if len(keep_z) == len(zs):
            return tf
        gain = tf.num[-1] / tf.den[-1]
        return RationalTransferFunction.from_roots(keep_z, ps, gain)

    def equals(self, other, rtol: float = 1e-9) -> bool:
        """Polynomial identity N1*D2 == N2*D1 up to ``rtol`` of the largest coefficient."""
        o = _as_tf(other)
        lhs = P.polymul(self.num, o.den)
        rhs = P.polymul(o.num, self.den)
        n = max(len(lhs), len(rhs))
        lhs = np.pad(lhs, (0, n - len(lhs)))
        rhs = np.pad(rhs, (0, n - len(rhs)))
        scale = max(np.max(np.abs(lhs)), np.max(np.abs(rhs)), 1e-300)
        return bool(np.max(np.abs(lhs - rhs)) <= rtol * scale)

    def to_dict(self) -> dict:
        return {
            "num_ascending": [float(c) for c in self.num],
            "den_ascending": [float(c) for c in self.den],
            "zeros": [[float(z.real), float(z.imag)] for z in self.zeros()],
            "poles": [[float(p.real), float(p.imag)] for p in self.poles()],
        }

    def __repr__(self) -> str:
        return f"RationalTransferFunction(num={self.num.tolist()}, den={self.den.tolist()})"


def tf_realize(tf: RationalTransferFunction):
    """Controllable canonical realization (A, B, C, D) of a proper transfer function."""
    if not tf.is_proper():
        raise ImproperTransferFunctionError(
            f"numerator degree {tf.num_degree} exceeds denominator degree {tf.den_degree}")
    lead = tf.den[-1]
    den = tf.den / lead
    num = np.pad(tf.num / lead, (0, len(den) - len(tf.num)))
    n = len(den) - 1
    D = np.array([[num[n] if n < len(num) else 0.0]])
    if n == 0:
        return np.zeros((0, 0)), np.zeros((0, 1)), np.zeros((1, 0)), D
    # strictly proper remainder
    rem = num[:n] - D[0, 0] * den[:n]
    A = np.zeros((n, n))
    A[:-1, 1:] = np.eye(n - 1)
    A[-1, :] = -den[:n]
    B = np.zeros((n, 1))
    B[-1, 0] = 1.0
    C = rem.reshape(1, n)
    return A, B, C, D


def ss_eval(A, B, C, D, s: complex) -> complex:
    n = A.shape[0]
    if n == 0:
        return complex(D[0, 0])
    return complex((C @ np.linalg.solve(s * np.eye(n) - A, B) + D)[0, 0])


def discretize_zoh(tf: RationalTransferFunction, dt: float):
    """Zero-order-hold discretization of the realization of ``tf``."""
    A, B, C, D = tf_realize(tf)
    if A.shape[0] == 0:
        return A, B, C, D
    Ad, Bd, Cd, Dd, _ = cont2discrete((A, B, C, D), dt, method="zoh")
    return Ad, Bd, Cd, Dd


def ss_to_tf(A, B, C, D) -> RationalTransferFunction:
    """SISO state-space to transfer function via scipy."""
    from scipy.signal import ss2tf

    num, den = ss2tf(A, B, C, D)
    return RationalTransferFunction(np.asarray(num[0])[::-1], np.asarray(den)[::-1])
