"""Truncated power series sum_{k<=K} a_k x^k.

Coefficients are either floats or :class:`fractions.Fraction` (exact mode).
Every operation is exact to the truncation order: terms above ``x**K`` are
dropped, never approximated.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Number

import numpy as np


class SeriesPoly:
    __slots__ = ("coefficients", "order")

    def __init__(self, coefficients, order: int | None = None, exact: bool | None = None):
        coeffs = list(coefficients)
        if exact is None:
            exact = any(isinstance(c, Fraction) for c in coeffs)
        if order is None:
            order = len(coeffs) - 1
        if order < 0:
            raise ValueError("order must be >= 0")
        coeffs = coeffs[: order + 1] + [0] * (order + 1 - len(coeffs))
        if exact:
            arr = np.array([Fraction(c) for c in coeffs], dtype=object)
        else:
            arr = np.array(coeffs, dtype=np.float64)
        self.coefficients = arr
        self.order = order

    # construction -----------------------------------------------------------

    @classmethod
    def constant(cls, value, order: int, exact: bool = False) -> "SeriesPoly":
        return cls([value], order, exact)

    @classmethod
    def x(cls, order: int, exact: bool = False) -> "SeriesPoly":
        return cls([0, 1], order, exact)

    @classmethod
    def geometric(cls, ratio, order: int) -> "SeriesPoly":
        """1 / (1 - ratio*x) expanded directly."""
        exact = isinstance(ratio, Fraction)
        return cls([ratio**k for k in range(order + 1)], order, exact)

    @property
    def exact(self) -> bool:
        return self.coefficients.dtype == object

    def __len__(self) -> int:
        return self.order + 1

    def __getitem__(self, k: int):
        return self.coefficients[k]

    def __repr__(self) -> str:
        head = ", ".join(str(c) for c in self.coefficients[:6])
        tail = ", ..." if self.order >= 6 else ""
        return f"SeriesPoly([{head}{tail}], order={self.order})"

    def to_float(self) -> np.ndarray:
        return np.array([float(c) for c in self.coefficients])

    # arithmetic -------------------------------------------------------------

    def _coerce(self, other) -> "SeriesPoly":
        if isinstance(other, SeriesPoly):
            if other.order != self.order:
                raise ValueError("series orders differ")
            return other
        if isinstance(other, Number):
            return SeriesPoly.constant(other, self.order, self.exact)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return SeriesPoly(self.coefficients + other.coefficients, self.order, self.exact or other.exact)

    __radd__ = __add__

    def __neg__(self):
        return SeriesPoly(-self.coefficients, self.order, self.exact)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Number):
            return SeriesPoly(self.coefficients * other, self.order, self.exact)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        prod = np.convolve(self.coefficients, other.coefficients)[: self.order + 1]
        return SeriesPoly(prod, self.order, self.exact or other.exact)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Number):
            return self * (Fraction(1) / Fraction(other) if self.exact else 1.0 / other)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.reciprocal()

    def reciprocal(self) -> "SeriesPoly":
        """1/s by the recurrence b_n = -(sum_{k>=1} a_k b_{n-k}) / a_0."""
        a = self.coefficients
        if a[0] == 0:
            raise ZeroDivisionError("series with zero constant term has no reciprocal")
        b = np.zeros_like(a)
        b[0] = (Fraction(1) if self.exact else 1.0) / a[0]
        for n in range(1, self.order + 1):
            b[n] = -np.dot(a[1 : n + 1], b[n - 1 :: -1][:n]) / a[0]
        return SeriesPoly(b, self.order, self.exact)

    def sqrt(self) -> "SeriesPoly":
        """Square root of a series with positive constant term.

        Uses r_n = (a_n - sum_{k=1}^{n-1} r_k r_{n-k}) / (2 r_0). Exact mode
        requires a_0 to be the square of a rational.
        """
        a = self.coefficients
        if not a[0] > 0:
            raise ValueError("square root needs a positive constant term")
        r = np.zeros_like(a)
        if self.exact:
            num, den = math.isqrt(a[0].numerator), math.isqrt(a[0].denominator)
            r0 = Fraction(num, den)
            if r0 * r0 != a[0]:
                raise ValueError("exact square root needs a rational square constant term")
            r[0] = r0
        else:
            r[0] = math.sqrt(a[0])
        for n in range(1, self.order + 1):
            r[n] = (a[n] - np.dot(r[1:n], r[n - 1 : 0 : -1])) / (2 * r[0])
        return SeriesPoly(r, self.order, self.exact)

    def substitute_square(self) -> "SeriesPoly":
        """s(x**2), truncated to the same order."""
        out = np.zeros_like(self.coefficients)
        half = self.order // 2
        out[0 : 2 * half + 1 : 2] = self.coefficients[: half + 1]
        return SeriesPoly(out, self.order, self.exact)

    def evaluate(self, x):
        """Horner evaluation of the truncated polynomial."""
        acc = 0
        for c in self.coefficients[::-1]:
            acc = acc * x + c
        return acc


def sqrt_one_minus_x(order: int, exact: bool = False) -> SeriesPoly:
    """sqrt(1 - x) from the binomial series, coefficient by coefficient.

    Independent of :meth:`SeriesPoly.sqrt`:
    c_0 = 1, c_n = c_{n-1} * (n - 3/2) / n.
    """
    one = Fraction(1) if exact else 1.0
    coeffs = [one]
    for n in range(1, order + 1):
        coeffs.append(coeffs[-1] * (n - Fraction(3, 2) if exact else n - 1.5) / n)
    return SeriesPoly(coeffs, order, exact)
