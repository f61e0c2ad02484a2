"""Exact complex-rational scalars used by the lattice and series code paths."""

from __future__ import annotations

from fractions import Fraction
from typing import Union

Rat = Union[int, Fraction]


def _frac(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, str):
        return Fraction(v)
    raise TypeError(f"not an exact rational: {v!r}")


class QC:
    """A complex number with Fraction real and imaginary parts.

    Immutable; supports +, -, *, / and exact equality.  Use ``complex(z)``
    for the float view and ``z.abs2()`` for the exact squared modulus.
    """

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        object.__setattr__(self, "re", _frac(re))
        object.__setattr__(self, "im", _frac(im))

    def __setattr__(self, name, value):
        raise AttributeError("QC is immutable")

    @staticmethod
    def coerce(v) -> "QC":
        if isinstance(v, QC):
            return v
        if isinstance(v, (int, Fraction)):
            return QC(v, 0)
        if isinstance(v, complex):
            raise TypeError("refusing implicit float->QC coercion")
        raise TypeError(f"cannot coerce {v!r} to QC")

    def __add__(self, other):
        o = QC.coerce(other)
        return QC(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = QC.coerce(other)
        return QC(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return QC.coerce(other) - self

    def __mul__(self, other):
        o = QC.coerce(other)
        return QC(self.re * o.re - self.im * o.im,
                  self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = QC.coerce(other)
        d = o.re * o.re + o.im * o.im
        if d == 0:
            raise ZeroDivisionError("QC division by zero")
        return QC((self.re * o.re + self.im * o.im) / d,
                  (self.im * o.re - self.re * o.im) / d)

    def __rtruediv__(self, other):
        return QC.coerce(other) / self

    def __neg__(self):
        return QC(-self.re, -self.im)

    def __eq__(self, other):
        try:
            o = QC.coerce(other)
        except TypeError:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __bool__(self):
        return self.re != 0 or self.im != 0

    def conjugate(self) -> "QC":
        return QC(self.re, -self.im)

    def abs2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def __abs__(self) -> float:
        return abs(complex(self))

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"QC({self.re!s}, {self.im!s})"


QC_ZERO = QC(0, 0)
QC_ONE = QC(1, 0)
QC_I = QC(0, 1)


def qc_ipow(k: int) -> QC:
    """i**k for integer k."""
    return (QC_ONE, QC_I, QC(-1, 0), QC(0, -1))[k % 4]
