"""Outward-rounded interval arithmetic over dyadic rationals.

Every certified quantity in this package travels as a closed interval
``[lo, hi]`` whose endpoints are dyadic rationals ``man * 2**exp`` held
as Python integers.  Operations round ``lo`` toward minus infinity and
``hi`` toward plus infinity at a stated precision ``prec`` (significant
mantissa bits), so a true real value contained in the inputs is
contained in the output.  There is no floating point anywhere on the
certified path; transcendental endpoints (``2**r``, ``log2``) are
produced by integer fixed-point kernels with explicit remainder bounds
folded into the rounding.

Width guarantees (for the default guard of 32 extra working bits):

* exact operations (add, sub, mul by dyadics) widen only by the final
  outward rounding, at most one ulp at ``prec`` bits per endpoint;
* ``pow2_frac(l, T, prec)`` returns an interval for ``2**(-l/T)`` of
  width at most ``2**(-prec + 2)``;
* ``log2`` adds an absolute slop below ``2**(-prec - 8)`` on top of the
  derivative-scaled input width.

All functions are pure and the two dataclasses are frozen, so values
may be shared freely across threads.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import isqrt
import os

from .errors import NumericDomainError

DEFAULT_PRECISION = int(os.environ.get("ALGOTHERMO_PRECISION", "128"))
_GUARD = 32


def _round_to(man: int, exp: int, prec: int, up: bool) -> "Dyadic":
    """Round man*2**exp to at most prec mantissa bits, directed.

    up=True rounds toward +infinity, up=False toward -infinity.
    """
    if man == 0:
        return Dyadic(0, 0)
    drop = abs(man).bit_length() - prec
    if drop <= 0:
        return Dyadic(man, exp)
    if up:
        man = -((-man) >> drop)
    else:
        man >>= drop
    return Dyadic(man, exp + drop)


@dataclass(frozen=True)
class Dyadic:
    """Exact dyadic rational man * 2**exp, canonical (man odd or zero)."""

    man: int
    exp: int

    def __post_init__(self) -> None:
        man, exp = self.man, self.exp
        if man == 0:
            exp = 0
        else:
            shift = (man & -man).bit_length() - 1
            if shift:
                man >>= shift
                exp += shift
        object.__setattr__(self, "man", man)
        object.__setattr__(self, "exp", exp)

    @classmethod
    def from_int(cls, n: int) -> "Dyadic":
        return cls(n, 0)

    def as_fraction(self) -> Fraction:
        if self.exp >= 0:
            return Fraction(self.man << self.exp)
        return Fraction(self.man, 1 << -self.exp)

    def is_zero(self) -> bool:
        return self.man == 0

    def __float__(self) -> float:
        # Clamp the mantissa to double width first so huge exact values
        # degrade to inf instead of raising.
        man, exp = self.man, self.exp
        extra = abs(man).bit_length() - 64
        if extra > 0:
            man >>= extra
            exp += extra
        try:
            return man * 2.0 ** exp
        except OverflowError:
            return float("inf") if man > 0 else float("-inf")

    def _cmp(self, other: "Dyadic") -> int:
        a, b = self.man, other.man
        if self.exp >= other.exp:
            a <<= self.exp - other.exp
        else:
            b <<= other.exp - self.exp
        return (a > b) - (a < b)

    def __lt__(self, other: "Dyadic") -> bool:
        return self._cmp(other) < 0

    def __le__(self, other: "Dyadic") -> bool:
        return self._cmp(other) <= 0

    def __gt__(self, other: "Dyadic") -> bool:
        return self._cmp(other) > 0

    def __ge__(self, other: "Dyadic") -> bool:
        return self._cmp(other) >= 0

    def __neg__(self) -> "Dyadic":
        return Dyadic(-self.man, self.exp)

    def __add__(self, other: "Dyadic") -> "Dyadic":
        # Exact; mantissa growth is the caller's concern.
        e = min(self.exp, other.exp)
        return Dyadic((self.man << (self.exp - e)) + (other.man << (other.exp - e)), e)

    def __sub__(self, other: "Dyadic") -> "Dyadic":
        return self + (-other)

    def __mul__(self, other: "Dyadic") -> "Dyadic":
        return Dyadic(self.man * other.man, self.exp + other.exp)

    def __str__(self) -> str:
        return f"{self.man}*2^{self.exp}"


ZERO = Dyadic(0, 0)
ONE = Dyadic(1, 0)


def _div_directed(x: Dyadic, y: Dyadic, prec: int, up: bool) -> Dyadic:
    """x / y rounded in the given direction at prec bits."""
    if y.man == 0:
        raise NumericDomainError("division by zero dyadic")
    if x.man == 0:
        return ZERO
    neg = (x.man < 0) != (y.man < 0)
    a, b = abs(x.man), abs(y.man)
    shift = prec + 2 - (a.bit_length() - b.bit_length())
    if shift < 0:
        shift = 0
    q, r = divmod(a << shift, b)
    # magnitude rounds away from zero exactly when the directed rounding
    # and the sign agree
    if r and (up != neg):
        q += 1
    man = -q if neg else q
    return _round_to(man, x.exp - y.exp - shift, prec, up)


def _mul_fraction_directed(d: Dyadic, fr: Fraction, prec: int, up: bool) -> Dyadic:
    return _div_directed(
        Dyadic(d.man * fr.numerator, d.exp), Dyadic(fr.denominator, 0), prec, up
    )


def dyadic_from_fraction(fr: Fraction, prec: int, up: bool) -> Dyadic:
    """Directed dyadic approximation of an arbitrary rational."""
    return _div_directed(Dyadic(fr.numerator, 0), Dyadic(fr.denominator, 0), prec, up)


@dataclass(frozen=True)
class DyadicInterval:
    """Closed interval [lo, hi] with dyadic endpoints at precision prec."""

    lo: Dyadic
    hi: Dyadic
    prec: int = DEFAULT_PRECISION

    def __post_init__(self) -> None:
        if self.prec < 8:
            raise NumericDomainError(f"precision {self.prec} below minimum 8")
        if self.lo > self.hi:
            raise NumericDomainError(f"inverted interval [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, value: Dyadic | int, prec: int = DEFAULT_PRECISION) -> "DyadicInterval":
        d = Dyadic.from_int(value) if isinstance(value, int) else value
        return cls(d, d, prec)

    @classmethod
    def from_fraction(cls, fr: Fraction, prec: int = DEFAULT_PRECISION) -> "DyadicInterval":
        if (1 << abs(fr.denominator.bit_length() - 1)) == fr.denominator:
            # denominator is a power of two: representable exactly
            d = Dyadic(fr.numerator, 1 - fr.denominator.bit_length())
            return cls(d, d, prec)
        return cls(
            dyadic_from_fraction(fr, prec, up=False),
            dyadic_from_fraction(fr, prec, up=True),
            prec,
        )

    def width(self) -> Dyadic:
        return self.hi - self.lo

    def contains(self, value: Fraction | Dyadic | int) -> bool:
        if isinstance(value, Dyadic):
            value = value.as_fraction()
        elif isinstance(value, int):
            value = Fraction(value)
        return self.lo.as_fraction() <= value <= self.hi.as_fraction()

    def overlaps(self, other: "DyadicInterval") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def strictly_positive(self) -> bool:
        return self.lo.man > 0

    def mid_float(self) -> float:
        return 0.5 * (float(self.lo) + float(self.hi))

    def __neg__(self) -> "DyadicInterval":
        return DyadicInterval(-self.hi, -self.lo, self.prec)

    def __add__(self, other: "DyadicInterval") -> "DyadicInterval":
        p = max(self.prec, other.prec)
        lo = self.lo + other.lo
        hi = self.hi + other.hi
        return DyadicInterval(
            _round_to(lo.man, lo.exp, p, up=False),
            _round_to(hi.man, hi.exp, p, up=True),
            p,
        )

    def __sub__(self, other: "DyadicInterval") -> "DyadicInterval":
        return self + (-other)

    def __mul__(self, other: "DyadicInterval") -> "DyadicInterval":
        p = max(self.prec, other.prec)
        prods = [a * b for a in (self.lo, self.hi) for b in (other.lo, other.hi)]
        lo = min(prods)
        hi = max(prods)
        return DyadicInterval(
            _round_to(lo.man, lo.exp, p, up=False),
            _round_to(hi.man, hi.exp, p, up=True),
            p,
        )

    def __truediv__(self, other: "DyadicInterval") -> "DyadicInterval":
        p = max(self.prec, other.prec)
        if other.lo.man <= 0 <= other.hi.man:
            raise NumericDomainError("interval division through zero")
        lo = min(
            _div_directed(a, b, p, up=False)
            for a in (self.lo, self.hi)
            for b in (other.lo, other.hi)
        )
        hi = max(
            _div_directed(a, b, p, up=True)
            for a in (self.lo, self.hi)
            for b in (other.lo, other.hi)
        )
        return DyadicInterval(lo, hi, p)

    def scale_fraction(self, fr: Fraction) -> "DyadicInterval":
        """Multiply by an exact rational, outward-rounded."""
        if fr >= 0:
            lo, hi = self.lo, self.hi
        else:
            lo, hi = self.hi, self.lo
        return DyadicInterval(
            _mul_fraction_directed(lo, fr, self.prec, up=False),
            _mul_fraction_directed(hi, fr, self.prec, up=True),
            self.prec,
        )

    def scale_pow2(self, k: int) -> "DyadicInterval":
        """Exact multiplication by 2**k."""
        return DyadicInterval(
            Dyadic(self.lo.man, self.lo.exp + k),
            Dyadic(self.hi.man, self.hi.exp + k),
            self.prec,
        )

    def square(self) -> "DyadicInterval":
        if self.lo.man >= 0:
            lo, hi = self.lo * self.lo, self.hi * self.hi
        elif self.hi.man <= 0:
            lo, hi = self.hi * self.hi, self.lo * self.lo
        else:
            lo, hi = ZERO, max(self.lo * self.lo, self.hi * self.hi)
        return DyadicInterval(
            _round_to(lo.man, lo.exp, self.prec, up=False),
            _round_to(hi.man, hi.exp, self.prec, up=True),
            self.prec,
        )

    def abs(self) -> "DyadicInterval":
        if self.lo.man >= 0:
            return self
        if self.hi.man <= 0:
            return -self
        return DyadicInterval(ZERO, max(-self.lo, self.hi), self.prec)

    def __str__(self) -> str:
        lo_s, hi_s = decimal_bounds(self)
        return f"[{lo_s}, {hi_s}]"


# ---------------------------------------------------------------------------
# fixed-point kernels: 2**r and log2
# ---------------------------------------------------------------------------


@lru_cache(maxsize=8)
def _sqrt2_chain(wbits: int) -> tuple[tuple[int, int], ...]:
    """Fixed-point bounds for 2**(2**-i), i = 1..wbits, scaled by 2**wbits.

    Entry i-1 holds (lo, hi) with lo/2**w <= 2**(2**-i) <= hi/2**w.
    Built by iterated integer square roots of 2.
    """
    out = []
    lo = isqrt(2 << (2 * wbits))
    hi = lo + 1
    for _ in range(wbits):
        out.append((lo, hi))
        lo = isqrt(lo << wbits)
        hi = isqrt(hi << wbits) + 1
    return tuple(out)


def exp2_frac(r: Fraction, prec: int = DEFAULT_PRECISION) -> DyadicInterval:
    """Interval containing 2**r for exact rational r.

    Integer part of r is applied exactly; the fractional part goes
    through the square-root chain 2**f = prod 2**(2**-i) over the bits
    of f, with directed fixed-point multiplications.  The truncation of
    f past the working width is absorbed by 2**d <= 1 + d' on [0, 1].
    """
    if prec < 8:
        raise NumericDomainError(f"precision {prec} below minimum 8")
    if r.denominator == 1:
        return DyadicInterval.point(Dyadic(1, r.numerator), prec)
    w = prec + _GUARD
    n = r.numerator // r.denominator
    f = r - n
    fb = (f.numerator << w) // f.denominator
    chain = _sqrt2_chain(w)
    lo = 1 << w
    hi = 1 << w
    for i in range(1, w + 1):
        if (fb >> (w - i)) & 1:
            cl, cu = chain[i - 1]
            lo = (lo * cl) >> w
            hi = ((hi * cu) >> w) + 1
    hi += (hi >> w) + 1
    return DyadicInterval(
        _round_to(lo, n - w, prec, up=False),
        _round_to(hi, n - w, prec, up=True),
        prec,
    )


@lru_cache(maxsize=None)
def pow2_frac(l: int, temp: Fraction, prec: int = DEFAULT_PRECISION) -> DyadicInterval:
    """Interval containing 2**(-l/temp) for integer l >= 1, rational temp > 0."""
    if l < 1:
        raise NumericDomainError(f"pow2_frac needs l >= 1, got {l}")
    if temp <= 0:
        raise NumericDomainError(f"pow2_frac needs temp > 0, got {temp}")
    return exp2_frac(Fraction(-l) / temp, prec)


def _atanh_series(z_lo: int, z_hi: int, w: int) -> tuple[int, int]:
    """Bounds on atanh(z) for fixed-point z in (0, 1/3], scaled by 2**w.

    Plain odd series; the remainder after the last kept term is below
    z**(2k+3)/(2k+3) * 9/8 for z <= 1/3 and is added to the upper bound.
    """
    s_lo, s_hi = z_lo, z_hi
    zp_lo, zp_hi = z_lo, z_hi
    z2_lo = (z_lo * z_lo) >> w
    z2_hi = ((z_hi * z_hi) >> w) + 1
    k = 1
    while True:
        zp_lo = (zp_lo * z2_lo) >> w
        zp_hi = ((zp_hi * z2_hi) >> w) + 1
        s_lo += zp_lo // (2 * k + 1)
        s_hi += -(-zp_hi // (2 * k + 1))
        if zp_hi <= 2:
            # geometric remainder: ratio <= z^2 <= 1/9
            s_hi += 1
            return s_lo, s_hi
        k += 1


@lru_cache(maxsize=8)
def _ln2_fixed(w: int) -> tuple[int, int]:
    """Bounds on ln 2 = 2*atanh(1/3), scaled by 2**w."""
    z_lo = (1 << w) // 3
    z_hi = z_lo + 1
    a_lo, a_hi = _atanh_series(z_lo, z_hi, w)
    return 2 * a_lo, 2 * a_hi


def ln2_interval(prec: int = DEFAULT_PRECISION) -> DyadicInterval:
    """ln 2 as an outward-rounded interval (cached per working width)."""
    w = 2 * prec
    lo, hi = _ln2_fixed(w)
    return DyadicInterval(
        _round_to(lo, -w, prec, up=False), _round_to(hi, -w, prec, up=True), prec
    )


def _log2_dyadic(d: Dyadic, prec: int) -> tuple[Dyadic, Dyadic]:
    """Directed bounds on log2 of a positive dyadic."""
    if d.man <= 0:
        raise NumericDomainError("log2 of a nonpositive value")
    if d.man == 1:
        e = Dyadic.from_int(d.exp)
        return e, e
    w = prec + _GUARD
    s = d.man.bit_length() - 1
    n = d.exp + s
    # y = man/2**s in (1, 2), fixed point at w bits
    if s <= w:
        y_lo = d.man << (w - s)
        y_hi = y_lo
    else:
        y_lo = d.man >> (s - w)
        y_hi = y_lo + 1
    # ln y = 2*atanh((y-1)/(y+1)), z < 1/3 since y < 2
    one = 1 << w
    z_lo = ((y_lo - one) << w) // (y_hi + one)
    z_hi = -((-((y_hi - one) << w)) // (y_lo + one))
    a_lo, a_hi = _atanh_series(z_lo, z_hi, w)
    ln_lo, ln_hi = 2 * a_lo, 2 * a_hi
    l2_lo, l2_hi = _ln2_fixed(w)
    frac_lo = (ln_lo << w) // l2_hi
    frac_hi = -((-(ln_hi << w)) // l2_lo)
    lo = _round_to((n << w) + frac_lo, -w, prec, up=False)
    hi = _round_to((n << w) + frac_hi, -w, prec, up=True)
    return lo, hi


def iv_log2(x: DyadicInterval, prec: int | None = None) -> DyadicInterval:
    """log2 over an interval with strictly positive lower endpoint."""
    p = prec or x.prec
    if x.lo.man <= 0:
        raise NumericDomainError("iv_log2 needs a strictly positive interval")
    lo, _ = _log2_dyadic(x.lo, p)
    _, hi = _log2_dyadic(x.hi, p)
    return DyadicInterval(lo, hi, p)


def iv_power(x: DyadicInterval, q: Fraction, prec: int | None = None) -> DyadicInterval:
    """x**q for rational q; non-integer q needs x strictly positive."""
    p = prec or x.prec
    if q.denominator == 1:
        n = q.numerator
        if n == 0:
            return DyadicInterval.point(ONE, p)
        if n > 0:
            out = DyadicInterval.point(ONE, p)
            for _ in range(n):
                out = out * x
            return out
        inv = DyadicInterval.point(ONE, p) / x
        return iv_power(inv, Fraction(-n), p)
    if x.lo.man <= 0:
        raise NumericDomainError("fractional power needs a positive interval")
    lg = iv_log2(x, p)
    scaled = lg.scale_fraction(q)
    return DyadicInterval(
        exp2_frac(scaled.lo.as_fraction(), p).lo,
        exp2_frac(scaled.hi.as_fraction(), p).hi,
        p,
    )


# ---------------------------------------------------------------------------
# decimal rendering
# ---------------------------------------------------------------------------

_MAX_DIGITS = 60


def _dyadic_decimal(d: Dyadic, digits: int, up: bool) -> str:
    """Decimal string with the given count of fractional digits, directed."""
    scaled_num = d.man * 10**digits
    if d.exp >= 0:
        n = scaled_num << d.exp
    else:
        den = 1 << -d.exp
        if up:
            n = -((-scaled_num) // den)
        else:
            n = scaled_num // den
    sign = "-" if n < 0 else ""
    n = abs(n)
    if digits == 0:
        return f"{sign}{n}"
    s = str(n).rjust(digits + 1, "0")
    return f"{sign}{s[:-digits]}.{s[-digits:]}"


def decimal_bounds(iv: DyadicInterval) -> tuple[str, str]:
    """Decimal endpoint strings, enough digits to separate lo from hi
    plus two guard digits; lo rounds down, hi rounds up."""
    w = iv.width()
    if w.man == 0:
        exact_digits = -iv.lo.exp if iv.lo.exp < 0 else 0
        digits = min(exact_digits, _MAX_DIGITS)
        s = _dyadic_decimal(iv.lo, digits, up=False)
        if digits == exact_digits:
            return s, s
        return s, _dyadic_decimal(iv.hi, digits, up=True)
    digits = 0
    wf = w.as_fraction()
    while digits < _MAX_DIGITS and Fraction(1, 10**digits) > wf:
        digits += 1
    digits = min(digits + 2, _MAX_DIGITS)
    return (
        _dyadic_decimal(iv.lo, digits, up=False),
        _dyadic_decimal(iv.hi, digits, up=True),
    )
