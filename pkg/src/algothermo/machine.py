"""Prefix-free machines: spectrum-driven code tables and the step VM.

A table machine is defined by its length spectrum ``c_l`` (how many
programs halt at each length) plus a deterministic output rule.  Its
domain is materialized by the canonical Kraft-tree allocation: walk
lengths in increasing order and hand each length the next free
codewords in lexicographic order.  Membership and indexing never need
the full table; the canonical codewords of length ``l`` are the
``l``-bit expansions of a consecutive integer range.

Supported spectrum rules:

* ``explicit`` - a finite (length, count) list;
* ``geometric`` - ``c_l = floor(2**(beta*l - shift))`` for ``l >= 1``.
  The shift keeps the Kraft mass under 1, which the raw rate ``beta``
  alone would violate; when omitted it is chosen as the smallest safe
  integer for the rate;
* ``harmonic`` - ``c_l = floor(2**l / (l+1)**2)`` for ``l >= 1``.  Its
  Kraft mass is below 0.65 while ``sum c_l * l * 2**-l`` diverges, so
  mean length under the halting weight has no limit by design.

A step machine wraps the self-delimiting VM from :mod:`algothermo.sdvm`
(format ``sdvm-1``); its domain is whatever parses and halts.

Everything here is immutable and safe to share across threads.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Iterator, Mapping

from . import sdvm
from .errors import ConfigError, ResourceLimitError
from .numeric import DEFAULT_PRECISION, Dyadic, DyadicInterval, exp2_frac

MAX_PROGRAM_LEN = 4096
_EXACT_COUNT_CUTOFF = 4096  # beyond this, spectrum counts go through interval bounds

HALTED = "halted"
EXHAUSTED = "exhausted"
MALFORMED = "malformed"


@dataclass(frozen=True)
class RunResult:
    """Outcome of running one program for a bounded number of steps.

    never_halts is only ever True for step machines, when a repeated
    control state proves no amount of fuel would help.
    """

    status: str
    output: str | None = None
    steps: int | None = None
    fuel: int = 0
    never_halts: bool = False

    @property
    def halted(self) -> bool:
        return self.status == HALTED


def _check_program(bits: str) -> None:
    if len(bits) > MAX_PROGRAM_LEN:
        raise ConfigError(f"program of {len(bits)} bits exceeds cap {MAX_PROGRAM_LEN}")
    if bits.strip("01"):
        raise ConfigError("program must be a string over alphabet {0,1}")


def _iroot(n: int, k: int) -> int:
    """floor(n ** (1/k)) for n >= 0, k >= 1, by integer Newton."""
    if n < 0 or k < 1:
        raise ValueError("iroot needs n >= 0, k >= 1")
    if n < 2 or k == 1:
        return n
    x = 1 << (n.bit_length() // k + 1)
    while True:
        y = ((k - 1) * x + n // x ** (k - 1)) // k
        if y >= x:
            return x
        x = y


# ---------------------------------------------------------------------------
# spectrum rules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExplicitRule:
    counts: tuple[tuple[int, int], ...]  # (length, count), lengths strictly increasing

    name = "explicit"

    def __post_init__(self) -> None:
        last = 0
        for l, c in self.counts:
            if l <= last:
                raise ConfigError("explicit spectrum lengths must be strictly increasing")
            if not 0 <= c <= (1 << l):
                raise ConfigError(f"count {c} at length {l} outside [0, 2^{l}]")
            last = l

    def count(self, l: int) -> int:
        for ll, c in self.counts:
            if ll == l:
                return c
        return 0

    def max_length(self) -> int | None:
        return max((l for l, c in self.counts if c), default=0)

    def majorant(self) -> tuple[Fraction, Fraction] | None:
        return None  # finite; tails are exactly zero

    def describe(self) -> dict:
        return {"name": self.name, "counts": [list(p) for p in self.counts]}


@dataclass(frozen=True)
class GeometricRule:
    beta: Fraction
    shift: int

    name = "geometric"

    def __post_init__(self) -> None:
        if not 0 < self.beta < 1:
            raise ConfigError(f"geometric rate must lie in (0,1), got {self.beta}")
        if self.shift < 0:
            raise ConfigError("geometric shift must be nonnegative")

    def count(self, l: int) -> int:
        if l < 1:
            return 0
        # floor(2**(beta*l - shift)) = floor((2**m)**(1/q)), m = p*l - shift*q
        p, q = self.beta.numerator, self.beta.denominator
        m = p * l - self.shift * q
        if m < 0:
            return 0
        return _iroot(1 << m, q)

    def max_length(self) -> int | None:
        return None

    def majorant(self) -> tuple[Fraction, Fraction] | None:
        return Fraction(1, 1 << self.shift), self.beta

    def describe(self) -> dict:
        return {"name": self.name, "beta": str(self.beta), "shift": self.shift}


@dataclass(frozen=True)
class HarmonicRule:
    name = "harmonic"

    def count(self, l: int) -> int:
        if l < 1:
            return 0
        return (1 << l) // ((l + 1) * (l + 1))

    def max_length(self) -> int | None:
        return None

    def majorant(self) -> tuple[Fraction, Fraction] | None:
        return Fraction(1), Fraction(1)

    def describe(self) -> dict:
        return {"name": self.name}


SpectrumRule = ExplicitRule | GeometricRule | HarmonicRule


def count_interval(rule: SpectrumRule, l: int, prec: int = 64) -> DyadicInterval:
    """Bounds on c_l that avoid materializing huge exact integers.

    Used by probe schedules that walk lengths into the millions, where
    floor(2**l / ...) would be too costly to carry exactly.
    """
    if l <= _EXACT_COUNT_CUTOFF or isinstance(rule, ExplicitRule):
        return DyadicInterval.point(rule.count(l), prec)
    one = DyadicInterval.point(1, prec)
    if isinstance(rule, HarmonicRule):
        grid = DyadicInterval.point(Dyadic(1, l), prec)
        sq = DyadicInterval.point((l + 1) * (l + 1), prec)
        x = grid / sq
    else:
        x = exp2_frac(rule.beta * l - rule.shift, prec)
    lo = (x - one).lo
    if lo.man < 0:
        lo = Dyadic(0, 0)
    return DyadicInterval(lo, x.hi, prec)


# ---------------------------------------------------------------------------
# machines
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TableMachine:
    """Spectrum-driven prefix-free machine with canonical codewords."""

    name: str
    rule: SpectrumRule
    output_map: tuple[tuple[str, str], ...] | None = None  # None = index rule

    kind = "table"

    def spectrum_count(self, l: int) -> int:
        return self.rule.count(l)

    def max_length(self) -> int | None:
        return self.rule.max_length()

    def is_finite(self) -> bool:
        return self.rule.max_length() is not None

    def _level_start(self, l: int) -> tuple[int, int]:
        """(first codeword value at length l, count of shorter codewords)."""
        v = 0
        before = 0
        for j in range(1, l + 1):
            v <<= 1
            if j == l:
                return v, before
            c = self.rule.count(j)
            v += c
            before += c
            if v > (1 << j):
                raise ConfigError(f"spectrum violates the Kraft inequality at length {j}")
        return 0, 0  # l == 0: no codewords

    def codeword_index(self, bits: str) -> int | None:
        """Global 0-based canonical index of a codeword, None if absent."""
        l = len(bits)
        if l == 0:
            return None
        start, before = self._level_start(l)
        val = int(bits, 2)
        c = self.rule.count(l)
        if start <= val < start + c:
            if val >= (1 << l):  # leading-zero widths keep this unreachable
                return None
            return before + (val - start)
        return None

    def output_for(self, bits: str, index: int) -> str:
        if self.output_map is None:
            return bin(index)[2:]
        for k, v in self.output_map:
            if k == bits:
                return v
        raise ConfigError(f"output map lacks codeword {bits!r}")

    def run(self, bits: str, fuel: int = 1) -> RunResult:
        """A codeword halts in one step; everything else is malformed."""
        _check_program(bits)
        if fuel < 1:
            raise ConfigError(f"fuel must be >= 1, got {fuel}")
        idx = self.codeword_index(bits)
        if idx is None:
            return RunResult(MALFORMED, fuel=fuel)
        return RunResult(HALTED, output=self.output_for(bits, idx), steps=1, fuel=fuel)

    def codewords_at(self, l: int, budget: int = 1 << 22) -> list[str]:
        """Canonical codewords of exactly length l, lexicographic."""
        c = self.rule.count(l)
        if c > budget:
            raise ResourceLimitError(f"{c} codewords at length {l} exceed budget {budget}")
        if c == 0:
            return []
        start, _ = self._level_start(l)
        return [format(start + i, f"0{l}b") for i in range(c)]

    def nonzero_lengths(self, l_max: int) -> Iterator[tuple[int, int]]:
        """(length, count) pairs with count > 0, ascending, up to l_max."""
        if isinstance(self.rule, ExplicitRule):
            for l, c in self.rule.counts:
                if c and l <= l_max:
                    yield l, c
            return
        for l in range(1, l_max + 1):
            c = self.rule.count(l)
            if c:
                yield l, c

    def assign_codewords(self, l_max: int, budget: int = 1 << 22) -> list[str]:
        """Canonical codewords of length <= l_max, shortest first then lex."""
        total = sum(self.rule.count(l) for l in range(1, l_max + 1))
        if total > budget:
            raise ResourceLimitError(
                f"{total} codewords up to length {l_max} exceed budget {budget}"
            )
        out: list[str] = []
        v = 0
        for l in range(1, l_max + 1):
            v <<= 1
            c = self.rule.count(l)
            if v + c > (1 << l):
                raise ConfigError(f"spectrum violates the Kraft inequality at length {l}")
            for _ in range(c):
                out.append(format(v, f"0{l}b"))
                v += 1
        return out

    def kraft_partial(self, l_max: int) -> Fraction:
        """Exact sum of c_l * 2**-l for l <= l_max."""
        return sum(
            (Fraction(self.rule.count(l), 1 << l) for l in range(1, l_max + 1)),
            Fraction(0),
        )

    def kraft_tail(self, l_cut: int, prec: int = DEFAULT_PRECISION) -> DyadicInterval:
        """[0, bound] enclosing the Kraft mass beyond l_cut, closed form."""
        zero = Dyadic(0, 0)
        if isinstance(self.rule, ExplicitRule):
            return DyadicInterval(zero, zero, prec)
        if isinstance(self.rule, HarmonicRule):
            # sum_{l>L} 1/(l+1)^2 <= 1/(L+1)
            ub = DyadicInterval.from_fraction(Fraction(1, l_cut + 1), prec).hi
            return DyadicInterval(zero, ub, prec)
        beta, shift = self.rule.beta, self.rule.shift
        r = exp2_frac(beta - 1, prec)  # 2**(beta-1) < 1
        head = exp2_frac((beta - 1) * (l_cut + 1) - shift, prec)
        denom = DyadicInterval.point(1, prec) - r
        ub = (head / denom).hi
        return DyadicInterval(zero, ub, prec)

    def program_count_upto(self, l_max: int) -> int:
        return sum(self.rule.count(l) for l in range(1, l_max + 1))

    def describe(self) -> dict:
        d: dict = {"kind": self.kind, "name": self.name, "rule": self.rule.describe()}
        if self.output_map is None:
            d["output_rule"] = "index"
        else:
            d["output_rule"] = {"map": {k: v for k, v in self.output_map}}
        return d


@dataclass(frozen=True)
class StepMachine:
    """The sdvm-1 machine behind the RunResult interface."""

    name: str = "sdvm"

    kind = "step"

    def run(self, bits: str, fuel: int = 1) -> RunResult:
        _check_program(bits)
        if fuel < 1:
            raise ConfigError(f"fuel must be >= 1, got {fuel}")
        got = sdvm.parse(bits)
        if got is None:
            return RunResult(MALFORMED, fuel=fuel)
        mode, payload, consumed = got
        if consumed != len(bits):
            return RunResult(MALFORMED, fuel=fuel)
        if mode == 0:
            return RunResult(HALTED, output=payload, steps=1, fuel=fuel)
        if len(payload) % 3 != 0:
            return RunResult(MALFORMED, fuel=fuel)
        status, output, steps = sdvm.execute(payload, fuel)
        if status == "halted":
            return RunResult(HALTED, output=output, steps=steps, fuel=fuel)
        if status == "diverged":
            return RunResult(EXHAUSTED, fuel=fuel, never_halts=True)
        return RunResult(EXHAUSTED, fuel=fuel)

    def complete_programs(self, max_len: int) -> Iterator[str]:
        return sdvm.iter_programs(min(max_len, MAX_PROGRAM_LEN))

    def program_count_upto(self, l_max: int) -> int:
        return sdvm.count_programs(l_max)

    def describe(self) -> dict:
        return {"kind": self.kind, "name": self.name, "vm": sdvm.VM_VERSION}


Machine = TableMachine | StepMachine


def machine_hash(machine: Machine) -> str:
    """Stable short identity of a machine, from its canonical JSON."""
    blob = json.dumps(machine.describe(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


# ---------------------------------------------------------------------------
# construction from JSON specs and the builtin registry
# ---------------------------------------------------------------------------


def _auto_shift(beta: Fraction) -> int:
    """Smallest shift making the geometric Kraft majorant at most 1."""
    r = exp2_frac(beta - 1, 64)
    ratio = r.hi.as_fraction() / (1 - r.hi.as_fraction())
    shift = 0
    while Fraction(1, 1 << shift) * ratio > 1:
        shift += 1
    return shift


def _parse_fraction(value: object, what: str) -> Fraction:
    try:
        if isinstance(value, str):
            return Fraction(value)
        if isinstance(value, int):
            return Fraction(value)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad {what}: {value!r}") from exc
    raise ConfigError(f"{what} must be a rational string or integer, got {value!r}")


def build_machine(spec: Mapping) -> Machine:
    """Instantiate a machine from its JSON-shaped description."""
    kind = spec.get("kind")
    name = spec.get("name", "unnamed")
    if kind == "step":
        return StepMachine(name=name)
    if kind != "table":
        raise ConfigError(f"unknown machine kind {kind!r}")
    rule_spec = spec.get("rule")
    if not isinstance(rule_spec, Mapping):
        raise ConfigError("table machine needs a 'rule' object")
    rname = rule_spec.get("name")
    rule: SpectrumRule
    if rname == "explicit":
        counts = rule_spec.get("counts")
        if not isinstance(counts, list):
            raise ConfigError("explicit rule needs a 'counts' list")
        rule = ExplicitRule(tuple((int(l), int(c)) for l, c in counts))
    elif rname == "geometric":
        beta = _parse_fraction(rule_spec.get("beta"), "geometric rate")
        shift = rule_spec.get("shift")
        rule = GeometricRule(beta, int(shift) if shift is not None else _auto_shift(beta))
    elif rname == "harmonic":
        rule = HarmonicRule()
    else:
        raise ConfigError(f"unknown spectrum rule {rname!r}")
    output_rule = spec.get("output_rule", "index")
    output_map = None
    if output_rule != "index":
        if not isinstance(output_rule, Mapping) or "map" not in output_rule:
            raise ConfigError("output_rule must be 'index' or {'map': {...}}")
        output_map = tuple(sorted(output_rule["map"].items()))
        for k, v in output_map:
            _check_program(k)
            _check_program(v) if v else None
    return TableMachine(name=name, rule=rule, output_map=output_map)


@lru_cache(maxsize=None)
def builtin(name: str) -> Machine:
    specs = {
        "dyadic2": {
            "kind": "table",
            "name": "dyadic2",
            "rule": {"name": "explicit", "counts": [[1, 1], [2, 1]]},
        },
        "harmonic": {"kind": "table", "name": "harmonic", "rule": {"name": "harmonic"}},
        "geometric-half": {
            "kind": "table",
            "name": "geometric-half",
            "rule": {"name": "geometric", "beta": "1/2", "shift": 2},
        },
        "sdvm": {"kind": "step", "name": "sdvm"},
    }
    if name not in specs:
        raise ConfigError(f"unknown builtin machine {name!r}")
    return build_machine(specs[name])


BUILTIN_NAMES = ("dyadic2", "harmonic", "geometric-half", "sdvm")


def load_machine(ref: str) -> Machine:
    """Resolve a builtin name or a JSON spec file path."""
    if ref in BUILTIN_NAMES:
        return builtin(ref)
    path = Path(ref)
    if path.exists():
        try:
            spec = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        return build_machine(spec)
    raise ConfigError(f"no builtin machine or spec file named {ref!r}")
