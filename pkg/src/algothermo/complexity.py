"""Program-size complexity, algorithmic probability, compression profiles.

Everything here is relative to one concrete machine and one search
horizon: H is the length of the shortest *discovered* program, exact
only when the search provably covered every shorter candidate.  For
table machines coverage is unconditional; for stepped machines it is
conditional on the fuel, and the result carries both knobs so a report
can be reproduced or extended.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import ConfigError, ResourceLimitError
from .machine import HALTED, Machine, StepMachine, TableMachine, machine_hash

DEFAULT_LMAX = 24
DEFAULT_SEARCH_BUDGET = 1 << 24


@dataclass(frozen=True)
class ComplexityResult:
    machine: str
    target: str
    exact: bool
    value: int  # exact H, or the certified lower bound when exact is False
    witness: str | None
    l_max: int
    fuel: int | None
    undecided_shorter: int = 0  # programs below the verdict still running at fuel

    @property
    def h(self) -> int | None:
        return self.value if self.exact else None


def _check_target(s: str) -> None:
    if any(ch not in "01" for ch in s):
        raise ConfigError(f"target must be a bit string, got {s!r}")


def _index_of_output(s: str) -> int | None:
    """Inverse of the index output rule: s = bin(i) without padding."""
    if not s or (s[0] == "0" and len(s) > 1):
        return None
    return int(s, 2)


def _table_search(machine: TableMachine, s: str, l_max: int, budget: int) -> ComplexityResult:
    mh = machine_hash(machine)
    lm = machine.max_length()
    horizon = min(l_max, lm) if lm is not None else l_max
    if machine.output_map is None:
        idx = _index_of_output(s)
        if idx is not None:
            seen = 0
            for l, c in machine.nonzero_lengths(horizon):
                if idx < seen + c:
                    start, _ = machine._level_start(l)
                    word = format(start + (idx - seen), f"0{l}b")
                    return ComplexityResult(mh, s, True, l, word, l_max, None)
                seen += c
        return ComplexityResult(mh, s, False, horizon + 1, None, l_max, None)
    count = machine.program_count_upto(horizon)
    if count > budget:
        raise ResourceLimitError(
            f"search space {count} programs exceeds budget {budget}"
        )
    for word in machine.assign_codewords(horizon, budget=budget):
        if machine.output_for(word, 0) == s:
            return ComplexityResult(mh, s, True, len(word), word, l_max, None)
    return ComplexityResult(mh, s, False, horizon + 1, None, l_max, None)


def _step_search(
    machine: StepMachine, s: str, l_max: int, fuel: int, budget: int
) -> ComplexityResult:
    mh = machine_hash(machine)
    if machine.program_count_upto(l_max) > budget:
        raise ResourceLimitError(
            f"search space up to length {l_max} exceeds budget {budget}"
        )
    undecided = 0
    undecided_below = 0
    cur_len = 0
    for program in machine.complete_programs(l_max):
        if len(program) > cur_len:
            cur_len = len(program)
            undecided_below = undecided
        res = machine.run(program, fuel)
        if res.status == HALTED:
            if res.output == s:
                # canonical order is (length, lex): first hit is minimal
                # among programs decided at this fuel
                return ComplexityResult(
                    mh, s, True, len(program), program, l_max, fuel, undecided_below
                )
        elif not res.never_halts:
            undecided += 1
    return ComplexityResult(mh, s, False, l_max + 1, None, l_max, fuel, undecided)


def program_size_complexity(
    machine: Machine,
    s: str,
    l_max: int = DEFAULT_LMAX,
    fuel: int = 1 << 16,
    budget: int = DEFAULT_SEARCH_BUDGET,
) -> ComplexityResult:
    """Minimum halting program length with output s, or a lower bound.

    The lower-bound verdict means: no program of length <= l_max halts
    with output s within the fuel, so H(s) >= l_max + 1 under that
    fuel (unconditionally for table machines).
    """
    _check_target(s)
    if l_max < 1:
        raise ConfigError(f"search horizon must be >= 1, got {l_max}")
    if isinstance(machine, TableMachine):
        return _table_search(machine, s, l_max, budget)
    return _step_search(machine, s, l_max, fuel, budget)


@dataclass(frozen=True)
class ProbabilityBound:
    machine: str
    target: str
    value: Fraction  # sum of 2^-|p| over discovered programs
    exact: bool
    n_programs: int


def algorithmic_probability(
    machine: Machine,
    s: str,
    l_max: int = DEFAULT_LMAX,
    fuel: int = 1 << 16,
    budget: int = DEFAULT_SEARCH_BUDGET,
) -> ProbabilityBound:
    """Discovered mass of s: a certified lower bound on P(s).

    Monotone in both l_max and fuel.  Exact for index-rule table
    machines (one program per output) and for finite tables fully
    covered by the horizon.
    """
    _check_target(s)
    if l_max < 1:
        raise ConfigError(f"search horizon must be >= 1, got {l_max}")
    mh = machine_hash(machine)
    if isinstance(machine, TableMachine):
        lm = machine.max_length()
        horizon = min(l_max, lm) if lm is not None else l_max
        if machine.output_map is None:
            idx = _index_of_output(s)
            if idx is None or idx >= machine.program_count_upto(horizon):
                exact = idx is None or (lm is not None and horizon == lm)
                return ProbabilityBound(mh, s, Fraction(0), exact, 0)
            res = _table_search(machine, s, horizon, budget)
            return ProbabilityBound(mh, s, Fraction(1, 1 << res.value), True, 1)
        if machine.program_count_upto(horizon) > budget:
            raise ResourceLimitError(f"probability scan exceeds budget {budget}")
        total = Fraction(0)
        n = 0
        for word in machine.assign_codewords(horizon, budget=budget):
            if machine.output_for(word, 0) == s:
                total += Fraction(1, 1 << len(word))
                n += 1
        return ProbabilityBound(mh, s, total, lm is not None and horizon == lm, n)
    if machine.program_count_upto(l_max) > budget:
        raise ResourceLimitError(f"probability scan exceeds budget {budget}")
    total = Fraction(0)
    n = 0
    for program in machine.complete_programs(l_max):
        res = machine.run(program, fuel)
        if res.status == HALTED and res.output == s:
            total += Fraction(1, 1 << len(program))
            n += 1
    return ProbabilityBound(mh, s, total, False, n)


def discovered_outputs(
    machine: StepMachine, l_max: int, fuel: int, budget: int = DEFAULT_SEARCH_BUDGET
) -> dict[str, tuple[int, Fraction]]:
    """One pass over the horizon: output -> (min length, discovered mass)."""
    if machine.program_count_upto(l_max) > budget:
        raise ResourceLimitError(f"scan up to length {l_max} exceeds budget {budget}")
    table: dict[str, tuple[int, Fraction]] = {}
    for program in machine.complete_programs(l_max):
        res = machine.run(program, fuel)
        if res.status != HALTED:
            continue
        h, p = table.get(res.output, (len(program), Fraction(0)))
        table[res.output] = (min(h, len(program)), p + Fraction(1, 1 << len(program)))
    return table


@dataclass(frozen=True)
class ProfileRow:
    n: int
    prefix: str
    result: ComplexityResult
    ratio_upper: Fraction | None  # H(prefix)/n when a witness exists
    ratio_lower: Fraction  # certified bound / n


def compression_profile(
    machine: Machine,
    alpha_bits: str,
    n_grid: Sequence[int],
    l_max: int = DEFAULT_LMAX,
    fuel: int = 1 << 16,
    budget: int = DEFAULT_SEARCH_BUDGET,
) -> list[ProfileRow]:
    """Per-prefix compression ratios H(alpha[:n])/n along n_grid.

    No verdict is attached: finite horizons cannot decide the limit,
    so rows carry whichever side of the ratio the search certified.
    """
    _check_target(alpha_bits)
    rows: list[ProfileRow] = []
    for n in n_grid:
        if not 1 <= n <= len(alpha_bits):
            raise ConfigError(f"grid point {n} outside the provided string")
        prefix = alpha_bits[:n]
        res = program_size_complexity(machine, prefix, l_max, fuel, budget)
        rows.append(
            ProfileRow(
                n=n,
                prefix=prefix,
                result=res,
                ratio_upper=Fraction(res.value, n) if res.exact else None,
                ratio_lower=Fraction(res.value, n),
            )
        )
    return rows


def validate_witness(machine: Machine, result: ComplexityResult, fuel: int = 1 << 16) -> bool:
    """Exactness contract: the witness halts with the target at its length."""
    if not result.exact or result.witness is None:
        return False
    if len(result.witness) != result.value:
        return False
    run = machine.run(result.witness, fuel)
    return run.status == HALTED and run.output == result.target
