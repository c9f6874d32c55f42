"""Exact composition counts for N-codeword strings and the two ensembles.

Theta(L, N) counts the N-tuples of codewords whose total length lands
in [L, L + delta_L].  Everything downstream is exact big-integer or
exact-rational arithmetic: entropies and temperatures become intervals
only at the final log2.  The microcanonical side (uniform over the
count) is compared against the canonical side (per-codeword weight
2^(-l/T)/Z(T)) at two temperatures:

* the table temperature 2 / [S(L+1,N) - S(L-1,N)], the discrete slope
  of entropy in total length, and
* the energy-matched temperature solving E(T) = L/N.

Only finite spectra are admitted; an infinite-domain machine has no
complete codeword table to compose.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, NumericDomainError, ResourceLimitError, UnsolvableError
from .machine import TableMachine, machine_hash
from .numeric import (
    DEFAULT_PRECISION,
    Dyadic,
    DyadicInterval,
    dyadic_from_fraction,
    exp2_frac,
    iv_log2,
)

DEFAULT_MAX_CELLS = 1 << 24
DEFAULT_DFA_STATES = 1 << 16

Counts = tuple[tuple[int, int], ...]


def _spectrum_counts(source: TableMachine | Sequence[tuple[int, int]]) -> tuple[Counts, str]:
    if isinstance(source, TableMachine):
        lm = source.max_length()
        if lm is None:
            raise ConfigError("ensembles need a finite machine")
        counts = tuple(source.nonzero_lengths(lm))
        label = machine_hash(source)
    else:
        counts = tuple((int(l), int(c)) for l, c in source if c)
        label = "spectrum"
    if not counts:
        raise ConfigError("empty spectrum")
    seen = set()
    for l, c in counts:
        if l < 1 or c < 1 or l in seen:
            raise ConfigError(f"bad spectrum entry ({l}, {c})")
        seen.add(l)
    if sum(Fraction(c, 1 << l) for l, c in counts) > 1:
        raise ConfigError("spectrum violates the Kraft inequality")
    return tuple(sorted(counts)), label


@dataclass(frozen=True)
class EnsembleTable:
    machine: str
    counts: Counts
    n_max: int
    l_max: int  # largest total length tabulated
    delta_l: int
    _theta: tuple[tuple[int, ...], ...]  # [N][L], exact-length window

    @property
    def l_min_word(self) -> int:
        return self.counts[0][0]

    @property
    def l_max_word(self) -> int:
        return self.counts[-1][0]

    def theta_exact(self, length: int, n: int) -> int:
        if not 0 <= n <= self.n_max:
            raise ConfigError(f"N={n} outside table rectangle")
        if not 0 <= length <= self.l_max:
            return 0
        return self._theta[n][length]

    def theta(self, length: int, n: int) -> int:
        """Windowed count: totals in [length, length + delta_l]."""
        if length + self.delta_l > self.l_max:
            raise ConfigError(
                f"window [{length}, {length + self.delta_l}] exceeds table length {self.l_max}"
            )
        return sum(self.theta_exact(t, n) for t in range(length, length + self.delta_l + 1))

    def digest(self) -> str:
        import hashlib

        h = hashlib.sha256()
        for row in self._theta:
            h.update((",".join(map(str, row)) + ";").encode())
        return h.hexdigest()[:16]


def build_theta(
    source: TableMachine | Sequence[tuple[int, int]],
    n_max: int,
    l_max: int,
    delta_l: int = 0,
    max_cells: int = DEFAULT_MAX_CELLS,
) -> EnsembleTable:
    """Exact DP over the convolution Theta(L,N) = sum_l c_l Theta(L-l, N-1)."""
    counts, label = _spectrum_counts(source)
    if n_max < 1 or delta_l < 0:
        raise ConfigError("need n_max >= 1 and delta_l >= 0")
    if n_max * counts[0][0] > l_max:
        raise ConfigError(
            f"table length {l_max} cannot hold {n_max} words of length >= {counts[0][0]}"
        )
    if (n_max + 1) * (l_max + 1) > max_cells:
        raise ResourceLimitError(
            f"theta rectangle {(n_max + 1)}x{(l_max + 1)} exceeds {max_cells} cells"
        )
    rows: list[tuple[int, ...]] = [tuple(1 if L == 0 else 0 for L in range(l_max + 1))]
    for n in range(1, n_max + 1):
        prev = rows[-1]
        row = [0] * (l_max + 1)
        for L in range(l_max + 1):
            acc = 0
            for l, c in counts:
                if l > L:
                    break
                acc += c * prev[L - l]
            row[L] = acc
        rows.append(tuple(row))
    return EnsembleTable(label, counts, n_max, l_max, delta_l, tuple(rows))


# ---------------------------------------------------------------------------
# microcanonical quantities
# ---------------------------------------------------------------------------


def _log2_int(value: int, prec: int) -> DyadicInterval:
    return iv_log2(DyadicInterval.from_fraction(Fraction(value), prec))


@dataclass(frozen=True)
class MicroPoint:
    length: int
    n: int
    theta: int
    entropy: DyadicInterval
    inv_temperature: DyadicInterval | None
    temperature: DyadicInterval | None
    infinite_temperature: bool


def micro_entropy_temperature(
    table: EnsembleTable, length: int, n: int, prec: int = DEFAULT_PRECISION
) -> MicroPoint:
    """S = log2 Theta and the central-difference temperature.

    1/T = [S(L+1) - S(L-1)] / 2 = log2(Theta(L+1)/Theta(L-1)) / 2 on
    the exact windowed counts.  Equal neighbors mean a flat count and
    are reported as the infinite-temperature edge, not an error.
    """
    th = table.theta(length, n)
    if th <= 0:
        raise NumericDomainError(f"Theta({length},{n}) = 0: entropy undefined")
    s = _log2_int(th, prec)
    up, down = table.theta(length + 1, n), table.theta(length - 1, n)
    if up <= 0 or down <= 0:
        return MicroPoint(length, n, th, s, None, None, False)
    ratio = Fraction(up, down)
    if ratio == 1:
        zero = DyadicInterval.point(0, prec)
        return MicroPoint(length, n, th, s, zero, None, True)
    inv_t = iv_log2(DyadicInterval.from_fraction(ratio, prec)).scale_fraction(
        Fraction(1, 2)
    )
    temp = DyadicInterval.point(1, prec) / inv_t
    return MicroPoint(length, n, th, s, inv_t, temp, False)


def first_codeword_distribution(
    table: EnsembleTable, length: int, n: int
) -> dict[int, Fraction]:
    """Per-length mass of the left-most codeword: c_l Th(L-l, N-1)/Th(L, N).

    Within a length class every codeword carries mass/c_l, so the
    per-length map is the whole distribution.
    """
    if n < 2:
        raise ConfigError("first-codeword marginal needs N >= 2")
    th = table.theta(length, n)
    if th <= 0:
        raise NumericDomainError(f"Theta({length},{n}) = 0: no compositions")
    out: dict[int, Fraction] = {}
    for l, c in table.counts:
        rest = table.theta(length - l, n - 1) if length - l >= 0 else 0
        if rest:
            out[l] = Fraction(c * rest, th)
    return out


def mean_first_length(dist: Mapping[int, Fraction]) -> Fraction:
    return sum((Fraction(l) * m for l, m in dist.items()), Fraction(0))


def channel_law(table: EnsembleTable, length: int, n: int) -> dict[int, Fraction]:
    """First-codeword law induced by fair-coin parsing in the window.

    Tuples carry coin mass 2^-total, so for delta_l > 0 this is not the
    uniform microcanonical law: longer totals weigh half as much.  The
    two coincide exactly at delta_l = 0, where every tuple in the class
    has the same mass.
    """
    if n < 2:
        raise ConfigError("first-codeword marginal needs N >= 2")
    if length + table.delta_l > table.l_max:
        raise ConfigError(
            f"window [{length}, {length + table.delta_l}] exceeds table length {table.l_max}"
        )

    def mass(low: int, m: int) -> Fraction:
        hi = low + table.delta_l
        return sum(
            (
                Fraction(table.theta_exact(t, m), 1 << t)
                for t in range(max(low, 0), hi + 1)
            ),
            Fraction(0),
        )

    total = mass(length, n)
    if total <= 0:
        raise NumericDomainError(f"no compositions reach [{length}, {length + table.delta_l}]")
    out: dict[int, Fraction] = {}
    for l, c in table.counts:
        rest = mass(length - l, n - 1)
        if rest:
            out[l] = Fraction(c, 1 << l) * rest / total
    return out


# ---------------------------------------------------------------------------
# canonical side
# ---------------------------------------------------------------------------


def _weight(l: int, temp: Fraction | DyadicInterval, prec: int) -> DyadicInterval:
    """Enclosure of 2^(-l/T); the exponent is increasing in T away from 0,
    so endpoint evaluation is exact either side of the pole."""
    if isinstance(temp, Fraction):
        if temp == 0:
            raise NumericDomainError("temperature must be nonzero")
        return exp2_frac(Fraction(-l) / temp, prec)
    if temp.contains(Fraction(0)):
        raise NumericDomainError("temperature interval straddles zero")
    lo = exp2_frac(Fraction(-l) / temp.lo.as_fraction(), prec).lo
    hi = exp2_frac(Fraction(-l) / temp.hi.as_fraction(), prec).hi
    return DyadicInterval(lo, hi, prec)


def canonical_distribution(
    source: TableMachine | Sequence[tuple[int, int]] | Counts,
    temp: Fraction | DyadicInterval,
    prec: int = DEFAULT_PRECISION,
) -> dict[int, DyadicInterval]:
    """Per-length Boltzmann mass c_l 2^(-l/T) / Z(T) on a finite spectrum."""
    counts, _ = _spectrum_counts(source)
    weights = {l: _weight(l, temp, prec).scale_fraction(Fraction(c)) for l, c in counts}
    z = None
    for w in weights.values():
        z = w if z is None else z + w
    return {l: w / z for l, w in weights.items()}


def spectrum_energy(counts: Counts, temp: Fraction, prec: int) -> DyadicInterval:
    z = w1 = None
    for l, c in counts:
        t = exp2_frac(Fraction(-l) / temp, prec).scale_fraction(Fraction(c))
        z = t if z is None else z + t
        t1 = t.scale_fraction(Fraction(l))
        w1 = t1 if w1 is None else w1 + t1
    return w1 / z


def solve_energy_temperature(
    source: TableMachine | Sequence[tuple[int, int]] | Counts,
    target: Fraction,
    prec: int = DEFAULT_PRECISION,
) -> DyadicInterval:
    """Temperature interval with E(T) = target on a finite spectrum.

    E is strictly increasing (specific heat >= 0) from l_min at T=0+
    to the count-weighted mean length at T=inf, both exclusive; targets
    at or beyond those ends are unsolvable.
    """
    counts, _ = _spectrum_counts(source)
    l_min = counts[0][0]
    total = sum(c for _, c in counts)
    mean = Fraction(sum(c * l for l, c in counts), total)
    if len(counts) == 1:
        raise UnsolvableError("single-length spectrum has constant E")
    if not l_min < target < mean:
        raise UnsolvableError(
            f"target {target} outside the open energy range ({l_min}, {mean})"
        )
    width_goal = Fraction(1, 1 << (prec // 2))

    def e_at(t: Fraction) -> DyadicInterval:
        return spectrum_energy(counts, t, prec)

    lo = Fraction(1, 4)
    for _ in range(8 * prec):
        if e_at(lo).hi.as_fraction() < target:
            break
        lo /= 2
    else:
        raise UnsolvableError(f"no lower bracket for E = {target}")
    hi = Fraction(2)
    for _ in range(8 * prec):
        if e_at(hi).lo.as_fraction() > target:
            break
        hi *= 2
    else:
        raise UnsolvableError(f"no upper bracket for E = {target}")

    for _ in range(12 * prec):
        if hi - lo <= width_goal:
            break
        mid = (lo + hi) / 2
        e = e_at(mid)
        if e.hi.as_fraction() < target:
            lo = mid
        elif e.lo.as_fraction() > target:
            hi = mid
        else:
            # enclosure straddles the target: clip a certified window
            w = width_goal / 2
            cand_lo, cand_hi = max(lo, mid - w), min(hi, mid + w)
            if cand_lo > lo and e_at(cand_lo).lo.as_fraction() > target:
                hi = cand_lo
            elif cand_hi < hi and e_at(cand_hi).hi.as_fraction() < target:
                lo = cand_hi
            else:
                lo, hi = cand_lo, cand_hi
                break
    return DyadicInterval(
        dyadic_from_fraction(lo, prec, up=False),
        dyadic_from_fraction(hi, prec, up=True),
        prec,
    )


# ---------------------------------------------------------------------------
# micro vs canonical
# ---------------------------------------------------------------------------


def _interp_entropy(
    table: EnsembleTable, x: Fraction, n: int, prec: int
) -> DyadicInterval | None:
    """log2 Theta(x, n) at rational x by linear interpolation on integers."""
    fl = x.numerator // x.denominator
    if Fraction(fl) == x:
        th = table.theta(fl, n)
        return _log2_int(th, prec) if th > 0 else None
    lo_t, hi_t = table.theta(fl, n), table.theta(fl + 1, n)
    if lo_t <= 0 or hi_t <= 0:
        return None
    frac = x - fl
    return _log2_int(lo_t, prec).scale_fraction(1 - frac) + _log2_int(
        hi_t, prec
    ).scale_fraction(frac)


def _abs_max(devs: Sequence[DyadicInterval], prec: int) -> DyadicInterval:
    lo = max(d.lo for d in devs)
    hi = max(d.hi for d in devs)
    return DyadicInterval(lo, hi, prec)


@dataclass(frozen=True)
class DeviationReport:
    length: int
    n: int
    micro: dict[int, Fraction]
    energy_micro: Fraction
    table_temperature: DyadicInterval | None
    deviation_at_table_t: DyadicInterval | None
    matched_temperature: DyadicInterval | None
    deviation_at_matched_t: DyadicInterval | None
    matched_unsolvable: str | None
    free_energy: DyadicInterval | None
    entropy: DyadicInterval


def micro_canonical_deviation(
    table: EnsembleTable, length: int, n: int, prec: int = DEFAULT_PRECISION
) -> DeviationReport:
    """Max per-length |R_micro - R_canonical| at both temperatures.

    The table temperature (discrete entropy slope) captures the
    equilibrium argument; the energy-matched temperature pins the
    canonical mean length to L/N.  F = E - T S(E, 1) interpolates the
    single-word entropy at the rational mean.
    """
    point = micro_entropy_temperature(table, length, n, prec)
    micro = first_codeword_distribution(table, length, n)
    e_micro = mean_first_length(micro)

    def deviation(temp: Fraction | DyadicInterval) -> DyadicInterval:
        canon = canonical_distribution(table.counts, temp, prec)
        devs = []
        for l, c in table.counts:
            r = micro.get(l, Fraction(0))
            devs.append((DyadicInterval.from_fraction(r, prec) - canon[l]).abs())
        return _abs_max(devs, prec)

    dev_table = deviation(point.temperature) if point.temperature is not None else None

    matched: DyadicInterval | None = None
    dev_matched: DyadicInterval | None = None
    unsolvable: str | None = None
    try:
        matched = solve_energy_temperature(table.counts, Fraction(length, n), prec)
        dev_matched = deviation(matched)
    except UnsolvableError as exc:
        unsolvable = str(exc)

    free: DyadicInterval | None = None
    if point.temperature is not None:
        s1 = _interp_entropy(table, e_micro, 1, prec)
        if s1 is not None:
            free = DyadicInterval.from_fraction(e_micro, prec) - point.temperature * s1

    return DeviationReport(
        length=length,
        n=n,
        micro=micro,
        energy_micro=e_micro,
        table_temperature=point.temperature,
        deviation_at_table_t=dev_table,
        matched_temperature=matched,
        deviation_at_matched_t=dev_matched,
        matched_unsolvable=unsolvable,
        free_energy=free,
        entropy=point.entropy,
    )


def additivity_residual(
    table: EnsembleTable, length: int, n: int, prec: int = DEFAULT_PRECISION
) -> DyadicInterval:
    """|S(L,N) - S(E,1) - S(L-E, N-1)| with E the exact mean first length."""
    if n < 2:
        raise ConfigError("additivity needs N >= 2")
    point = micro_entropy_temperature(table, length, n, prec)
    e = mean_first_length(first_codeword_distribution(table, length, n))
    s_first = _interp_entropy(table, e, 1, prec)
    s_rest = _interp_entropy(table, Fraction(length) - e, n - 1, prec)
    if s_first is None or s_rest is None:
        raise NumericDomainError("interpolation hit an empty count")
    return (point.entropy - s_first - s_rest).abs()


# ---------------------------------------------------------------------------
# fair-coin channel simulation
# ---------------------------------------------------------------------------

GENERATOR_NAME = "numpy.random.PCG64"


def _parse_dfa(machine: TableMachine, budget: int) -> tuple[np.ndarray, int]:
    """Transition table over alive codeword prefixes.

    Encoding: >= 0 next state, -1 dead, -(2+l) emit a length-l word.
    """
    lm = machine.max_length()
    if lm is None:
        raise ConfigError("channel simulation needs a finite machine")
    levels = []
    for l, c in machine.nonzero_lengths(lm):
        start, _ = machine._level_start(l)
        levels.append((l, start, c))

    def word_at(depth: int, value: int) -> bool:
        for l, start, c in levels:
            if l == depth:
                return start <= value < start + c
        return False

    def alive(depth: int, value: int) -> bool:
        for l, start, c in levels:
            if l <= depth:
                continue
            lo = value << (l - depth)
            hi = (value + 1) << (l - depth)
            if lo < start + c and start < hi:
                return True
        return False

    states: dict[tuple[int, int], int] = {(0, 0): 0}
    order = [(0, 0)]
    rows: list[list[int]] = []
    i = 0
    while i < len(order):
        depth, value = order[i]
        row = []
        for b in (0, 1):
            nd, nv = depth + 1, (value << 1) | b
            if word_at(nd, nv):
                row.append(-(2 + nd))
            elif alive(nd, nv):
                key = (nd, nv)
                if key not in states:
                    if len(states) >= budget:
                        raise ResourceLimitError(
                            f"parse automaton exceeds {budget} states"
                        )
                    states[key] = len(order)
                    order.append(key)
                row.append(states[key])
            else:
                row.append(-1)
        rows.append(row)
        i += 1
    return np.array(rows, dtype=np.int64), lm


@dataclass(frozen=True)
class ChannelReport:
    machine: str
    n: int
    length: int
    delta_l: int
    samples: int
    shards: int
    seed: int
    generator: str
    generator_version: str
    accepted: int
    tallies: dict[int, int]  # first-codeword length -> accepted count
    empirical: dict[int, float]
    acceptance_rate: float
    warning: str | None


def _simulate_shard(
    trans: np.ndarray,
    n_words: int,
    max_word: int,
    length: int,
    delta_l: int,
    m: int,
    rng: np.random.Generator,
) -> tuple[int, np.ndarray]:
    max_bits = n_words * max_word
    bits = rng.integers(0, 2, size=(m, max_bits), dtype=np.int64)
    state = np.zeros(m, dtype=np.int64)
    words = np.zeros(m, dtype=np.int64)
    total = np.zeros(m, dtype=np.int64)
    first = np.zeros(m, dtype=np.int64)
    dead = np.zeros(m, dtype=bool)
    for col in range(max_bits):
        active = ~dead & (words < n_words)
        if not active.any():
            break
        nxt = trans[state, bits[:, col]]
        emit = active & (nxt <= -2)
        l_emit = -nxt - 2
        total += np.where(emit, l_emit, 0)
        first = np.where(emit & (words == 0), l_emit, first)
        words += emit
        dead |= active & (nxt == -1)
        state = np.where(emit, 0, np.where(active & (nxt >= 0), nxt, state))
    ok = (~dead) & (words == n_words) & (total >= length) & (total <= length + delta_l)
    tally = np.bincount(first[ok], minlength=max_word + 1)
    return int(ok.sum()), tally


def channel_simulate(
    machine: TableMachine,
    n_words: int,
    length: int,
    samples: int,
    seed: int,
    delta_l: int = 0,
    shards: int = 1,
    dfa_budget: int = DEFAULT_DFA_STATES,
) -> ChannelReport:
    """Empirical first-codeword law from fair-coin bits.

    Each trial greedily parses n_words codewords (prefix-freeness makes
    the parse unique) and is accepted when the total length falls in
    [length, length + delta_l]; parses that leave the codeword tree are
    rejected.  Sharding splits the trial budget across generators
    spawned from the seed, so reports are reproducible for a fixed
    (seed, shards, samples, numpy-pinned generator).
    """
    if n_words < 1 or samples < 1 or shards < 1 or delta_l < 0:
        raise ConfigError("need n_words, samples, shards >= 1 and delta_l >= 0")
    trans, max_word = _parse_dfa(machine, dfa_budget)
    seqs = np.random.SeedSequence(seed).spawn(shards)
    per = samples // shards
    extra = samples - per * shards
    accepted = 0
    tally = np.zeros(max_word + 1, dtype=np.int64)
    for i, sq in enumerate(seqs):
        m = per + (1 if i < extra else 0)
        if m == 0:
            continue
        a, t = _simulate_shard(
            trans, n_words, max_word, length, delta_l,
            m, np.random.Generator(np.random.PCG64(sq)),
        )
        accepted += a
        tally += t
    tallies = {l: int(tally[l]) for l in range(1, max_word + 1) if tally[l]}
    empirical = (
        {l: c / accepted for l, c in tallies.items()} if accepted else {}
    )
    return ChannelReport(
        machine=machine_hash(machine),
        n=n_words,
        length=length,
        delta_l=delta_l,
        samples=samples,
        shards=shards,
        seed=seed,
        generator=GENERATOR_NAME,
        generator_version=np.__version__,
        accepted=accepted,
        tallies=tallies,
        empirical=empirical,
        acceptance_rate=accepted / samples,
        warning=None if accepted else "zero accepted samples: window too improbable",
    )
