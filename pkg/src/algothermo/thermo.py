"""Partial-sum thermodynamics over a machine's halting programs.

For temperature ``T`` and the first ``n`` halting programs ``q_i`` the
certified accumulators are

* ``Z_n  = sum 2**(-|q_i|/T)``          (halting-weight partition sum)
* ``W1_n = sum |q_i|   * 2**(-|q_i|/T)``
* ``W2_n = sum |q_i|^2 * 2**(-|q_i|/T)``
* ``WQ_n = sum |q_i|^Q * 2**(-|q_i|/T)`` for a configured rational Q

and the derived quantities

* free energy   ``F_n = -T * log2 Z_n``
* mean length   ``E_n = W1_n / Z_n``
* entropy       ``S_n = E_n / T + log2 Z_n``
* heat capacity ``C_n = (ln 2 / T^2) * (W2_n/Z_n - (W1_n/Z_n)^2)``,
  the closed variance form of ``dE_n/dT``; a centered finite difference
  of ``E_n`` is kept for cross-checks only, never as the definition.

For spectrum machines the sums run over lengths with exact counts, so
``n`` is the number of programs covered rather than an enumeration
prefix.  Below temperature 1 a geometric majorant turns the truncation
into a two-sided enclosure (``tail_bound``); at and above temperature 1
the series may diverge and every result is a certified lower bound on
the partial sums only, which is exactly what the divergence probes
report.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .enumeration import HaltRecord, dovetail
from .errors import ConfigError, NumericDomainError, UnsolvableError
from .machine import Machine, StepMachine, TableMachine, count_interval, machine_hash
from .numeric import (
    DEFAULT_PRECISION,
    Dyadic,
    DyadicInterval,
    dyadic_from_fraction,
    iv_log2,
    iv_power,
    ln2_interval,
    pow2_frac,
)

_ZERO = Dyadic(0, 0)


def _zero_iv(prec: int) -> DyadicInterval:
    return DyadicInterval(_ZERO, _ZERO, prec)


@dataclass(frozen=True)
class SeriesState:
    """Accumulated partial sums at one temperature."""

    machine: str
    temp: Fraction
    q: Fraction
    n: int
    z: DyadicInterval
    w1: DyadicInterval
    w2: DyadicInterval
    wq: DyadicInterval
    prec: int

    @classmethod
    def empty(
        cls,
        machine: Machine | str,
        temp: Fraction,
        q: Fraction = Fraction(0),
        prec: int = DEFAULT_PRECISION,
    ) -> "SeriesState":
        if temp <= 0:
            raise NumericDomainError(f"temperature must be positive, got {temp}")
        mh = machine if isinstance(machine, str) else machine_hash(machine)
        z = _zero_iv(prec)
        return cls(mh, temp, q, 0, z, z, z, z, prec)


def _accumulate_length(state: SeriesState, length: int, count: int = 1) -> SeriesState:
    term = pow2_frac(length, state.temp, state.prec)
    if count != 1:
        term = term.scale_fraction(Fraction(count))
    lq = (
        DyadicInterval.point(length**int(state.q), state.prec)
        if state.q.denominator == 1 and state.q >= 0
        else iv_power(DyadicInterval.point(length, state.prec), state.q)
    )
    return replace(
        state,
        n=state.n + count,
        z=state.z + term,
        w1=state.w1 + term.scale_fraction(Fraction(length)),
        w2=state.w2 + term.scale_fraction(Fraction(length * length)),
        wq=state.wq + term * lq,
    )


def accumulate(state: SeriesState, record: HaltRecord) -> SeriesState:
    """Fold the next enumerated program into the sums.

    Records must arrive in emission order; a gap means a skipped
    program and the partial sums would silently lie.
    """
    if record.index != state.n:
        raise ConfigError(f"record index {record.index} does not follow n={state.n}")
    return _accumulate_length(state, record.length)


def series_from_records(
    machine: Machine,
    records: Iterable[HaltRecord],
    temp: Fraction,
    q: Fraction = Fraction(0),
    prec: int = DEFAULT_PRECISION,
) -> SeriesState:
    state = SeriesState.empty(machine, temp, q, prec)
    for rec in records:
        state = accumulate(state, rec)
    return state


def series_from_spectrum(
    machine: TableMachine,
    temp: Fraction,
    l_cut: int,
    q: Fraction = Fraction(0),
    prec: int = DEFAULT_PRECISION,
) -> SeriesState:
    """Partial sums over all programs of length <= l_cut, by spectrum."""
    state = SeriesState.empty(machine, temp, q, prec)
    for l, c in machine.nonzero_lengths(l_cut):
        state = _accumulate_length(state, l, c)
    return state


# ---------------------------------------------------------------------------
# derived quantities
# ---------------------------------------------------------------------------


def free_energy(z: DyadicInterval, temp: Fraction) -> DyadicInterval:
    """F = -T log2 Z; needs Z bounded away from zero."""
    return iv_log2(z).scale_fraction(-temp)


def energy(w1: DyadicInterval, z: DyadicInterval) -> DyadicInterval:
    return w1 / z


def entropy(e: DyadicInterval, z: DyadicInterval, temp: Fraction) -> DyadicInterval:
    return e.scale_fraction(1 / temp) + iv_log2(z)


def specific_heat(
    w2: DyadicInterval, w1: DyadicInterval, z: DyadicInterval, temp: Fraction
) -> DyadicInterval:
    var = w2 / z - (w1 / z).square()
    return (ln2_interval(z.prec) * var).scale_fraction(1 / temp**2)


def boltzmann_entropy(state: SeriesState, masses: Sequence[tuple[int, int]]) -> DyadicInterval:
    """-sum r log2 r over per-program Boltzmann weights r = 2^(-l/T)/Z.

    Cross-check route for the entropy identity; masses is the (length,
    count) support actually accumulated.  Each of the count programs at
    a length contributes its own phi term; lumping them into one mass
    c*r would add a spurious -sum r log2 c to the total.
    """
    z = state.z
    total = _zero_iv(state.prec)
    for l, c in masses:
        r = pow2_frac(l, state.temp, state.prec) / z
        total = total + phi(r).scale_fraction(Fraction(c))
    return total


def phi(x: DyadicInterval) -> DyadicInterval:
    """phi(x) = -x log2 x on (0, 1]."""
    return -(iv_log2(x) * x)


def phi_fraction(x: Fraction, prec: int) -> DyadicInterval:
    """phi at an exact rational, clamped into [0, ...] against rounding."""
    if not 0 < x <= 1:
        raise NumericDomainError(f"phi needs x in (0,1], got {x}")
    out = -(iv_log2(DyadicInterval.from_fraction(x, prec)).scale_fraction(x))
    lo = out.lo if out.lo.man > 0 else _ZERO
    return DyadicInterval(lo, out.hi if out.hi.man > 0 else _ZERO, prec)


# ---------------------------------------------------------------------------
# tails and rows
# ---------------------------------------------------------------------------


def tail_bound(
    machine: TableMachine,
    temp: Fraction,
    l_cut: int,
    q: Fraction = Fraction(0),
    prec: int = DEFAULT_PRECISION,
) -> DyadicInterval:
    """Enclosure of sum_{l > l_cut} c_l l^q 2^(-l/T).

    Finite spectra get the exact remainder.  Infinite spectra need
    temp < 1 and the rule's geometric majorant c_l <= A 2^(beta l);
    the bound is the leading majorant term over 1 - rho with rho the
    (decreasing) term ratio at l_cut + 1.
    """
    if q < 0:
        raise NumericDomainError(f"weight exponent must be >= 0, got {q}")
    lmax = machine.max_length()
    if lmax is not None:
        state = SeriesState.empty(machine, temp, q, prec)
        for l, c in machine.nonzero_lengths(lmax):
            if l > l_cut:
                state = _accumulate_length(state, l, c)
        return state.wq
    if temp >= 1:
        raise NumericDomainError(f"tail bound undefined at temperature {temp} >= 1")
    maj = machine.rule.majorant()
    if maj is None:
        raise NumericDomainError("spectrum rule offers no geometric majorant")
    a, beta = maj
    gamma = Fraction(1) / temp - beta
    if gamma <= 0:
        raise NumericDomainError(f"majorant rate {beta} not summable at temperature {temp}")
    l1 = l_cut + 1
    lead = pow2_frac(l1, Fraction(1) / gamma, prec).scale_fraction(a)
    if q:
        lead = lead * iv_power(DyadicInterval.point(l1, prec), q)
    ratio_hi = (
        iv_power(
            DyadicInterval.from_fraction(Fraction(l1 + 1, l1), prec), q
        ).hi.as_fraction()
        if q
        else Fraction(1)
    ) * pow2_frac(1, Fraction(1) / gamma, prec).hi.as_fraction()
    if ratio_hi >= 1:
        raise NumericDomainError(
            f"cutoff {l_cut} too small to certify a geometric tail at temperature {temp}"
        )
    bound = lead.scale_fraction(1 / (1 - ratio_hi)).hi
    return DyadicInterval(_ZERO, bound, prec)


@dataclass(frozen=True)
class ThermoRow:
    """One sweep row; None fields could not be formed (e.g. Z at zero)."""

    machine: str
    temp: Fraction
    n: int
    cutoff: int | None
    z: DyadicInterval
    f: DyadicInterval | None
    e: DyadicInterval | None
    s: DyadicInterval | None
    c: DyadicInterval | None
    tail_bounded: bool


def _row_from_state(
    state: SeriesState, cutoff: int | None, tails: tuple[DyadicInterval, ...] | None
) -> ThermoRow:
    z, w1, w2 = state.z, state.w1, state.w2
    tail_bounded = tails is not None
    if tails is not None:
        t0, t1, t2 = tails
        z, w1, w2 = z + t0, w1 + t1, w2 + t2
    if z.lo.man <= 0:
        return ThermoRow(
            state.machine, state.temp, state.n, cutoff, z, None, None, None, None, tail_bounded
        )
    e = energy(w1, z)
    return ThermoRow(
        machine=state.machine,
        temp=state.temp,
        n=state.n,
        cutoff=cutoff,
        z=z,
        f=free_energy(z, state.temp),
        e=e,
        s=entropy(e, z, state.temp),
        c=specific_heat(w2, w1, z, state.temp),
        tail_bounded=tail_bounded,
    )


def thermo_row(
    machine: Machine,
    temp: Fraction,
    prec: int = DEFAULT_PRECISION,
    l_cut: int | None = None,
    records: Sequence[HaltRecord] | None = None,
) -> ThermoRow:
    """Certified row for one temperature.

    Table machines sum their spectrum to l_cut and, when a convergent
    majorant exists, add two-sided tails.  Step machines fold the given
    enumeration records (partial sums only).
    """
    if isinstance(machine, TableMachine):
        cut = l_cut if l_cut is not None else default_cutoff(machine, prec)
        state = series_from_spectrum(machine, temp, cut, prec=prec)
        try:
            tails = (
                tail_bound(machine, temp, cut, Fraction(0), prec),
                tail_bound(machine, temp, cut, Fraction(1), prec),
                tail_bound(machine, temp, cut, Fraction(2), prec),
            )
        except NumericDomainError:
            tails = None
        return _row_from_state(state, cut, tails)
    if records is None:
        raise ConfigError("step machines need enumeration records for a thermo row")
    state = series_from_records(machine, records, temp, prec=prec)
    return _row_from_state(state, None, None)


def default_cutoff(machine: TableMachine, prec: int) -> int:
    lmax = machine.max_length()
    if lmax is not None:
        return lmax
    return max(64, 2 * prec)


def sweep(
    machine: Machine,
    temps: Sequence[Fraction],
    prec: int = DEFAULT_PRECISION,
    l_cut: int | None = None,
    rounds: int | None = None,
    records: Sequence[HaltRecord] | None = None,
) -> tuple[list[ThermoRow], list[tuple[Fraction, str]]]:
    """Rows for each temperature; per-row failures are reported, not raised."""
    if isinstance(machine, StepMachine) and records is None:
        records = dovetail(machine, rounds if rounds is not None else 12)
    rows: list[ThermoRow] = []
    errors: list[tuple[Fraction, str]] = []
    for t in temps:
        try:
            rows.append(thermo_row(machine, t, prec, l_cut=l_cut, records=records))
        except (NumericDomainError, ConfigError) as exc:
            errors.append((t, str(exc)))
    return rows, errors


def parse_temp_grid(text: str) -> list[Fraction]:
    """Comma list ("1/4,0.5") or colon range ("0.1:0.9:0.1"), inclusive."""
    try:
        if ":" in text:
            start_s, stop_s, step_s = text.split(":")
            start, stop, step = Fraction(start_s), Fraction(stop_s), Fraction(step_s)
            if step <= 0:
                raise ConfigError(f"grid step must be positive: {text}")
            out = []
            t = start
            while t <= stop:
                out.append(t)
                t += step
            return out
        return [Fraction(tok) for tok in text.split(",") if tok]
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad temperature grid {text!r}: {exc}") from exc


# ---------------------------------------------------------------------------
# solving Z(T) = target
# ---------------------------------------------------------------------------


def _z_enclosure(
    machine: TableMachine, temp: Fraction, l_cut: int, prec: int
) -> DyadicInterval:
    state = series_from_spectrum(machine, temp, l_cut, prec=prec)
    z = state.z
    if machine.max_length() is None:
        z = z + tail_bound(machine, temp, l_cut, Fraction(0), prec)
    return z


def solve_temperature(
    machine: TableMachine,
    target: Fraction,
    prec: int = DEFAULT_PRECISION,
    max_iter: int | None = None,
) -> DyadicInterval:
    """Temperature interval with Z(T) = target, width <= 2**(-prec//2).

    Bisection over (0, 1) on dyadic midpoints.  The bracket invariant
    keeps target inside [Z(lo).lo, Z(hi).hi], so the returned interval
    certifies containment even when the target is hit exactly.
    """
    if target <= 0:
        raise UnsolvableError(f"target must be positive, got {target}")
    width_goal = Fraction(1, 1 << (prec // 2))
    cut0 = default_cutoff(machine, prec)

    def zval(t: Fraction, boost: int = 0) -> DyadicInterval:
        return _z_enclosure(machine, t, cut0 + 64 * boost, prec + 32 * boost)

    lo = Fraction(1, 16)
    while zval(lo).hi.as_fraction() >= target:
        lo /= 2
        if lo.denominator > 1 << (8 * prec):
            raise UnsolvableError(f"target {target} not reachable above temperature 0")
    hi = Fraction(1) - Fraction(1, 1 << prec)
    if zval(hi).lo.as_fraction() <= target:
        raise UnsolvableError(
            f"target {target} at or above the partition sum below temperature 1"
        )

    iters = max_iter if max_iter is not None else 12 * prec
    for _ in range(iters):
        if hi - lo <= width_goal:
            return DyadicInterval(
                dyadic_from_fraction(lo, prec, up=False),
                dyadic_from_fraction(hi, prec, up=True),
                prec,
            )
        mid = (lo + hi) / 2
        resolved = False
        for boost in range(4):
            z = zval(mid, boost)
            if z.hi.as_fraction() < target:
                lo = mid
                resolved = True
                break
            if z.lo.as_fraction() > target:
                hi = mid
                resolved = True
                break
        if resolved:
            continue
        # target sits inside Z(mid) at max tightness: clip a window
        # around mid and certify its endpoints directly
        w = width_goal / 2
        cand_lo = max(lo, mid - w)
        cand_hi = min(hi, mid + w)
        if cand_lo > lo and zval(cand_lo).lo.as_fraction() > target:
            hi = cand_lo
            continue
        if cand_hi < hi and zval(cand_hi).hi.as_fraction() < target:
            lo = cand_hi
            continue
        return DyadicInterval(
            dyadic_from_fraction(cand_lo, prec, up=False),
            dyadic_from_fraction(cand_hi, prec, up=True),
            prec,
        )
    raise UnsolvableError(f"bisection for Z = {target} stalled after {iters} iterations")


# ---------------------------------------------------------------------------
# divergence probes
# ---------------------------------------------------------------------------

WEIGHT_NAMES = {"one": Fraction(0), "length": Fraction(1), "length-squared": Fraction(2)}


@dataclass(frozen=True)
class ProbeRow:
    cutoff: int
    n: int | None
    series: DyadicInterval
    z: DyadicInterval
    ratio: DyadicInterval | None  # series/z, e.g. mean length when q = 1


def divergence_probe(
    machine: Machine,
    temp: Fraction,
    weight: str | Fraction,
    cutoffs: Sequence[int],
    prec: int = 64,
    records: Sequence[HaltRecord] | None = None,
    rounds: int | None = None,
) -> list[ProbeRow]:
    """Partial-sum growth table for sum f(|p|) 2^(-|p|/T).

    Lower endpoints are certified lower bounds on the limit whatever
    the temperature; upper endpoints only bound the partial sum.
    """
    q = WEIGHT_NAMES[weight] if isinstance(weight, str) else Fraction(weight)
    if q < 0:
        raise ConfigError(f"weight exponent must be >= 0, got {q}")
    cuts = sorted(set(cutoffs))
    if not cuts:
        raise ConfigError("divergence probe needs at least one cutoff")
    rows: list[ProbeRow] = []
    if isinstance(machine, TableMachine):
        state = SeriesState.empty(machine, temp, q, prec)
        exact_n = True
        nxt = 0
        for l in range(1, cuts[-1] + 1):
            ci = count_interval(machine.rule, l, prec)
            if ci.hi.man != 0:
                if ci.width().man == 0 and ci.lo.exp >= 0:
                    state = _accumulate_length(state, l, ci.lo.man << ci.lo.exp)
                else:
                    exact_n = False
                    term = pow2_frac(l, temp, prec) * ci
                    lq = iv_power(DyadicInterval.point(l, prec), q)
                    state = replace(
                        state,
                        z=state.z + term,
                        w1=state.w1 + term.scale_fraction(Fraction(l)),
                        w2=state.w2 + term.scale_fraction(Fraction(l * l)),
                        wq=state.wq + term * lq,
                    )
            if nxt < len(cuts) and l == cuts[nxt]:
                rows.append(_probe_row(state, l, exact_n, q))
                nxt += 1
        return rows
    if records is None:
        records = dovetail(machine, rounds if rounds is not None else 12)
    state = SeriesState.empty(machine, temp, q, prec)
    nxt = 0
    for rec in records:
        if nxt >= len(cuts):
            break
        state = accumulate(state, rec)
        while nxt < len(cuts) and state.n == cuts[nxt]:
            rows.append(_probe_row(state, state.n, True, q))
            nxt += 1
    # schedule points beyond the enumeration report the final sums
    while nxt < len(cuts):
        rows.append(_probe_row(state, cuts[nxt], True, q))
        nxt += 1
    return rows


def _probe_row(state: SeriesState, cutoff: int, exact_n: bool, q: Fraction) -> ProbeRow:
    ratio = None
    if q != 0 and state.z.lo.man > 0:
        ratio = state.wq / state.z
    return ProbeRow(
        cutoff=cutoff,
        n=state.n if exact_n else None,
        series=state.wq,
        z=state.z,
        ratio=ratio,
    )


def geometric_cutoffs(limit: int) -> list[int]:
    out = []
    c = 1
    while c < limit:
        out.append(c)
        c *= 2
    out.append(limit)
    return out


# ---------------------------------------------------------------------------
# output-entropy partial sums
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EntropyBound:
    machine: str
    weighting: str
    cutoff: int
    outputs: int | None
    lower: Dyadic


def _entropy_raw_table(
    machine: TableMachine, weighting: str, l_cut: int, prec: int
) -> DyadicInterval:
    if machine.output_map is None:
        # index outputs are pairwise distinct, masses exactly 2^-l, and
        # both weightings agree: the sum is exact
        total = _zero_iv(prec)
        for l, c in machine.nonzero_lengths(l_cut):
            total = total + DyadicInterval.from_fraction(
                Fraction(c * l, 1 << l), prec
            )
        return total
    groups: dict[str, Fraction] = {}
    shortest: dict[str, int] = {}
    for w in machine.assign_codewords(l_cut):
        out = machine.output_for(w, 0)
        groups[out] = groups.get(out, Fraction(0)) + Fraction(1, 1 << len(w))
        shortest[out] = min(shortest.get(out, len(w)), len(w))
    remaining = machine.kraft_tail(l_cut, prec).hi.as_fraction()
    vals = groups if weighting == "prob" else {
        s: Fraction(1, 1 << l) for s, l in shortest.items()
    }
    pairs = [(vals[s], groups[s] + remaining) for s in groups]
    return _entropy_from_masses(pairs, prec)


def _entropy_from_masses(
    pairs: Iterable[tuple[Fraction, Fraction]], prec: int
) -> DyadicInterval:
    """Lower bound on -sum m log2 m from (discovered, cap) weight pairs.

    The true weight of each output lies in [discovered, cap]; phi is
    concave, so its minimum over that range sits at an endpoint.
    """
    total = _zero_iv(prec)
    for m, u in pairs:
        if m <= 0:
            continue
        lo_here = phi_fraction(m, prec)
        u = min(u, Fraction(1))
        if u > m:
            cap = phi_fraction(u, prec) if u < 1 else _zero_iv(prec)
            lo = min(lo_here.lo, cap.lo)
            hi = max(lo_here.hi, cap.hi)
            total = total + DyadicInterval(lo, hi, prec)
        else:
            total = total + lo_here
    return total


def shannon_partial(
    machine: Machine,
    weighting: str,
    cutoff: int,
    prec: int = DEFAULT_PRECISION,
    records: Sequence[HaltRecord] | None = None,
    rounds: int | None = None,
) -> EntropyBound:
    """Monotone-in-cutoff lower bound on the output entropy partial sum.

    weighting "prob" uses discovered algorithmic probability mass per
    output; "min-length" uses 2**-(shortest discovered program).  The
    running maximum over a halving subschedule enforces monotonicity.
    """
    if weighting not in ("prob", "min-length"):
        raise ConfigError(f"weighting must be 'prob' or 'min-length', got {weighting!r}")
    if cutoff < 1:
        raise ConfigError("cutoff must be >= 1")
    mh = machine_hash(machine)
    sched = []
    c = cutoff
    while c >= 1:
        sched.append(c)
        c //= 2
    if isinstance(machine, TableMachine):
        best = _ZERO
        for cut in sched:
            val = _entropy_raw_table(machine, weighting, cut, prec).lo
            if val > best:
                best = val
        return EntropyBound(mh, weighting, cutoff, None, best)
    if records is None:
        records = dovetail(machine, rounds if rounds is not None else 12)
    best = _ZERO
    n_outputs = 0
    for cut in sched:
        prefix = [r for r in records if r.index < cut]
        mass: dict[str, Fraction] = {}
        shortest: dict[str, int] = {}
        for r in prefix:
            mass[r.output] = mass.get(r.output, Fraction(0)) + Fraction(1, 1 << r.length)
            shortest[r.output] = min(shortest.get(r.output, r.length), r.length)
        if not mass:
            continue
        undiscovered = max(Fraction(0), Fraction(1) - sum(mass.values()))
        if weighting == "prob":
            pairs = [(m, m + undiscovered) for m in mass.values()]
        else:
            # a shorter program may still appear; 2^-H is capped by the
            # output's reachable probability mass
            pairs = [
                (Fraction(1, 1 << shortest[s]), mass[s] + undiscovered) for s in mass
            ]
        val = _entropy_from_masses(pairs, prec).lo
        if val > best:
            best = val
        n_outputs = n_outputs or len(mass)
    return EntropyBound(mh, weighting, cutoff, n_outputs, best)
