"""Composition counts, the two first-codeword laws, and the sampler.

The oracle enumerates length tuples directly (weight = product of
per-length multiplicities), so Theta, the uniform law, and the
coin-conditioned law are all recomputed without the DP recurrence.
"""
import math
from fractions import Fraction
from itertools import product

import mpmath as mp
import pytest

from algothermo.ensemble import (
    additivity_residual,
    build_theta,
    canonical_distribution,
    channel_law,
    channel_simulate,
    first_codeword_distribution,
    mean_first_length,
    micro_canonical_deviation,
    micro_entropy_temperature,
    solve_energy_temperature,
    spectrum_energy,
)
from algothermo.errors import (
    ConfigError,
    NumericDomainError,
    ResourceLimitError,
    UnsolvableError,
)
from algothermo.machine import ExplicitRule, TableMachine
from algothermo.numeric import Dyadic, DyadicInterval

DYADIC2 = ((1, 1), (2, 1))


def oracle_tuples(counts, n):
    """(lengths tuple, multiplicity weight) pairs over n codewords."""
    lengths = [l for l, _ in counts]
    mult = dict(counts)
    for tup in product(lengths, repeat=n):
        w = 1
        for l in tup:
            w *= mult[l]
        yield tup, w


def oracle_theta(counts, length, n):
    return sum(w for tup, w in oracle_tuples(counts, n) if sum(tup) == length)


def oracle_first_law(counts, length, n, delta=0, coin=False):
    """First-codeword marginal; coin=True weighs tuples by 2**-total."""
    tot = {}
    z = Fraction(0)
    for tup, w in oracle_tuples(counts, n):
        t = sum(tup)
        if not length <= t <= length + delta:
            continue
        mass = Fraction(w, 1 << t) if coin else Fraction(w)
        z += mass
        tot[tup[0]] = tot.get(tup[0], Fraction(0)) + mass
    return {l: m / z for l, m in tot.items()}


def kraft_ok(counts):
    return sum(Fraction(c, 1 << l) for l, c in counts) <= 1


def small_spectra():
    """Every Kraft-admissible explicit spectrum on lengths 1..4."""
    out = []
    for c1 in range(3):
        for c2 in range(5):
            for c3 in range(5):
                for c4 in range(5):
                    counts = tuple(
                        (l, c) for l, c in ((1, c1), (2, c2), (3, c3), (4, c4)) if c
                    )
                    if counts and kraft_ok(counts):
                        out.append(counts)
    return out


def test_theta_matches_brute_force_everywhere():
    for counts in small_spectra():
        table = build_theta(counts, n_max=6, l_max=24)
        for n in range(7):
            for length in range(25):
                assert table.theta_exact(length, n) == oracle_theta(counts, length, n)


def test_first_codeword_law_matches_brute_force():
    for counts in (DYADIC2, ((1, 1), (3, 2)), ((2, 3), (4, 2))):
        table = build_theta(counts, n_max=5, l_max=20)
        for n in (2, 3, 5):
            for length in range(n, 16):
                if table.theta(length, n) == 0:
                    continue
                got = first_codeword_distribution(table, length, n)
                assert got == oracle_first_law(counts, length, n)
                assert sum(got.values()) == 1


def test_windowed_theta_and_guards():
    table = build_theta(DYADIC2, n_max=4, l_max=10, delta_l=2)
    for length in range(4, 8):
        assert table.theta(length, 3) == sum(
            table.theta_exact(t, 3) for t in (length, length + 1, length + 2)
        )
    with pytest.raises(ConfigError):
        table.theta(9, 3)  # window reaches past the table
    with pytest.raises(ConfigError):
        table.theta_exact(4, 9)


def test_dyadic2_theta_closed_form():
    table = build_theta(DYADIC2, n_max=8, l_max=20)
    for n in range(1, 9):
        for length in range(21):
            k = length - n
            expected = math.comb(n, k) if 0 <= k <= n else 0
            assert table.theta_exact(length, n) == expected


def test_micro_entropy_and_temperature_pins():
    table = build_theta(DYADIC2, n_max=3, l_max=6)
    point = micro_entropy_temperature(table, 4, 3)
    assert point.theta == 3
    mp.mp.dps = 40
    assert abs(point.entropy.mid_float() - float(mp.log(3, 2))) < 1e-12
    assert point.entropy.width().as_fraction() <= Fraction(1, 1 << 100)
    # T = 2 / log2(Theta(5)/Theta(3)) = 2 / log2(3)
    pin = Fraction("1.26185950714291487419905422868552")
    slack = Fraction(1, 10**25)
    assert point.temperature.lo.as_fraction() <= pin + slack
    assert pin - slack <= point.temperature.hi.as_fraction()
    assert not point.infinite_temperature


def test_micro_temperature_edges():
    # single length: Theta(L +- 1) = 0, no slope to read
    table = build_theta(((2, 1),), n_max=3, l_max=8)
    point = micro_entropy_temperature(table, 6, 3)
    assert point.temperature is None and not point.infinite_temperature
    with pytest.raises(NumericDomainError):
        micro_entropy_temperature(table, 5, 3)
    # flat neighbors (the binomial peak) read as the infinite-T edge
    wide = build_theta(DYADIC2, n_max=2, l_max=6)
    flat = micro_entropy_temperature(wide, 3, 2)
    assert flat.infinite_temperature and flat.temperature is None
    assert flat.inv_temperature.contains(Fraction(0))


def test_canonical_distribution_pins():
    dist = canonical_distribution(DYADIC2, Fraction(1))
    assert dist[1].contains(Fraction(2, 3)) and dist[2].contains(Fraction(1, 3))
    dist = canonical_distribution(DYADIC2, Fraction(1, 2))
    assert dist[1].contains(Fraction(4, 5)) and dist[2].contains(Fraction(1, 5))


def test_canonical_distribution_negative_temperature():
    dist = canonical_distribution(DYADIC2, Fraction(-1))
    assert dist[1].contains(Fraction(1, 3)) and dist[2].contains(Fraction(2, 3))
    with pytest.raises(NumericDomainError):
        canonical_distribution(DYADIC2, Fraction(0))
    straddle = DyadicInterval(Dyadic(-1, 0), Dyadic(1, 0), 128)
    with pytest.raises(NumericDomainError):
        canonical_distribution(DYADIC2, straddle)


def test_spectrum_energy_and_solver():
    e1 = spectrum_energy(DYADIC2, Fraction(1), 128)
    assert e1.contains(Fraction(4, 3))
    iv = solve_energy_temperature(DYADIC2, Fraction(4, 3))
    assert iv.contains(Fraction(1))
    matched = spectrum_energy(DYADIC2, iv.lo.as_fraction(), 128)
    assert matched.lo.as_fraction() <= Fraction(4, 3) <= spectrum_energy(
        DYADIC2, iv.hi.as_fraction(), 128
    ).hi.as_fraction()


def test_solve_energy_temperature_edges():
    with pytest.raises(UnsolvableError):
        solve_energy_temperature(DYADIC2, Fraction(1))  # l_min
    with pytest.raises(UnsolvableError):
        solve_energy_temperature(DYADIC2, Fraction(3, 2))  # count mean
    with pytest.raises(UnsolvableError):
        solve_energy_temperature(DYADIC2, Fraction(7, 4))


def test_deviation_report_pins():
    table = build_theta(DYADIC2, n_max=3, l_max=6)
    rep = micro_canonical_deviation(table, 4, 3)
    assert rep.micro == {1: Fraction(2, 3), 2: Fraction(1, 3)}
    assert rep.energy_micro == Fraction(4, 3)
    pin = Fraction("0.0326920704511053134303898374196")
    slack = Fraction(1, 10**25)
    assert rep.deviation_at_table_t.lo.as_fraction() <= pin + slack
    assert pin - slack <= rep.deviation_at_table_t.hi.as_fraction()
    # the energy-matched temperature reproduces the micro law exactly here
    assert rep.matched_unsolvable is None
    assert rep.deviation_at_matched_t.hi.as_fraction() <= Fraction(1, 1 << 50)
    assert rep.matched_temperature.contains(Fraction(1))
    assert rep.free_energy is not None


def test_deviation_unsolvable_edge_is_reported():
    # L/N at the minimum word length leaves no canonical match
    table = build_theta(DYADIC2, n_max=3, l_max=6)
    rep = micro_canonical_deviation(table, 3, 3)
    assert rep.matched_unsolvable is not None
    assert rep.deviation_at_matched_t is None


def test_additivity_residual_exact_small_case():
    table = build_theta(DYADIC2, n_max=2, l_max=6)
    res = additivity_residual(table, 3, 2)
    # S(3,2)=1, the two single-word terms vanish
    assert res.contains(Fraction(1))
    with pytest.raises(ConfigError):
        additivity_residual(table, 3, 1)


def test_additivity_residual_shrinks_per_word():
    per_word = []
    for n in (12, 24, 48):
        length = 4 * n // 3
        table = build_theta(DYADIC2, n_max=n, l_max=length + 2)
        res = additivity_residual(table, length, n)
        per_word.append(res.mid_float() / n)
    assert per_word[0] > per_word[1] > per_word[2]


def test_window_width_insensitivity_per_word_entropy():
    """S(L,N)/N across window widths 0..2 tightens on the L/N = 4/3 line.

    The per-word spread drops below 1% only past N ~ 316 on this
    spectrum (2.56% at N=120), so the threshold is pinned at N=330.
    """

    def spread(n: int) -> Fraction:
        length = 4 * n // 3
        per_word = []
        for dl in (0, 1, 2):
            table = build_theta(DYADIC2, n_max=n, l_max=length + dl + 1, delta_l=dl)
            s = micro_entropy_temperature(table, length, n).entropy
            mid = (s.lo.as_fraction() + s.hi.as_fraction()) / 2
            per_word.append(mid / n)
        return (max(per_word) - min(per_word)) / min(per_word)

    wide, tight = spread(120), spread(330)
    assert abs(wide - Fraction("0.0256073910710503")) < Fraction(1, 10**10)
    assert tight < wide
    assert tight < Fraction(1, 100)


def test_build_theta_guards(harmonic):
    with pytest.raises(ConfigError):
        build_theta(DYADIC2, n_max=0, l_max=10)
    with pytest.raises(ConfigError):
        build_theta(DYADIC2, n_max=4, l_max=3)  # cannot fit four words
    with pytest.raises(ConfigError):
        build_theta(((1, 3),), n_max=2, l_max=8)  # Kraft violation
    with pytest.raises(ConfigError):
        build_theta((), n_max=2, l_max=8)
    with pytest.raises(ConfigError):
        build_theta(harmonic, n_max=2, l_max=8)  # infinite spectrum
    with pytest.raises(ResourceLimitError):
        build_theta(DYADIC2, n_max=100, l_max=200, max_cells=100)


def test_table_from_machine(dyadic2):
    table = build_theta(dyadic2, n_max=3, l_max=6)
    assert table.counts == DYADIC2
    assert table.machine == "2585f1d72c31"
    assert len(table.digest()) == 16
    other = build_theta(dyadic2, n_max=3, l_max=7)
    assert other.digest() != table.digest()


def test_first_law_validation():
    table = build_theta(DYADIC2, n_max=3, l_max=6)
    with pytest.raises(ConfigError):
        first_codeword_distribution(table, 4, 1)
    with pytest.raises(NumericDomainError):
        first_codeword_distribution(table, 2, 3)  # below N * l_min


# ---------------------------------------------------------------------------
# coin-conditioned law and the sampler
# ---------------------------------------------------------------------------


def test_channel_law_matches_oracle_and_pins():
    table = build_theta(DYADIC2, n_max=3, l_max=6, delta_l=1)
    law = channel_law(table, 4, 3)
    assert law == oracle_first_law(DYADIC2, 4, 3, delta=1, coin=True)
    assert law == {1: Fraction(5, 9), 2: Fraction(4, 9)}
    # at delta_l = 0 the coin law collapses to the uniform one
    flat = build_theta(DYADIC2, n_max=3, l_max=6)
    assert channel_law(flat, 4, 3) == first_codeword_distribution(flat, 4, 3)


def test_channel_law_guards():
    table = build_theta(DYADIC2, n_max=3, l_max=6, delta_l=1)
    with pytest.raises(ConfigError):
        channel_law(table, 6, 3)  # window off the table
    with pytest.raises(ConfigError):
        channel_law(table, 4, 1)
    with pytest.raises(NumericDomainError):
        channel_law(table, 0, 3)  # window [0, 1] below three words


def test_mean_first_length():
    assert mean_first_length({1: Fraction(2, 3), 2: Fraction(1, 3)}) == Fraction(4, 3)


def test_channel_simulate_deterministic(dyadic2):
    a = channel_simulate(dyadic2, 3, 4, samples=20_000, seed=7)
    b = channel_simulate(dyadic2, 3, 4, samples=20_000, seed=7)
    assert (a.accepted, a.tallies) == (b.accepted, b.tallies)
    assert a.generator == "numpy.random.PCG64"
    c = channel_simulate(dyadic2, 3, 4, samples=20_000, seed=8)
    assert (c.accepted, c.tallies) != (a.accepted, a.tallies)
    sharded = channel_simulate(dyadic2, 3, 4, samples=20_000, seed=7, shards=4)
    again = channel_simulate(dyadic2, 3, 4, samples=20_000, seed=7, shards=4)
    assert sharded.tallies == again.tallies


def test_channel_simulate_matches_uniform_law(dyadic2):
    rep = channel_simulate(dyadic2, 3, 4, samples=200_000, seed=11)
    p = rep.empirical[1]
    sigma = math.sqrt((2 / 3) * (1 / 3) / rep.accepted)
    assert abs(p - 2 / 3) <= 4 * sigma
    assert rep.warning is None


def test_channel_simulate_matches_coin_law_in_window(dyadic2):
    rep = channel_simulate(dyadic2, 3, 4, samples=200_000, seed=13, delta_l=1)
    p = rep.empirical[1]
    law = 5 / 9  # coin-conditioned, not the uniform 1/2
    sigma = math.sqrt(law * (1 - law) / rep.accepted)
    assert abs(p - law) <= 4 * sigma


def test_channel_complete_code_always_accepts():
    m = TableMachine("complete", ExplicitRule(((1, 1), (2, 2))))
    rep = channel_simulate(m, 2, 2, samples=5_000, seed=3, delta_l=2)
    assert rep.accepted == rep.samples
    assert rep.acceptance_rate == 1.0


def test_channel_zero_acceptance_warns(dyadic2):
    rep = channel_simulate(dyadic2, 1, 7, samples=500, seed=1)
    assert rep.accepted == 0
    assert rep.empirical == {}
    assert "zero accepted" in rep.warning


def test_channel_simulate_validation(dyadic2):
    with pytest.raises(ConfigError):
        channel_simulate(dyadic2, 0, 4, samples=10, seed=0)
    with pytest.raises(ConfigError):
        channel_simulate(dyadic2, 2, 4, samples=0, seed=0)
    with pytest.raises(ConfigError):
        channel_simulate(dyadic2, 2, 4, samples=10, seed=0, delta_l=-1)
