"""Spectrum rules, canonical codeword allocation, and machine loading."""
import json
import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from algothermo.errors import ConfigError, ResourceLimitError
from algothermo.machine import (
    BUILTIN_NAMES,
    ExplicitRule,
    GeometricRule,
    HarmonicRule,
    StepMachine,
    TableMachine,
    build_machine,
    builtin,
    count_interval,
    load_machine,
    machine_hash,
)

HASH_PINS = {
    "dyadic2": "2585f1d72c31",
    "harmonic": "7f39e8e8a915",
    "geometric-half": "b5f5af46de76",
    "sdvm": "18d140f7cb7b",
}


def test_builtin_hashes_are_stable():
    for name, h in HASH_PINS.items():
        assert machine_hash(builtin(name)) == h


def test_explicit_rule_validation():
    ExplicitRule(((1, 1), (2, 1)))
    with pytest.raises(ConfigError):
        ExplicitRule(((2, 1), (1, 1)))  # not increasing
    with pytest.raises(ConfigError):
        ExplicitRule(((1, 1), (1, 1)))  # duplicate length
    with pytest.raises(ConfigError):
        ExplicitRule(((3, 9),))  # count above 2**3
    with pytest.raises(ConfigError):
        ExplicitRule(((2, -1),))


def test_geometric_rule_validation_and_counts():
    with pytest.raises(ConfigError):
        GeometricRule(Fraction(1), 0)
    with pytest.raises(ConfigError):
        GeometricRule(Fraction(1, 2), -1)
    rule = GeometricRule(Fraction(1, 2), 2)
    # floor(2**(l/2 - 2)) = isqrt(2**(l-4)) once the exponent is whole
    for l in range(1, 64):
        if l >= 4:
            assert rule.count(l) == math.isqrt(1 << (l - 4))
        else:
            assert rule.count(l) == 0


def test_harmonic_rule_counts():
    rule = HarmonicRule()
    assert rule.count(0) == 0
    for l in range(1, 40):
        assert rule.count(l) == (1 << l) // ((l + 1) * (l + 1))
    assert rule.max_length() is None
    assert rule.majorant() == (Fraction(1), Fraction(1))


@given(st.integers(1, 4200))
def test_count_interval_contains_true_count(l):
    for rule in (HarmonicRule(), GeometricRule(Fraction(1, 2), 2)):
        iv = count_interval(rule, l)
        assert iv.contains(Fraction(rule.count(l)))


def test_count_interval_exact_below_cutoff(harmonic):
    iv = count_interval(harmonic.rule, 100)
    assert iv.width().is_zero()
    big = count_interval(harmonic.rule, 5000)
    assert not big.width().is_zero()
    assert big.contains(Fraction(harmonic.rule.count(5000)))


# ---------------------------------------------------------------------------
# codeword allocation
# ---------------------------------------------------------------------------


def test_dyadic2_codewords(dyadic2):
    assert dyadic2.assign_codewords(4) == ["0", "10"]
    assert dyadic2.codewords_at(2) == ["10"]
    assert dyadic2.codeword_index("0") == 0
    assert dyadic2.codeword_index("10") == 1
    assert dyadic2.codeword_index("11") is None
    assert dyadic2.codeword_index("1") is None
    assert dyadic2.codeword_index("") is None


def test_harmonic_first_codewords(harmonic):
    # first nonzero levels: one word at length 6, two at length 7
    assert harmonic.assign_codewords(7) == ["000000", "0000010", "0000011"]
    words = harmonic.assign_codewords(12)
    # global indices are consecutive in (length, lex) order
    for i, w in enumerate(words):
        assert harmonic.codeword_index(w) == i
    assert sorted(words, key=lambda w: (len(w), w)) == words


@given(st.integers(1, 14))
def test_codewords_level_disjoint_prefix_free(l_max):
    m = builtin("geometric-half")
    words = m.assign_codewords(l_max)
    assert len(set(words)) == len(words)
    byset = set(words)
    for w in words:
        for i in range(1, len(w)):
            assert w[:i] not in byset


def test_run_semantics(dyadic2):
    res = dyadic2.run("10", fuel=5)
    assert res.halted and res.output == "1" and res.steps == 1
    assert dyadic2.run("11").status == "malformed"
    with pytest.raises(ConfigError):
        dyadic2.run("10", fuel=0)
    with pytest.raises(ConfigError):
        dyadic2.run("1x2")


def test_index_outputs_are_bare_binary(harmonic):
    words = harmonic.assign_codewords(9)
    outs = [harmonic.run(w).output for w in words]
    assert outs == [bin(i)[2:] for i in range(len(words))]


def test_output_map_machine():
    m = build_machine(
        {
            "kind": "table",
            "name": "mapped",
            "rule": {"name": "explicit", "counts": [[1, 1], [2, 1]]},
            "output_rule": {"map": {"0": "11", "10": ""}},
        }
    )
    assert m.run("0").output == "11"
    assert m.run("10").output == ""
    with pytest.raises(ConfigError):
        m.output_for("111", 0)


def test_kraft_partial_and_tail(harmonic, geohalf, dyadic2):
    assert dyadic2.kraft_partial(2) == Fraction(3, 4)
    for m in (harmonic, geohalf):
        part30 = m.kraft_partial(30)
        part60 = m.kraft_partial(60)
        assert part60 <= 1
        tail = m.kraft_tail(30)
        assert tail.lo.is_zero()
        assert part60 - part30 <= tail.hi.as_fraction()
    assert dyadic2.kraft_tail(2).hi.is_zero()


def test_kraft_violation_detected():
    m = TableMachine("bad", ExplicitRule(((1, 2), (2, 1))))
    with pytest.raises(ConfigError):
        m.assign_codewords(2)
    # length 1 exhausts the tree, so nothing at length 2 is a codeword
    assert m.codeword_index("10") is None
    worse = TableMachine("worse", ExplicitRule(((1, 2), (2, 3))))
    with pytest.raises(ConfigError):
        worse.codeword_index("100")


def test_codeword_budget():
    m = builtin("harmonic")
    with pytest.raises(ResourceLimitError):
        m.assign_codewords(40, budget=100)
    with pytest.raises(ResourceLimitError):
        m.codewords_at(40, budget=10)


def test_nonzero_lengths(dyadic2, harmonic):
    assert list(dyadic2.nonzero_lengths(10)) == [(1, 1), (2, 1)]
    got = dict(harmonic.nonzero_lengths(10))
    assert got == {6: 1, 7: 2, 8: 3, 9: 5, 10: 8}


# ---------------------------------------------------------------------------
# construction and loading
# ---------------------------------------------------------------------------


def test_build_machine_errors():
    with pytest.raises(ConfigError):
        build_machine({"kind": "tape"})
    with pytest.raises(ConfigError):
        build_machine({"kind": "table", "rule": "harmonic"})
    with pytest.raises(ConfigError):
        build_machine({"kind": "table", "rule": {"name": "fibonacci"}})
    with pytest.raises(ConfigError):
        build_machine({"kind": "table", "rule": {"name": "explicit", "counts": 3}})
    with pytest.raises(ConfigError):
        build_machine({"kind": "table", "rule": {"name": "geometric", "beta": "3/2"}})
    with pytest.raises(ConfigError):
        build_machine({"kind": "table", "rule": {"name": "geometric", "beta": None}})
    with pytest.raises(ConfigError):
        build_machine(
            {"kind": "table", "rule": {"name": "harmonic"}, "output_rule": {"m": {}}}
        )


def test_geometric_auto_shift_keeps_kraft():
    m = build_machine(
        {"kind": "table", "name": "g", "rule": {"name": "geometric", "beta": "1/2"}}
    )
    assert m.rule.shift == 2
    assert m.kraft_partial(200) <= 1


def test_step_machine_describe(vm):
    d = vm.describe()
    assert d["kind"] == "step"
    assert isinstance(vm, StepMachine)
    assert build_machine({"kind": "step", "name": "v2"}).name == "v2"


def test_load_machine(tmp_path):
    for name in BUILTIN_NAMES:
        assert load_machine(name).name == name
    spec = {
        "kind": "table",
        "name": "file-machine",
        "rule": {"name": "explicit", "counts": [[2, 3]]},
    }
    p = tmp_path / "m.json"
    p.write_text(json.dumps(spec))
    m = load_machine(str(p))
    assert m.name == "file-machine"
    assert m.spectrum_count(2) == 3
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    with pytest.raises(ConfigError):
        load_machine(str(bad))
    with pytest.raises(ConfigError):
        load_machine("no-such-machine")


def test_machine_hash_tracks_structure(dyadic2):
    twin = build_machine(json.loads(json.dumps(dyadic2.describe())))
    assert machine_hash(twin) == machine_hash(dyadic2)
    other = build_machine(
        {"kind": "table", "name": "dyadic2",
         "rule": {"name": "explicit", "counts": [[1, 1], [3, 1]]}}
    )
    assert machine_hash(other) != machine_hash(dyadic2)
