"""Dovetailing order, checkpoint resume, and prefix-free verification.

The oracle re-derives the full emission schedule from first principles:
round r introduces complete programs of length r, and a program is
emitted in the first round whose fuel covers its step count.
"""
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from algothermo.enumeration import (
    HaltRecord,
    bits_to_hex,
    dovetail,
    fuel_at,
    hex_to_bits,
    kraft_sum,
    read_checkpoint,
    verify_prefix_free,
)
from algothermo.errors import ConfigError, ResourceLimitError
from algothermo.machine import builtin


def oracle_schedule(machine, rounds: int, cap: int) -> list[tuple[int, str, str]]:
    """(round, program, output) triples in dovetail emission order."""
    if machine.kind == "table":
        candidates = {l: machine.codewords_at(l) for l in range(1, rounds + 1)}
    else:
        by_len: dict[int, list[str]] = {l: [] for l in range(1, rounds + 1)}
        for p in machine.complete_programs(rounds):
            by_len[len(p)].append(p)
        candidates = by_len
    emitted: set[str] = set()
    out: list[tuple[int, str, str]] = []
    for r in range(1, rounds + 1):
        pool = sorted(
            (p for l in range(1, r + 1) for p in candidates[l] if p not in emitted),
            key=lambda s: (len(s), s),
        )
        for p in pool:
            res = machine.run(p, fuel_at(r, cap))
            if res.halted:
                out.append((r, p, res.output or ""))
                emitted.add(p)
    return out


@pytest.mark.parametrize("name", ["dyadic2", "harmonic", "geometric-half", "sdvm"])
def test_dovetail_matches_oracle(name):
    machine = builtin(name)
    rounds = 12
    records = dovetail(machine, rounds)
    expected = oracle_schedule(machine, rounds, cap=1 << 20)
    assert [(rec.round, rec.program, rec.output) for rec in records] == expected
    assert [rec.index for rec in records] == list(range(len(records)))
    assert verify_prefix_free(rec.program for rec in records) is None
    assert kraft_sum(rec.program for rec in records) <= 1


def test_dovetail_low_fuel_cap_defers_emission():
    vm = builtin("sdvm")
    low = dovetail(vm, 10, cap=2)
    high = dovetail(vm, 10, cap=1 << 20)
    assert {r.program for r in low} <= {r.program for r in high}
    # with fuel pinned at 2, multi-step bodies never appear
    assert all(r.steps <= 2 for r in low)


def test_dovetail_argument_validation(vm):
    with pytest.raises(ConfigError):
        dovetail(vm, 0)
    with pytest.raises(ResourceLimitError):
        dovetail(vm, 12, round_budget=3)


def test_checkpoint_resume_equivalence(tmp_path, vm):
    direct = dovetail(vm, 12)
    path = tmp_path / "halts.log"
    dovetail(vm, 6, checkpoint=path)
    resumed = dovetail(vm, 12, checkpoint=str(path), resume=True)
    assert resumed == direct
    fields, records, done = read_checkpoint(str(path))
    assert done == 12
    assert records == direct


def test_checkpoint_resume_noop_when_ahead(tmp_path, vm):
    path = tmp_path / "halts.log"
    full = dovetail(vm, 10, checkpoint=path)
    again = dovetail(vm, 10, checkpoint=path, resume=True)
    assert again == full


def test_checkpoint_guards(tmp_path, vm, dyadic2):
    path = tmp_path / "halts.log"
    with pytest.raises(ConfigError):
        dovetail(vm, 4, checkpoint=path, resume=True)  # nothing to resume
    dovetail(vm, 4, checkpoint=path)
    with pytest.raises(ConfigError):
        dovetail(dyadic2, 6, checkpoint=path, resume=True)  # wrong machine
    with pytest.raises(ConfigError):
        dovetail(vm, 6, cap=64, checkpoint=path, resume=True)  # cap mismatch


def test_fuel_schedule():
    assert [fuel_at(r) for r in range(1, 6)] == [2, 4, 8, 16, 32]
    assert fuel_at(40, cap=1 << 10) == 1 << 10


@given(st.text(alphabet="01", max_size=64))
def test_hex_roundtrip(bits):
    assert hex_to_bits(bits_to_hex(bits)) == bits


def test_verify_prefix_free_witness():
    assert verify_prefix_free(["0", "10", "11"]) is None
    assert verify_prefix_free(["01", "0"]) == ("0", "01")
    # duplicates are not proper prefixes
    assert verify_prefix_free(["01", "01"]) is None


def test_kraft_sum_exact():
    assert kraft_sum(["0", "10", "11"]) == Fraction(1)
    assert kraft_sum([]) == 0


def test_records_are_value_objects():
    rec = HaltRecord(index=0, round=3, program="0101", output="1", steps=2)
    assert rec.length == 4
