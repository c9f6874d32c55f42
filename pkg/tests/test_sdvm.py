"""Self-delimiting program format and the three-bit opcode VM."""
import itertools
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from algothermo import sdvm
from algothermo.enumeration import verify_prefix_free
from algothermo.errors import ConfigError
from algothermo.machine import builtin

# opcode values, mirrored from the module contract
EMIT0, EMIT1, INC, DEC, JBNZ, DBL, HALT, LOOP = range(8)


def body_bits(*ops: int) -> str:
    return "".join(format(op, "03b") for op in ops)


def machine_program(*ops: int) -> str:
    body = body_bits(*ops)
    return "1" + sdvm.gamma_encode(len(body) + 1) + body


def test_gamma_encode_pins():
    assert sdvm.gamma_encode(1) == "1"
    assert sdvm.gamma_encode(2) == "010"
    assert sdvm.gamma_encode(3) == "011"
    assert sdvm.gamma_encode(4) == "00100"
    assert sdvm.gamma_encode(7) == "00111"
    with pytest.raises(ValueError):
        sdvm.gamma_encode(0)


@given(st.integers(1, 10**6))
def test_gamma_roundtrip_through_parse(n):
    # prepend a mode bit and n-1 payload bits; parse must recover the split
    payload = "1" * (n - 1) if n - 1 <= 64 else None
    if payload is None:
        return
    bits = "0" + sdvm.gamma_encode(n) + payload
    got = sdvm.parse(bits)
    assert got == (0, payload, len(bits))


def test_parse_incomplete_and_trailing():
    assert sdvm.parse("") is None
    assert sdvm.parse("0") is None
    assert sdvm.parse("00") is None
    assert sdvm.parse("0010") is None  # payload missing
    mode, payload, consumed = sdvm.parse("00100" + "111")
    assert (mode, payload, consumed) == (0, "0", 5)  # trailing bits ignored


def test_is_complete_matches_exhaustive_enumeration():
    complete = set(sdvm.iter_programs(11))
    for length in range(0, 12):
        for v in range(1 << length):
            s = format(v, f"0{length}b") if length else ""
            assert sdvm.is_complete(s) == (s in complete)


def test_programs_prefix_free_and_counted():
    progs = list(sdvm.iter_programs(14))
    assert len(progs) == sdvm.count_programs(14)
    assert len(set(progs)) == len(progs)
    assert verify_prefix_free(progs) is None
    lens = [len(p) for p in progs]
    assert lens == sorted(lens)


def test_complete_programs_mode_order():
    rows = list(sdvm.complete_programs(10))
    for total, group in itertools.groupby(rows, key=lambda r: r[0]):
        modes = [mode for _, mode, _ in group]
        assert modes == sorted(modes)


def test_literal_program_roundtrip():
    vm = builtin("sdvm")
    for s in ("", "0", "1", "0110", "1" * 9):
        p = sdvm.literal_program(s)
        res = vm.run(p, fuel=4)
        assert res.halted and res.output == s


def test_literal_bound_exhaustive():
    # H(s) <= |s| + 2*log2|s| + LITERAL_SLACK, shown constructively
    assert sdvm.LITERAL_SLACK == 4
    for n in range(1, 9):
        for v in range(1 << n):
            s = format(v, f"0{n}b")
            p = sdvm.literal_program(s)
            assert len(p) == n + 2 * math.floor(math.log2(n + 1)) + 2
            assert len(p) <= n + 2 * math.log2(n) + sdvm.LITERAL_SLACK


def test_vm_emits_and_halts():
    vm = builtin("sdvm")
    res = vm.run(machine_program(EMIT1, EMIT0, HALT), fuel=16)
    assert res.halted and res.output == "10" and res.steps == 3
    # falling off the end also halts
    res = vm.run(machine_program(EMIT1, EMIT0), fuel=16)
    assert res.halted and res.output == "10"


def test_vm_counting_loop():
    vm = builtin("sdvm")
    # a = 4, then emit/dec/jump-back-two until a hits zero
    prog = machine_program(INC, DBL, DBL, EMIT1, DEC, JBNZ)
    res = vm.run(prog, fuel=64)
    assert res.halted and res.output == "1111"


def test_vm_divergence_is_flagged():
    vm = builtin("sdvm")
    res = vm.run(machine_program(LOOP), fuel=1 << 12)
    assert res.status == "exhausted" and res.never_halts
    # (pc, A) state revisit: jump back and forth without touching A
    res = vm.run(machine_program(DEC, DEC, JBNZ, INC, JBNZ), fuel=1 << 12)
    assert res.status == "exhausted"


def test_vm_fuel_exhaustion_is_not_a_verdict():
    vm = builtin("sdvm")
    prog = machine_program(INC, DBL, DBL, EMIT1, DEC, JBNZ)
    res = vm.run(prog, fuel=3)
    assert res.status == "exhausted" and not res.never_halts
    assert vm.run(prog, fuel=64).halted


def test_malformed_programs():
    vm = builtin("sdvm")
    assert vm.run("0").status == "malformed"  # incomplete parse
    assert vm.run("00100" + "1").status == "malformed"  # trailing bits
    assert vm.run("1" + sdvm.gamma_encode(3) + "01").status == "malformed"  # 2-bit body
    with pytest.raises(ConfigError):
        vm.run("012")


def test_empty_machine_body_halts_empty():
    vm = builtin("sdvm")
    res = vm.run("11", fuel=1)
    assert res.halted and res.output == ""
