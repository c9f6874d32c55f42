"""A small self-delimiting virtual machine executed in counted steps.

Program format (version tag ``sdvm-1``)
----------------------------------------

A program is a finite bit string::

    mode(1 bit)  gamma(n)  payload(n-1 bits)

``gamma(n)`` is the Elias gamma code of ``n >= 1``: for ``k =
floor(log2 n)`` it is ``k`` zeros followed by the ``k+1``-bit binary
form of ``n``.  The payload length is ``n - 1``, so the empty payload
is encodable.  Because the header determines the payload length, at
most one prefix of any bit stream parses completely: the domain is
prefix-free by construction.

``mode 0`` (literal): the machine halts in one step and outputs the
payload verbatim.  The program length is ``|s| + 2*floor(log2(|s|+1))
+ 2``, which is bounded by ``|s| + 2*log2 |s| + LITERAL_SLACK`` for
every nonempty ``s``.

``mode 1`` (machine): the payload must split into whole 3-bit opcodes
(otherwise the string is rejected as malformed) and drives a one
register machine.  Register ``A`` holds an unbounded nonnegative
integer, ``O`` is the output bit list, ``pc`` the instruction index.
One executed instruction costs one fuel step; reaching the end of the
body (or HALT) costs the final step.  The empty body halts in one step
with empty output.

=====  =====  ==========================================================
bits   name   effect
=====  =====  ==========================================================
000    EMIT0  append 0 to the output
001    EMIT1  append 1 to the output
010    INC    A += 1
011    DEC    A -= 1, saturating at 0
100    JBNZ   if A != 0, continue 2 instructions back (clamped to 0)
101    DBL    A *= 2
110    HALT   stop now
111    LOOP   spin forever on this instruction
=====  =====  ==========================================================

The machine is deterministic.  Control depends only on ``(pc, A)``, so
a repeated ``(pc, A)`` pair proves the program never halts; ``execute``
reports that as ``diverged`` so enumeration schedulers can stop
re-probing such programs.
"""
from __future__ import annotations

from typing import Iterator

VM_VERSION = "sdvm-1"
LITERAL_SLACK = 4

_EMIT0, _EMIT1, _INC, _DEC, _JBNZ, _DBL, _HALT, _LOOP = range(8)
_CYCLE_SET_CAP = 4096


def gamma_encode(n: int) -> str:
    """Elias gamma code of n >= 1."""
    if n < 1:
        raise ValueError(f"gamma code needs n >= 1, got {n}")
    body = bin(n)[2:]
    return "0" * (len(body) - 1) + body


def parse(bits: str) -> tuple[int, str, int] | None:
    """Split one program off the front of a bit string.

    Returns (mode, payload, consumed) or None when the string ends
    before the parse completes.  Trailing bits past ``consumed`` are
    the caller's concern.
    """
    if not bits:
        return None
    mode = 1 if bits[0] == "1" else 0
    i = 1
    zeros = 0
    while i < len(bits) and bits[i] == "0":
        zeros += 1
        i += 1
    if i >= len(bits):
        return None
    # the terminating 1 plus `zeros` more bits form n
    if i + zeros >= len(bits):
        return None
    n = int("1" + bits[i + 1 : i + 1 + zeros], 2)
    i += 1 + zeros
    payload_len = n - 1
    if i + payload_len > len(bits):
        return None
    return mode, bits[i : i + payload_len], i + payload_len


def is_complete(bits: str) -> bool:
    """True when bits is exactly one well-formed program."""
    got = parse(bits)
    if got is None:
        return False
    mode, payload, consumed = got
    if consumed != len(bits):
        return False
    if mode == 1 and len(payload) % 3 != 0:
        return False
    return True


def literal_program(s: str) -> str:
    """The mode-0 program that outputs s."""
    return "0" + gamma_encode(len(s) + 1) + s


def execute(body: str, fuel: int) -> tuple[str, str | None, int | None]:
    """Run a machine-mode body for up to `fuel` steps.

    Returns (status, output, steps) with status one of "halted",
    "exhausted", "diverged".
    """
    code = [int(body[i : i + 3], 2) for i in range(0, len(body), 3)]
    out: list[str] = []
    a = 0
    pc = 0
    steps = 0
    end = len(code)
    seen: set[tuple[int, int]] = set()
    while True:
        if pc >= end:
            steps += 1
            if steps > fuel:
                return "exhausted", None, None
            return "halted", "".join(out), steps
        if steps >= fuel:
            return "exhausted", None, None
        state = (pc, a)
        if state in seen:
            return "diverged", None, None
        if len(seen) < _CYCLE_SET_CAP:
            seen.add(state)
        op = code[pc]
        steps += 1
        if op == _EMIT0:
            out.append("0")
            pc += 1
        elif op == _EMIT1:
            out.append("1")
            pc += 1
        elif op == _INC:
            a += 1
            pc += 1
        elif op == _DEC:
            if a:
                a -= 1
            pc += 1
        elif op == _JBNZ:
            pc = max(pc - 2, 0) if a else pc + 1
        elif op == _DBL:
            a *= 2
            pc += 1
        elif op == _HALT:
            return "halted", "".join(out), steps
        else:  # LOOP
            return "diverged", None, None


def _gamma_len(n: int) -> int:
    return 2 * (n.bit_length() - 1) + 1


def complete_programs(max_len: int) -> Iterator[tuple[int, int, int]]:
    """Yield (total_len, mode, payload_len) groups in (length, lex) order.

    For a fixed mode and total length at most one payload length fits,
    since total = n + 2*floor(log2 n) + 2 is strictly increasing in n.
    Mode 0 sorts before mode 1 because the mode bit leads.
    """
    for total in range(2, max_len + 1):
        for mode in (0, 1):
            n = 1
            while True:
                need = 1 + _gamma_len(n) + (n - 1)
                if need > total:
                    break
                if need == total:
                    if mode == 0 or (n - 1) % 3 == 0:
                        yield total, mode, n - 1
                    break
                n += 1


def iter_programs(max_len: int) -> Iterator[str]:
    """All syntactically complete programs of length <= max_len,
    in (length, lexicographic) order."""
    for total, mode, plen in complete_programs(max_len):
        head = ("1" if mode else "0") + gamma_encode(plen + 1)
        if plen == 0:
            yield head
            continue
        for v in range(1 << plen):
            yield head + format(v, f"0{plen}b")


def count_programs(max_len: int) -> int:
    """Number of syntactically complete programs of length <= max_len."""
    return sum(1 << plen for _, _, plen in complete_programs(max_len))
