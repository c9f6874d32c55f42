"""Dovetailed domain enumeration with resumable checkpoints.

Round ``r`` considers every syntactically complete program of length at
most ``r`` and runs it for ``B(r) = min(2**r, cap)`` steps.  A program
is emitted exactly once, in the first round whose fuel lets it halt.
Within a round, newly halting programs are ordered by (length,
lexicographic), so for a table machine the emission order coincides
with the canonical codeword order.

The naive schedule reruns everything each round; this implementation
keeps the same observable sequence while skipping programs that already
halted, programs the VM proved divergent, and reruns whose fuel would
not grow.

Checkpoint format: a header line, a column header, then one CSV record
per line.  A ``#done,<r>`` sentinel follows each completed round, so a
file cut off mid-round resumes by replaying that round::

    machine=<hash>,cap=<fuel cap>,version=1
    round,length,bits,steps,output_hex
    2,2,01,1,1
    #done,1
    ...

Outputs are arbitrary bit strings including the empty one, so the hex
column carries ``hex(int('1' + bits, 2))``; the sentinel bit preserves
leading zeros and emptiness.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ConfigError, ResourceLimitError
from .machine import Machine, StepMachine, TableMachine, machine_hash

DEFAULT_FUEL_CAP = 1 << 20
DEFAULT_ROUND_BUDGET = 1 << 22


@dataclass(frozen=True)
class HaltRecord:
    """One halting program, in emission order."""

    index: int
    round: int
    program: str
    output: str
    steps: int

    @property
    def length(self) -> int:
        return len(self.program)


def fuel_at(round_: int, cap: int = DEFAULT_FUEL_CAP) -> int:
    return min(1 << round_, cap)


def bits_to_hex(bits: str) -> str:
    return format(int("1" + bits, 2), "x")


def hex_to_bits(h: str) -> str:
    return bin(int(h, 16))[3:]


def verify_prefix_free(programs: Iterable[str]) -> tuple[str, str] | None:
    """None when no program is a proper prefix of another, else a
    witness pair (shorter, longer)."""
    seen: set[str] = set()
    for p in sorted(programs, key=lambda s: (len(s), s)):
        for i in range(1, len(p)):
            if p[:i] in seen:
                return p[:i], p
        if p in seen:
            continue
        seen.add(p)
    return None


def kraft_sum(programs: Iterable[str]) -> Fraction:
    """Exact sum of 2**-|p|."""
    return sum((Fraction(1, 1 << len(p)) for p in programs), Fraction(0))


def _new_candidates(machine: Machine, length: int) -> list[str]:
    if isinstance(machine, TableMachine):
        return machine.codewords_at(length)
    assert isinstance(machine, StepMachine)
    from . import sdvm

    out = []
    for total, mode, plen in sdvm.complete_programs(length):
        if total != length:
            continue
        head = ("1" if mode else "0") + sdvm.gamma_encode(plen + 1)
        if plen == 0:
            out.append(head)
        else:
            out.extend(head + format(v, f"0{plen}b") for v in range(1 << plen))
    return out


class _CheckpointWriter:
    def __init__(self, path: Path, header: str, preserved: list[str]):
        self.path = path
        tmp = path.with_suffix(path.suffix + ".tmp")
        with tmp.open("w") as fh:
            fh.write(header + "\n")
            fh.write("round,length,bits,steps,output_hex\n")
            for line in preserved:
                fh.write(line + "\n")
        tmp.replace(path)
        self._fh = path.open("a")

    def record(self, rec: HaltRecord) -> None:
        self._fh.write(
            f"{rec.round},{rec.length},{rec.program},{rec.steps},{bits_to_hex(rec.output)}\n"
        )

    def round_done(self, r: int) -> None:
        self._fh.write(f"#done,{r}\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


def read_checkpoint(path: Path | str) -> tuple[dict, list[HaltRecord], int]:
    """Parse a checkpoint into (header fields, records, rounds completed).

    Records from a round with no #done sentinel are dropped; that round
    is replayed on resume.
    """
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("machine="):
        raise ConfigError(f"{path}: not a checkpoint file")
    fields = dict(kv.split("=", 1) for kv in lines[0].split(","))
    done = 0
    raw: list[tuple[int, str, int, str]] = []
    pending: list[tuple[int, str, int, str]] = []
    for line in lines[1:]:
        if not line or line.startswith("round,"):
            continue
        if line.startswith("#done,"):
            done = int(line.split(",")[1])
            raw.extend(pending)
            pending.clear()
            continue
        r, _length, bits, steps, ohex = line.split(",")
        pending.append((int(r), bits, int(steps), hex_to_bits(ohex)))
    records = [
        HaltRecord(index=i, round=r, program=bits, output=out, steps=steps)
        for i, (r, bits, steps, out) in enumerate(raw)
    ]
    return fields, records, done


def dovetail(
    machine: Machine,
    rounds: int,
    cap: int = DEFAULT_FUEL_CAP,
    round_budget: int = DEFAULT_ROUND_BUDGET,
    checkpoint: Path | str | None = None,
    resume: bool = False,
) -> list[HaltRecord]:
    """Enumerate halting programs through the given number of rounds."""
    if rounds < 1:
        raise ConfigError(f"rounds must be >= 1, got {rounds}")
    if checkpoint is not None:
        checkpoint = Path(checkpoint)
    mhash = machine_hash(machine)
    header = f"machine={mhash},cap={cap},version=1"

    records: list[HaltRecord] = []
    start_round = 1
    preserved_lines: list[str] = []
    if checkpoint is not None and resume:
        if not checkpoint.exists():
            raise ConfigError(f"cannot resume: {checkpoint} does not exist")
        fields, records, done = read_checkpoint(checkpoint)
        if fields.get("machine") != mhash:
            raise ConfigError(
                f"checkpoint machine {fields.get('machine')} does not match {mhash}"
            )
        if int(fields.get("cap", cap)) != cap:
            raise ConfigError("checkpoint fuel cap differs from requested cap")
        start_round = done + 1
        preserved_lines = _with_done_marks(records, done)

    writer = None
    if checkpoint is not None:
        writer = _CheckpointWriter(checkpoint, header, preserved_lines)

    halted = {r.program for r in records}
    pending: list[tuple[str, bool]] = []  # (program, probed before)
    if resume:
        # rebuild the probe set: every complete program of an already
        # introduced length that has not halted yet
        for l in range(1, min(start_round - 1, rounds) + 1):
            for p in _new_candidates(machine, l):
                if p not in halted:
                    pending.append((p, True))

    try:
        for r in range(start_round, rounds + 1):
            new = [p for p in _new_candidates(machine, r) if p not in halted]
            candidates = sorted(
                {p for p, _ in pending} | set(new), key=lambda s: (len(s), s)
            )
            if len(candidates) > round_budget:
                raise ResourceLimitError(
                    f"round {r} needs {len(candidates)} program runs, budget {round_budget}"
                )
            fuel = fuel_at(r, cap)
            prev_fuel = fuel_at(r - 1, cap) if r > start_round else 0
            survivors: list[tuple[str, bool]] = []
            for p in candidates:
                rerun_pointless = (
                    len(p) < r and fuel == prev_fuel and isinstance(machine, StepMachine)
                )
                if rerun_pointless:
                    survivors.append((p, True))
                    continue
                res = machine.run(p, fuel)
                if res.halted:
                    rec = HaltRecord(
                        index=len(records),
                        round=r,
                        program=p,
                        output=res.output or "",
                        steps=res.steps or 0,
                    )
                    records.append(rec)
                    halted.add(p)
                    if writer:
                        writer.record(rec)
                elif res.status == "exhausted" and not res.never_halts:
                    survivors.append((p, True))
                # malformed strings never appear here; never_halts drops
            pending = survivors
            if writer:
                writer.round_done(r)
    finally:
        if writer:
            writer.close()
    return records


def _with_done_marks(records: Sequence[HaltRecord], done: int) -> list[str]:
    """Re-serialize records with their #done sentinels up to round `done`."""
    lines: list[str] = []
    next_mark = 1
    for rec in records:
        while next_mark < rec.round:
            lines.append(f"#done,{next_mark}")
            next_mark += 1
        lines.append(
            f"{rec.round},{rec.length},{rec.program},{rec.steps},{bits_to_hex(rec.output)}"
        )
    while next_mark <= done:
        lines.append(f"#done,{next_mark}")
        next_mark += 1
    return lines
