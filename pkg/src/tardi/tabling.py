"""Idempotent execution of I/O actions.

Every effectful primitive call is an I/O action with a sequence number drawn
from a global counter. The first execution of an action performs the real
effect and records its inputs and outputs in an answer block; after the
counter is reset (by a debugger retry), re-executions of already-recorded
action numbers replay the recorded outputs without touching the world.

The counter advances in every mode, including `off`, so retry diagnostics can
always report how many untabled actions a jump would cross.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .io_world import IoBackend, PrimitiveDescriptor, perform
from .values import Value, render_values

INITIAL_TABLE_CAPACITY = 64


class TablingError(Exception):
    pass


class SlotOccupied(TablingError):
    pass


class IndexOutOfRange(TablingError):
    pass


class RestoreUnset(TablingError):
    pass


class TargetInFuture(TablingError):
    pass


class ModeViolation(TablingError):
    pass


class DivergenceError(Exception):
    """Replayed execution stopped matching the recorded run."""

    def __init__(self, number: int, recorded: tuple, attempted: tuple):
        self.number = number
        self.recorded = recorded
        self.attempted = attempted
        rec_name, rec_inputs = recorded
        att_name, att_inputs = attempted
        super().__init__(
            f"action #{number}: recorded {rec_name}{render_values(rec_inputs)}, "
            f"attempted {att_name}{render_values(att_inputs)}"
        )


@dataclass
class AnswerBlock:
    name: str
    inputs: tuple[Value, ...]
    outputs: list[Value | None]
    replay_count: int = 0


@dataclass(frozen=True)
class IoActionRecord:
    number: int
    name: str
    inputs: tuple[Value, ...]
    outputs: tuple[Value, ...]
    replayed: bool
    tabled: bool

    def to_payload(self) -> dict:
        from .values import render

        return {
            "n": self.number,
            "name": self.name,
            "inputs": [render(v) for v in self.inputs],
            "outputs": [render(v) for v in self.outputs],
            "replayed": self.replayed,
            "tabled": self.tabled,
        }


class IoActionTable:
    """Dense growable array of answer blocks, indexed by action number.

    Grows by doubling; occupied slots are never overwritten or truncated."""

    def __init__(self, initial_capacity: int = INITIAL_TABLE_CAPACITY):
        self._initial = initial_capacity
        self._slots: list[AnswerBlock | None] = [None] * initial_capacity

    @property
    def capacity(self) -> int:
        return len(self._slots)

    def get(self, n: int) -> AnswerBlock | None:
        if 0 <= n < len(self._slots):
            return self._slots[n]
        return None

    def put(self, n: int, block: AnswerBlock) -> None:
        while n >= len(self._slots):
            self._slots.extend([None] * len(self._slots))
        if self._slots[n] is not None:
            raise SlotOccupied(f"action #{n} already recorded")
        self._slots[n] = block

    def occupied(self):
        for n, block in enumerate(self._slots):
            if block is not None:
                yield n, block

    def occupied_count(self) -> int:
        return sum(1 for _ in self.occupied())

    def stored_value_count(self) -> int:
        """Stored values across all blocks: inputs + outputs + primitive identity."""
        return sum(len(b.inputs) + len(b.outputs) + 1 for _, b in self.occupied())


@dataclass
class TablingState:
    mode: str = "off"  # off | full | manual
    counter: int = 0
    table: IoActionTable = field(default_factory=IoActionTable)
    region_start: int | None = None
    region_end: int | None = None
    manual_enabled: bool = False
    execution_started: bool = False

    def __post_init__(self):
        if self.mode not in ("off", "full", "manual"):
            raise ValueError(f"bad tabling mode: {self.mode}")
        if self.mode == "full":
            self.region_start = 0


def set_mode(state: TablingState, mode: str) -> None:
    if state.execution_started:
        raise ModeViolation("tabling mode is fixed once execution has started")
    if mode not in ("off", "full", "manual"):
        raise ValueError(f"bad tabling mode: {mode}")
    state.mode = mode
    state.region_start = 0 if mode == "full" else None
    state.region_end = None
    state.manual_enabled = False


def start_tabling(state: TablingState) -> None:
    if state.mode != "manual":
        raise ModeViolation(f"table start requires manual mode (mode is {state.mode})")
    if state.manual_enabled:
        raise ModeViolation("tabling is already started")
    if state.region_end is not None:
        raise ModeViolation("tabling was already stopped; the recorded region cannot be reopened")
    state.region_start = state.counter
    state.manual_enabled = True


def stop_tabling(state: TablingState) -> None:
    if state.mode != "manual":
        raise ModeViolation(f"table stop requires manual mode (mode is {state.mode})")
    if not state.manual_enabled:
        raise ModeViolation("tabling is not started")
    state.region_end = state.counter
    state.manual_enabled = False


def allocate_action_number(state: TablingState) -> int:
    n = state.counter
    state.counter += 1
    return n


def reset_counter(state: TablingState, target: int) -> None:
    if target > state.counter:
        raise TargetInFuture(f"cannot reset counter forward: {target} > {state.counter}")
    state.counter = target


def io_has_occurred(state: TablingState, n: int) -> AnswerBlock | None:
    return state.table.get(n)


def create_answer_block(state: TablingState, n: int, name: str, inputs, n_outputs: int) -> AnswerBlock:
    block = AnswerBlock(name, tuple(inputs), [None] * n_outputs)
    state.table.put(n, block)
    return block


def save_answer(block: AnswerBlock, i: int, value: Value) -> None:
    if not 0 <= i < len(block.outputs):
        raise IndexOutOfRange(f"output index {i} out of range for {block.name}")
    block.outputs[i] = value


def restore_answer(block: AnswerBlock, i: int) -> Value:
    if not 0 <= i < len(block.outputs):
        raise IndexOutOfRange(f"output index {i} out of range for {block.name}")
    value = block.outputs[i]
    if value is None:
        raise RestoreUnset(f"output {i} of {block.name} was never saved")
    return value


def tabled_for(state: TablingState, n: int) -> bool:
    """Whether action number n falls inside the recorded region."""
    start = state.region_start
    if start is None or n < start:
        return False
    end = state.region_end
    return end is None or n < end


def region_contains(state: TablingState, a: int, b: int) -> bool:
    """True iff every action number in [a, b) lies within the recorded region."""
    if a > b:
        raise ValueError(f"bad span [{a}, {b})")
    if a == b:
        return True
    start = state.region_start
    if start is None or a < start:
        return False
    end = state.region_end
    return end is None or b <= end


def untabled_in(state: TablingState, a: int, b: int) -> int:
    """How many numbers in [a, b) fall outside the recorded region."""
    if a >= b:
        return 0
    start = state.region_start
    if start is None:
        return b - a
    end = state.region_end if state.region_end is not None else b
    overlap = max(0, min(b, end) - max(a, start))
    return (b - a) - overlap


def idempotent_execute(state: TablingState, backend: IoBackend,
                       descriptor: PrimitiveDescriptor, inputs) -> IoActionRecord:
    """Run one effectful primitive at most once per action number.

    First execution inside the recorded region performs the effect and records
    identity, inputs, and outputs; later executions of the same number verify
    identity and inputs against the record and replay the outputs without
    invoking the backend. A mismatch raises DivergenceError.
    """
    if not descriptor.effectful:
        raise ValueError(f"{descriptor.name} is pure and bypasses tabling")
    inputs = tuple(inputs)
    # allocate_action_number and tabled_for, inlined: this is the hot path, and
    # with tabling off it must cost no more than a failed flag test
    n = state.counter
    state.counter = n + 1
    start = state.region_start
    if start is not None and n >= start and (state.region_end is None or n < state.region_end):
        block = io_has_occurred(state, n)
        if block is not None:
            if block.name != descriptor.name or block.inputs != inputs:
                raise DivergenceError(n, (block.name, block.inputs), (descriptor.name, inputs))
            block.replay_count += 1
            outputs = tuple(restore_answer(block, i) for i in range(len(block.outputs)))
            return IoActionRecord(n, descriptor.name, inputs, outputs, replayed=True, tabled=True)
        outputs = tuple(perform(backend, descriptor, inputs, n))
        block = create_answer_block(state, n, descriptor.name, inputs, descriptor.n_outputs)
        for i, value in enumerate(outputs):
            save_answer(block, i, value)
        return IoActionRecord(n, descriptor.name, inputs, outputs, replayed=False, tabled=True)
    outputs = tuple(perform(backend, descriptor, inputs, n))
    return IoActionRecord(n, descriptor.name, inputs, outputs, replayed=False, tabled=False)


def table_dump(state: TablingState) -> str:
    """One line per occupied slot: number, name, inputs, outputs, replay count."""
    lines = []
    for n, block in state.table.occupied():
        outputs = [v for v in block.outputs if v is not None]
        lines.append(
            f"{n}\t{block.name}\t{render_values(block.inputs)}\t{render_values(outputs)}\t{block.replay_count}"
        )
    return "\n".join(lines) + ("\n" if lines else "")
