"""Gate-level builders for every circuit the toolkit models.

Covers multi-controlled NOT cascades, increment/decrement counters,
conditioned multi-target data-loading gates, the full data-preparation
sequence, and the volume-test oracle, together with width/depth/ancilla
accounting.  Registers are big-endian throughout: the leftmost qubit of
a register is the most significant bit.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

from .causet import CausalSet
from .errors import (
    InsufficientAncillae,
    InvalidParameter,
    KTooLarge,
    OutOfRange,
)

# Cost-model constants for the analytic depth report (dimensionless layer
# units; the polylog multi-controlled-NOT route and the uniform-state
# preparation primitive are modeled analytically, never expanded).
C_MCX = 1.0
C_PREP = 1.0
C_FANOUT = 1.0


@dataclass(frozen=True)
class Gate:
    """One gate of the X family, a Hadamard, or the abstract state-prep primitive.

    targets:      flipped qubits (X/CNOT/TOFF/MCX single target, FANOUT many,
                  H single, PREP_UNIF the register being prepared).
    controls:     qubits that must read 1.
    anticontrols: qubits that must read 0 (open controls).
    prep_m:       PREP_UNIF only -- number of basis states in superposition.
    """

    kind: str
    targets: tuple[int, ...]
    controls: tuple[int, ...] = ()
    anticontrols: tuple[int, ...] = ()
    prep_m: int = 0

    def __post_init__(self):
        seen = set(self.targets) | set(self.controls) | set(self.anticontrols)
        if len(seen) != len(self.targets) + len(self.controls) + len(self.anticontrols):
            raise InvalidParameter(f"gate {self.kind} reuses a qubit")

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.targets + self.controls + self.anticontrols


def x(q: int) -> Gate:
    return Gate("X", (q,))


def cnot(control: int, target: int) -> Gate:
    return Gate("CNOT", (target,), (control,))


def toffoli(c1: int, c2: int, target: int) -> Gate:
    return Gate("TOFF", (target,), (c1, c2))


def mcx(controls, target: int, anticontrols=()) -> Gate:
    return Gate("MCX", (target,), tuple(controls), tuple(anticontrols))


def fanout(control: int, targets) -> Gate:
    if not targets:
        raise InvalidParameter("fan-out needs at least one target")
    return Gate("FANOUT", tuple(targets), (control,))


def hadamard(q: int) -> Gate:
    return Gate("H", (q,))


def prepare_uniform(register, m: int) -> Gate:
    if m < 1 or m > 1 << len(tuple(register)):
        raise OutOfRange(f"cannot place {m} states in {len(tuple(register))} qubits")
    return Gate("PREP_UNIF", tuple(register), prep_m=m)


@dataclass
class Circuit:
    """Ordered gate list over named, disjoint qubit registers."""

    width: int
    registers: dict[str, tuple[int, ...]]
    gates: list[Gate] = field(default_factory=list)
    phase_register: str | None = None
    ancilla_registers: tuple[str, ...] = ()

    def __post_init__(self):
        used = set()
        for name, qubits in self.registers.items():
            if used & set(qubits):
                raise InvalidParameter(f"register {name} overlaps another register")
            used |= set(qubits)
        if used and (min(used) < 0 or max(used) >= self.width):
            raise InvalidParameter("register qubits outside circuit width")
        for g in self.gates:
            if g.qubits and (min(g.qubits) < 0 or max(g.qubits) >= self.width):
                raise InvalidParameter("gate references a qubit outside the width")

    @property
    def phase_qubit(self) -> int | None:
        if self.phase_register is None:
            return None
        return self.registers[self.phase_register][0]

    def to_text(self) -> str:
        return circuit_to_text(self)


def _span(qubits: tuple[int, ...]) -> str:
    if len(qubits) > 1 and qubits == tuple(range(qubits[0], qubits[-1] + 1)):
        return f"q{qubits[0]}..q{qubits[-1]}"
    return ",".join(f"q{q}" for q in qubits)


def circuit_to_text(c: Circuit) -> str:
    """One gate per line, preceded by a register-map comment block."""
    lines = [f"# width {c.width}"]
    for name, qubits in c.registers.items():
        tag = " (phase)" if name == c.phase_register else ""
        lines.append(f"# register {name}: {_span(qubits)}{tag}")
    for g in c.gates:
        if g.kind == "X":
            lines.append(f"X q{g.targets[0]}")
        elif g.kind == "CNOT":
            lines.append(f"CNOT q{g.controls[0]} q{g.targets[0]}")
        elif g.kind == "TOFF":
            lines.append(f"TOFF q{g.controls[0]} q{g.controls[1]} q{g.targets[0]}")
        elif g.kind == "MCX":
            polarity = [f"+q{q}" for q in g.controls] + [f"-q{q}" for q in g.anticontrols]
            lines.append(f"MCX [{','.join(polarity)}] q{g.targets[0]}")
        elif g.kind == "FANOUT":
            lines.append(f"FANOUT q{g.controls[0]} [{','.join(f'q{q}' for q in g.targets)}]")
        elif g.kind == "H":
            lines.append(f"H q{g.targets[0]}")
        elif g.kind == "PREP_UNIF":
            lines.append(f"PREP_UNIF r=[{_span(g.targets)}] M={g.prep_m}")
        else:
            raise InvalidParameter(f"unknown gate kind {g.kind}")
    return "\n".join(lines) + "\n"


# -- multi-controlled NOT cascade ------------------------------------------------

def _cascade_gates(controls, target: int, ancillae) -> list[Gate]:
    """AND-tree of Toffolis: m-1 compute, m-2 uncompute, ancillae restored."""
    controls = list(controls)
    ancillae = list(ancillae)
    m = len(controls)
    if m == 0:
        return [x(target)]
    if m == 1:
        return [cnot(controls[0], target)]
    if len(ancillae) < m - 2:
        raise InsufficientAncillae(f"{m}-control cascade needs {m - 2} ancillae")
    compute: list[Gate] = []
    level = controls
    free = iter(ancillae)
    while len(level) > 2:
        nxt = []
        for a, b in zip(level[0::2], level[1::2]):
            anc = next(free)
            compute.append(toffoli(a, b, anc))
            nxt.append(anc)
        if len(level) % 2:
            nxt.append(level[-1])
        level = nxt
    final = toffoli(level[0], level[1], target)
    return compute + [final] + compute[::-1]


def mcx_cascade(m: int, target: int | None = None, ancillae=None) -> Circuit:
    """m-controlled NOT from Toffolis and m-2 zeroed ancillae.

    Controls are qubits 0..m-1.  The target and ancilla indices default to
    the next free positions.
    """
    if m < 1:
        raise InvalidParameter("need at least one control")
    if target is None:
        target = m
    if ancillae is None:
        ancillae = tuple(range(m + 1, m + 1 + max(m - 2, 0)))
    ancillae = tuple(ancillae)
    if len(ancillae) < max(m - 2, 0):
        raise InsufficientAncillae(f"m={m} needs {max(m - 2, 0)} ancillae")
    width = max([m - 1, target, *ancillae]) + 1
    registers = {"C": tuple(range(m)), "T": (target,)}
    if ancillae:
        registers["anc"] = ancillae
    return Circuit(width=width, registers=registers,
                   gates=_cascade_gates(range(m), target, ancillae),
                   ancilla_registers=("anc",) if ancillae else ())


# -- increment / decrement --------------------------------------------------------

def _incr_gates(bits, control: int | None = None, decr: bool = False) -> list[Gate]:
    """Ripple cascade of multi-controlled NOTs over big-endian bits.

    Bit j flips when every less-significant bit reads 1 (plus the optional
    external control); reversing the gate order yields the decrement.
    """
    bits = list(bits)
    gates = []
    for pos in range(len(bits)):
        ctrls = bits[pos + 1:]
        if control is not None:
            ctrls = ctrls + [control]
        if not ctrls:
            gates.append(x(bits[pos]))
        elif len(ctrls) == 1:
            gates.append(cnot(ctrls[0], bits[pos]))
        elif len(ctrls) == 2:
            gates.append(toffoli(ctrls[0], ctrls[1], bits[pos]))
        else:
            gates.append(mcx(ctrls, bits[pos]))
    return gates[::-1] if decr else gates


def incr_decr(q: int, direction: str = "incr", control: int | None = None) -> Circuit:
    """Modular +1/-1 on a q-qubit big-endian register (qubits 0..q-1)."""
    if q < 1:
        raise InvalidParameter("register needs at least one qubit")
    if direction not in ("incr", "decr"):
        raise InvalidParameter(f"unknown direction {direction!r}")
    if control is not None and control < q:
        raise InvalidParameter("control qubit collides with the register")
    registers = {"v": tuple(range(q))}
    width = q
    if control is not None:
        registers["ctl"] = (control,)
        width = control + 1
    return Circuit(width=width, registers=registers,
                   gates=_incr_gates(range(q), control, direction == "decr"))


# -- conditioned multi-target NOT ---------------------------------------------------

def _mask_bits(value: int, width: int) -> list[int]:
    """Big-endian bit positions (0-based) set in the width-bit value."""
    return [pos for pos in range(width) if (value >> (width - 1 - pos)) & 1]


def mcmx(m: int, target_mask, ancilla: int | None = None,
         cascade_ancillae=None) -> Circuit:
    """m-controlled multi-target NOT: cascade onto one ancilla, fan out,
    cascade back.  target_mask is a bit string over the target register."""
    if m < 1:
        raise InvalidParameter("need at least one control")
    mask = [int(b) for b in target_mask]
    if set(mask) - {0, 1} or not any(mask):
        raise InvalidParameter("target mask must be nonempty bits")
    n_t = len(mask)
    t_qubits = [m + pos for pos, bit in enumerate(mask) if bit]
    if ancilla is None:
        ancilla = m + n_t
    if cascade_ancillae is None:
        cascade_ancillae = tuple(range(ancilla + 1, ancilla + 1 + max(m - 2, 0)))
    cascade_ancillae = tuple(cascade_ancillae)
    if len(cascade_ancillae) < max(m - 2, 0):
        raise InsufficientAncillae(f"m={m} needs {max(m - 2, 0)} cascade ancillae")
    gates = _cascade_gates(range(m), ancilla, cascade_ancillae)
    gates = gates + [fanout(ancilla, t_qubits)] + gates
    width = max([m + n_t - 1, ancilla, *cascade_ancillae]) + 1
    registers = {"C": tuple(range(m)), "T": tuple(range(m, m + n_t)),
                 "anc": (ancilla,) + cascade_ancillae}
    return Circuit(width=width, registers=registers, gates=gates,
                   ancilla_registers=("anc",))


# -- data loading -------------------------------------------------------------------

def _data_load_gates(c_value: int, t_value: int, c_qubits, t_qubits,
                     sandwich: int | None, cascade_ancillae) -> list[Gate]:
    """Gates of one conditioned load: flip the target support of t_value
    exactly when the control register reads c_value.

    Open controls (zero bits of c_value) are realized by conjugating those
    control qubits with X; t_value = 0 contributes no gates at all.
    """
    c_qubits = list(c_qubits)
    t_qubits = list(t_qubits)
    if t_value == 0:
        return []
    targets = [t_qubits[pos] for pos in _mask_bits(t_value, len(t_qubits))]
    if not c_qubits:
        return [x(t) for t in targets]
    ones = set(_mask_bits(c_value, len(c_qubits)))
    conjugate = [x(q) for pos, q in enumerate(c_qubits) if pos not in ones]
    if len(c_qubits) == 1:
        # One control and zero ancillae: fan out straight from the control.
        core = [fanout(c_qubits[0], targets)]
    else:
        half = _cascade_gates(c_qubits, sandwich, cascade_ancillae)
        core = half + [fanout(sandwich, targets)] + half
    return conjugate + core + conjugate


def data_load_gate(c: int, t: int, n_c: int, n_t: int) -> Circuit:
    """Standalone conditioned load with registers C (n_c), T (n_t), and
    n_c - 1 work ancillae after them."""
    if n_c < 0 or n_t < 1:
        raise InvalidParameter("register sizes must be n_c >= 0, n_t >= 1")
    if not 0 <= c < (1 << n_c):
        raise OutOfRange(f"control value {c} outside 0..{(1 << n_c) - 1}")
    if not 0 <= t < (1 << n_t):
        raise OutOfRange(f"target value {t} outside 0..{(1 << n_t) - 1}")
    n_anc = max(n_c - 1, 0)
    c_qubits = tuple(range(n_c))
    t_qubits = tuple(range(n_c, n_c + n_t))
    ancillae = tuple(range(n_c + n_t, n_c + n_t + n_anc))
    sandwich = ancillae[0] if ancillae else None
    gates = _data_load_gates(c, t, c_qubits, t_qubits, sandwich, ancillae[1:])
    registers = {"C": c_qubits, "T": t_qubits}
    if ancillae:
        registers["anc"] = ancillae
    return Circuit(width=n_c + n_t + n_anc, registers=registers, gates=gates,
                   ancilla_registers=("anc",) if ancillae else ())


# -- pair enumeration ----------------------------------------------------------------

def pair_index(i: int, j: int, n: int) -> int:
    """Row-major enumeration of {1..n}^2 starting at 0."""
    if not (1 <= i <= n and 1 <= j <= n):
        raise OutOfRange(f"pair ({i}, {j}) outside 1..{n}")
    return (i - 1) * n + j - 1


def pair_index_inverse(h: int, n: int) -> tuple[int, int]:
    if not 0 <= h < n * n:
        raise OutOfRange(f"index {h} outside 0..{n * n - 1}")
    return 1 + h // n, 1 + h % n


# -- data preparation sequence ---------------------------------------------------------

def data_prep_register_sizes(n: int) -> tuple[int, int, int]:
    """(index register, data register, work ancillae) qubit counts."""
    n_c = (n * n - 1).bit_length() if n > 1 else 0
    return n_c, 2 * n, max(n_c - 1, 0)


def build_data_prep(c: CausalSet) -> Circuit:
    """Uniform superposition over the n^2 index states, then one conditioned
    load per index writing the matching row/column bit pair."""
    n = c.n
    n_c, n_t, n_anc = data_prep_register_sizes(n)
    c_qubits = tuple(range(n_c))
    t_qubits = tuple(range(n_c, n_c + n_t))
    ancillae = tuple(range(n_c + n_t, n_c + n_t + n_anc))
    sandwich = ancillae[0] if ancillae else None
    gates: list[Gate] = []
    if n_c:
        gates.append(prepare_uniform(c_qubits, n * n))
    for h in range(n * n):
        i, j = pair_index_inverse(h, n)
        bits = c.row_string(i) + c.col_string(j)
        t_value = int("".join(map(str, bits)), 2)
        gates.extend(_data_load_gates(h, t_value, c_qubits, t_qubits,
                                      sandwich, ancillae[1:]))
    registers = {"C": c_qubits, "T": t_qubits}
    if ancillae:
        registers["anc"] = ancillae
    return Circuit(width=n_c + n_t + n_anc, registers=registers, gates=gates,
                   ancilla_registers=("anc",) if ancillae else ())


# -- volume-test oracle -----------------------------------------------------------------

def oracle_register_count(n: int) -> int:
    """log-register size 1 + floor(log2 n); holds volumes up to n."""
    return n.bit_length()


def oracle_width(n: int) -> int:
    return 2 * (n + (n.bit_length() - 1) + 2)


def build_oracle(n: int, k: int) -> Circuit:
    """Phase oracle marking row/column pairs whose dot product equals k+2.

    Layout: row (n), col (n), AND (1), volume (q), compare (q), phase (1)
    with q = 1 + floor(log2 n).  Per data bit: a Toffoli stores the row-col
    AND, the AND conditions an increment of the volume counter, and the
    Toffoli uncomputes.  Transversal CNOTs difference the counter against
    the compare register (prepared to k+2 in-circuit from zero), an
    all-open-controls MCX kicks the phase, and everything uncomputes.
    """
    if n < 1:
        raise InvalidParameter("n must be >= 1")
    if k < 0:
        raise InvalidParameter("k must be >= 0")
    q = oracle_register_count(n)
    if k + 2 > (1 << q) - 1:
        raise KTooLarge(f"k+2 = {k + 2} does not fit {q} volume qubits")
    row = tuple(range(n))
    col = tuple(range(n, 2 * n))
    and_q = 2 * n
    vol = tuple(range(2 * n + 1, 2 * n + 1 + q))
    cmp_ = tuple(range(2 * n + 1 + q, 2 * n + 1 + 2 * q))
    phase = 2 * n + 1 + 2 * q

    prep_cmp = [x(cmp_[pos]) for pos in _mask_bits(k + 2, q)]
    count_up: list[Gate] = []
    for b in range(n):
        count_up.append(toffoli(row[b], col[b], and_q))
        count_up.extend(_incr_gates(vol, control=and_q))
        count_up.append(toffoli(row[b], col[b], and_q))
    count_down: list[Gate] = []
    for b in reversed(range(n)):
        count_down.append(toffoli(row[b], col[b], and_q))
        count_down.extend(_incr_gates(vol, control=and_q, decr=True))
        count_down.append(toffoli(row[b], col[b], and_q))
    compare = [cnot(vol[pos], cmp_[pos]) for pos in range(q)]
    kick = mcx((), phase, anticontrols=cmp_)

    gates = (prep_cmp + count_up + compare + [kick] + compare
             + count_down + prep_cmp)
    registers = {"row": row, "col": col, "and": (and_q,), "volume": vol,
                 "compare": cmp_, "phase": (phase,)}
    return Circuit(width=2 * n + 2 * q + 2, registers=registers, gates=gates,
                   phase_register="phase",
                   ancilla_registers=("and", "volume", "compare", "phase"))


def oracle_input_bits(circ: Circuit, r_bits, c_bits) -> tuple[int, ...]:
    """Basis input for an oracle circuit: row/col payload set, ancillae zero."""
    bits = [0] * circ.width
    for q, b in zip(circ.registers["row"], r_bits):
        bits[q] = int(b)
    for q, b in zip(circ.registers["col"], c_bits):
        bits[q] = int(b)
    return tuple(bits)


# -- resource accounting --------------------------------------------------------------

@dataclass(frozen=True)
class ResourceReport:
    width: int
    ancilla_count: int
    depth_layers: int
    gate_counts: dict[str, int]
    analytic_depth_bound: float
    model: str

    @property
    def depth(self) -> float:
        return self.depth_layers if self.model == "expanded" else self.analytic_depth_bound


def _duration(g: Gate, analytic: bool) -> float:
    if g.kind == "FANOUT":
        return max(1.0, math.ceil(math.log2(len(g.targets))) * C_FANOUT)
    if g.kind == "PREP_UNIF":
        return max(1.0, math.ceil(math.log2(g.prep_m)) * C_PREP)
    if g.kind == "MCX" and analytic:
        m = len(g.controls) + len(g.anticontrols)
        return max(1.0, math.ceil(math.log2(max(m, 2))) ** 3 * C_MCX)
    return 1.0


def _asap_depth(c: Circuit, analytic: bool) -> float:
    ready = [0.0] * c.width
    depth = 0.0
    for g in c.gates:
        start = max((ready[q] for q in g.qubits), default=0.0)
        end = start + _duration(g, analytic)
        for q in g.qubits:
            ready[q] = end
        depth = max(depth, end)
    return depth


def resources(c: Circuit, model: str = "expanded") -> ResourceReport:
    """Width, ancilla, gate-count, and depth accounting.

    The expanded model layers the concrete sequence greedily with every
    multi-controlled NOT as a unit-depth primitive (fan-out occupies its
    balanced-CNOT-tree depth).  The analytic model substitutes polylog
    cost formulas for the composite gates instead of expanding them.
    Width and ancilla counts are exact in both.
    """
    if model not in ("expanded", "analytic"):
        raise InvalidParameter(f"unknown resource model {model!r}")
    counts = Counter(g.kind for g in c.gates)
    ancilla = sum(len(c.registers[r]) for r in c.ancilla_registers)
    return ResourceReport(
        width=c.width,
        ancilla_count=ancilla,
        depth_layers=int(_asap_depth(c, analytic=False)),
        gate_counts=dict(sorted(counts.items())),
        analytic_depth_bound=_asap_depth(c, analytic=True),
        model=model,
    )
