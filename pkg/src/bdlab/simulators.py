"""Two exact circuit simulators plus the classical oracle reference.

The reversible simulator propagates a single computational basis state
through X-family gates; a gate that targets the phase register flips a
symbolic sign instead of a bit, which is exact because every such
circuit permutes the remaining basis states.  The dense statevector
simulator covers small widths and additionally understands Hadamard
and the abstract uniform-preparation primitive.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .action import volume_matrix
from .causet import CausalSet
from .circuits import Circuit, Gate, oracle_input_bits
from .errors import InvalidParameter, UnsupportedGate, WidthTooLarge

STATEVECTOR_WIDTH_CAP = 24


@dataclass(frozen=True)
class BasisState:
    """Width-length bit tuple plus a symbolic sign.

    The bit at the phase-register position stays 0; the register is
    conceptually held in the |-> state and only its kickback sign is
    tracked.
    """

    bits: tuple[int, ...]
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise InvalidParameter("sign must be +1 or -1")
        if set(self.bits) - {0, 1}:
            raise InvalidParameter("bits must be 0/1")


def zero_state(circ: Circuit) -> BasisState:
    return BasisState(bits=(0,) * circ.width)


def _compiled(circ: Circuit):
    """Reversible-dispatch oplist, cached on the circuit object."""
    ops = getattr(circ, "_reversible_ops", None)
    if ops is not None:
        return ops
    phase = circ.phase_qubit
    ops = []
    for g in circ.gates:
        if g.kind not in ("X", "CNOT", "TOFF", "MCX", "FANOUT"):
            raise UnsupportedGate(f"reversible simulator cannot apply {g.kind}")
        if phase is not None and phase in g.controls + g.anticontrols:
            raise UnsupportedGate("cannot control on the phase register")
        ops.append((g.controls, g.anticontrols, g.targets))
    circ._reversible_ops = ops
    return ops


def run_reversible(circ: Circuit, state: BasisState) -> BasisState:
    """Apply each gate as a classical reversible update; cost O(gate count)."""
    if len(state.bits) != circ.width:
        raise InvalidParameter("state width does not match circuit width")
    bits = list(state.bits)
    sign = state.sign
    phase = circ.phase_qubit
    for controls, anticontrols, targets in _compiled(circ):
        fire = all(bits[q] for q in controls) and not any(bits[q] for q in anticontrols)
        if not fire:
            continue
        for t in targets:
            if t == phase:
                sign = -sign
            else:
                bits[t] ^= 1
    return BasisState(bits=tuple(bits), sign=sign)


def oracle_sign(circ: Circuit, r_bits, c_bits) -> int:
    """Kickback sign of an oracle circuit on one row/column payload; also
    checks that every non-payload register returns to zero."""
    out = run_reversible(circ, BasisState(oracle_input_bits(circ, r_bits, c_bits)))
    expected = oracle_input_bits(circ, r_bits, c_bits)
    if out.bits != expected:
        raise InvalidParameter("oracle failed to uncompute its work registers")
    return out.sign


# -- dense statevector ----------------------------------------------------------------

def _bit_mask(circ_width: int, qubit: int) -> int:
    return 1 << (circ_width - 1 - qubit)


def run_statevector(circ: Circuit, init: np.ndarray | None = None,
                    width_cap: int = STATEVECTOR_WIDTH_CAP) -> np.ndarray:
    """Exact dense evolution; basis index is big-endian in qubit order."""
    w = circ.width
    if w > width_cap:
        raise WidthTooLarge(f"width {w} exceeds the cap of {width_cap}")
    dim = 1 << w
    if init is None:
        amp = np.zeros(dim, dtype=np.complex128)
        amp[0] = 1.0
    else:
        amp = np.asarray(init, dtype=np.complex128).copy()
        if amp.shape != (dim,):
            raise InvalidParameter(f"initial state must have {dim} amplitudes")
    idx = np.arange(dim)
    for g in circ.gates:
        amp = _apply_dense(g, amp, idx, w)
    return amp


def _apply_dense(g: Gate, amp: np.ndarray, idx: np.ndarray, w: int) -> np.ndarray:
    if g.kind in ("X", "CNOT", "TOFF", "MCX", "FANOUT"):
        flip = 0
        for t in g.targets:
            flip |= _bit_mask(w, t)
        cond = np.ones(len(idx), dtype=bool)
        for q in g.controls:
            cond &= (idx & _bit_mask(w, q)) != 0
        for q in g.anticontrols:
            cond &= (idx & _bit_mask(w, q)) == 0
        source = np.where(cond, idx ^ flip, idx)
        return amp[source]
    if g.kind == "H":
        m = _bit_mask(w, g.targets[0])
        low = idx[(idx & m) == 0]
        out = np.empty_like(amp)
        a0, a1 = amp[low], amp[low | m]
        inv = 1.0 / np.sqrt(2.0)
        out[low] = (a0 + a1) * inv
        out[low | m] = (a0 - a1) * inv
        return out
    if g.kind == "PREP_UNIF":
        reg = g.targets
        reg_mask = 0
        for q in reg:
            reg_mask |= _bit_mask(w, q)
        if np.any(np.abs(amp[(idx & reg_mask) != 0]) > 1e-12):
            raise UnsupportedGate("uniform preparation requires the register in |0>")
        value = np.zeros(len(idx), dtype=np.int64)
        for pos, q in enumerate(reg):
            bit = (idx & _bit_mask(w, q)) != 0
            value |= bit.astype(np.int64) << (len(reg) - 1 - pos)
        source = idx & ~reg_mask
        out = np.where(value < g.prep_m, amp[source] / np.sqrt(g.prep_m), 0.0)
        return out.astype(np.complex128)
    raise UnsupportedGate(f"statevector simulator cannot apply {g.kind}")


def basis_index(bits, w: int) -> int:
    value = 0
    for pos, b in enumerate(bits):
        value |= int(b) << (w - 1 - pos)
    return value


# -- classical truth reference ----------------------------------------------------------

def oracle_truth(c: CausalSet, k: int) -> np.ndarray:
    """n x n 0/1 matrix with entry (i, j) = 1 iff the inclusive volume
    between i and j equals k+2; the membership predicate the oracle tests."""
    vbar = volume_matrix(c).matrix
    return (vbar == k + 2).astype(np.uint8)
