"""
Superchannels and multi-time process tensors.

A process tensor is stored as its (unnormalized) Choi matrix over labelled
slots in chronological order ``(0,i), (0,o), (1,i), (1,o), ..., (k,i)``; the
``i`` slot of time ``t`` is what the system hands to the experimenter at that
time and the ``o`` slot is what the experimenter feeds back.  Slots of
dimension 1 are allowed (e.g. a process that starts with a free preparation).

Born rule
---------
With every operation written as a Choi matrix in the same chronological
slot order (an operation at a non-final time: input slot then output slot;
an effect ``E`` at the final time: ``E^T``), the probability of a sequence
is ``tr[Y A^T] = sum_ij Y_ij A_ij`` where ``A`` is the Kronecker product of
the per-time operation matrices.  The trace of ``Y`` equals the product of
the output dimensions.
"""
import itertools
from dataclasses import dataclass, field

import numpy as np

from . import qla
from .channels import Channel, is_cptp, xyz_coupling
from .qla import CMatrix
from .tomo import dual_set

CAUSAL_TOL = 1e-8
PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class Slot:
    t: int
    dir: str
    d: int

    @property
    def label(self):
        return (self.t, self.dir)


def make_slots(spec):
    """Build a slot list from ``(t, dir, d)`` tuples or :class:`Slot` objects."""
    out = [s if isinstance(s, Slot) else Slot(int(s[0]), str(s[1]), int(s[2])) for s in spec]
    return out


def standard_slots(k, d=2, d0=None):
    """Slots for ``k`` steps on a ``d``-level system (``d0`` overrides the first input dim)."""
    out = [Slot(0, "i", d if d0 is None else d0)]
    for t in range(k):
        out += [Slot(t, "o", d), Slot(t + 1, "i", d)]
    return out


def _validate_slots(slots):
    prev = None
    for s in slots:
        if s.dir not in ("i", "o") or s.d < 1:
            raise ValueError(f"bad slot {s}")
        key = (s.t, 0 if s.dir == "i" else 1)
        if prev is not None and key <= prev:
            raise ValueError("slots must be in chronological order, input before output")
        prev = key
    if slots and slots[-1].dir != "i":
        raise ValueError("the final slot must be an input slot")
    times = sorted(set(s.t for s in slots))
    for t in times[:-1]:
        dirs = [s.dir for s in slots if s.t == t]
        if dirs != ["i", "o"]:
            raise ValueError(f"time {t} needs both an input and an output slot")


class ProcessTensor:
    """Choi matrix of a multi-time process with labelled slots.

    Parameters
    ----------
    choi : array_like
    slots : sequence of Slot or (t, dir, d)
    conditional : bool
        Set when the tensor was obtained by contracting earlier times with
        an operation (a conditional / reduced-from-the-past description).
    """

    def __init__(self, choi, slots, conditional=False):
        self.slots = make_slots(slots)
        _validate_slots(self.slots)
        C = np.array(qla._arr(choi), dtype=complex)
        n = int(np.prod(self.dims))
        if C.shape != (n, n):
            raise ValueError(f"Choi shape {C.shape} does not match slot dims {self.dims}")
        C.flags.writeable = False
        self.choi = C
        self.conditional = bool(conditional)

    def __repr__(self):
        lab = ",".join(f"{s.t}{s.dir}" for s in self.slots)
        return f"ProcessTensor(slots=[{lab}], dims={self.dims})"

    @property
    def dims(self):
        return [s.d for s in self.slots]

    @property
    def times(self):
        return sorted(set(s.t for s in self.slots))

    @property
    def labels(self):
        return [s.label for s in self.slots]

    def index(self, t, dir):
        for j, s in enumerate(self.slots):
            if s.t == t and s.dir == dir:
                return j
        raise KeyError((t, dir))

    def time_slots(self, t):
        return [j for j, s in enumerate(self.slots) if s.t == t]

    def d_out_total(self):
        return int(np.prod([s.d for s in self.slots if s.dir == "o"])) if self.slots else 1

    def normalized(self):
        """Unit-trace copy of the Choi matrix (as ndarray)."""
        return self.choi / np.trace(self.choi).real

    def cmatrix(self):
        return CMatrix(self.choi, self.dims)

    def to_dict(self):
        return {"slots": [{"t": s.t, "dir": s.dir, "d": s.d} for s in self.slots],
                "choi": CMatrix(self.choi, self.dims).to_dict()}

    @classmethod
    def from_dict(cls, d):
        slots = [Slot(int(s["t"]), s["dir"], int(s["d"])) for s in d["slots"]]
        return cls(CMatrix.from_dict(d["choi"]).data, slots, conditional=d.get("conditional", False))


# ---------------------------------------------------------------------------
# operations as chronological Choi matrices
# ---------------------------------------------------------------------------

def op_matrix(op, d_i, d_o=None):
    """Chronological Choi matrix of the operation applied at one time.

    Parameters
    ----------
    op : Channel, ndarray or None
        * non-final time (``d_o`` given): a :class:`Channel` (CP map from the
          ``d_i`` input slot to the ``d_o`` output slot) or its Choi matrix in
          channel order (output, input);
        * final time (``d_o is None``): an effect ``E`` (returns ``E^T``);
          ``None`` means the identity effect (discard).
    """
    if d_o is None:
        E = np.eye(d_i) if op is None else np.asarray(qla._arr(op), dtype=complex)
        if E.shape != (d_i, d_i):
            raise ValueError(f"effect shape {E.shape} != ({d_i},{d_i})")
        return E.T
    if isinstance(op, Channel):
        if (op.d_in, op.d_out) != (d_i, d_o):
            raise ValueError(f"operation dims ({op.d_in}->{op.d_out}) != slot dims ({d_i}->{d_o})")
        C = op.choi
    else:
        C = np.asarray(qla._arr(op), dtype=complex)
        if C.shape != (d_i * d_o, d_i * d_o):
            raise ValueError(f"operation Choi shape {C.shape} does not match ({d_i}->{d_o})")
    if d_i == 1 or d_o == 1:
        return C
    return qla.permute(CMatrix(C, [d_o, d_i]), [1, 0]).data


def identity_op(d):
    """Chronological Choi of the identity channel (``|Phi+><Phi+|``)."""
    return qla.max_entangled(d).data


def _contract(choi, dims, idx, A):
    """``tr_idx[Y (A kron 1)^T]`` with ``A`` on the slots ``idx`` (ascending)."""
    idx = sorted(idx)
    rest = [j for j in range(len(dims)) if j not in idx]
    Y = qla.permute(CMatrix(choi, dims), idx + rest).data if idx != list(range(len(idx))) else choi
    da = int(np.prod([dims[j] for j in idx])) if idx else 1
    dr = int(np.prod([dims[j] for j in rest])) if rest else 1
    if A.shape != (da, da):
        raise ValueError(f"operation shape {A.shape} does not match slots ({da})")
    R = np.einsum("arbs,ab->rs", Y.reshape(da, dr, da, dr), A)
    return R, rest


def _ops_matrix(T, times, ops):
    """Kronecker product of per-time operation matrices for ``times`` (ascending)."""
    mats = []
    last = T.times[-1]
    for t, op in zip(times, ops):
        js = T.time_slots(t)
        if t == last and len(js) == 1:
            mats.append(op_matrix(op, T.slots[js[0]].d))
        else:
            mats.append(op_matrix(op, T.slots[js[0]].d, T.slots[js[1]].d))
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def born_multi(T, ops):
    """Multi-time Born rule.

    Parameters
    ----------
    T : ProcessTensor
    ops : list or ndarray
        One operation per time (see :func:`op_matrix`), or a full tester
        element already in chronological Choi form.  If the entry for the
        final time is the string ``"open"``, the subnormalized final state is
        returned instead of a probability.

    Returns
    -------
    float or ndarray
    """
    if not isinstance(ops, (list, tuple)):
        A = np.asarray(qla._arr(ops), dtype=complex)
        return float(np.real(qla.contract(T.choi, A)))
    times = T.times
    if len(ops) != len(times):
        raise ValueError(f"need one operation per time ({len(times)}), got {len(ops)}")
    if isinstance(ops[-1], str) and ops[-1] == "open":
        A = _ops_matrix(T, times[:-1], ops[:-1])
        idx = [j for t in times[:-1] for j in T.time_slots(t)]
        R, _ = _contract(T.choi, T.dims, idx, A)
        return R
    A = _ops_matrix(T, times, ops)
    return float(np.real(qla.contract(T.choi, A)))


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

@dataclass
class CircuitProcess:
    """System-environment dilation: initial ``rho_SE`` and one unitary per step."""
    rho_SE: np.ndarray
    unitaries: list
    d_S: int = 2
    d_E: int = field(default=None)

    def __post_init__(self):
        self.rho_SE = np.asarray(qla._arr(self.rho_SE), dtype=complex)
        if self.d_E is None:
            self.d_E = self.rho_SE.shape[0] // self.d_S
        if self.d_S * self.d_E != self.rho_SE.shape[0]:
            raise ValueError("rho_SE dimension is not d_S * d_E")
        n = self.d_S * self.d_E
        for U in self.unitaries:
            U = np.asarray(U)
            if U.shape != (n, n):
                raise ValueError(f"unitary shape {U.shape} != ({n},{n})")
            if not np.allclose(U @ U.conj().T, np.eye(n), atol=1e-9):
                raise ValueError("step operator is not unitary")

    @property
    def k(self):
        return len(self.unitaries)


def process_from_circuit(c):
    """Choi state of the process generated by a system-environment circuit.

    At each step one half of an unnormalized maximally entangled pair is fed
    into the process; the other half is the output slot of that time.
    """
    dS, dE = c.d_S, c.d_E
    X = c.rho_SE.copy()
    labels = [(0, "i"), "E"]
    dims = [dS, dE]
    for j, U in enumerate(c.unitaries):
        phi = qla.max_entangled(dS).data
        X = np.kron(X, phi)
        labels += [(j, "o"), "S"]
        dims += [dS, dS]
        # bring (..., S, E) to the end, act with U on them
        e = labels.index("E")
        s = labels.index("S")
        order = [q for q in range(len(labels)) if q not in (s, e)] + [s, e]
        X = qla.permute(CMatrix(X, dims), order).data
        labels = [labels[q] for q in order]
        dims = [dims[q] for q in order]
        rest = int(np.prod(dims[:-2]))
        W = np.kron(np.eye(rest), np.asarray(U))
        X = W @ X @ W.conj().T
        labels[-2] = (j + 1, "i")
    e = labels.index("E")
    keep = [q for q in range(len(labels)) if q != e]
    X = qla.partial_trace(CMatrix(X, dims), keep).data
    labels = [labels[q] for q in keep]
    dims = [dims[q] for q in keep]
    target = [(0, "i")]
    for t in range(c.k):
        target += [(t, "o"), (t + 1, "i")]
    order = [labels.index(l) for l in target]
    X = qla.permute(CMatrix(X, dims), order).data
    return ProcessTensor(X, standard_slots(c.k, dS))


def simulate_circuit(c, ops):
    """Direct density-matrix simulation of ``ops`` interleaved with the circuit.

    ``ops`` holds one CP map (:class:`Channel`) per step followed by a final
    effect; returns the probability (used as an independent oracle).
    """
    dS, dE = c.d_S, c.d_E
    rho = c.rho_SE
    for A, U in zip(ops[:-1], c.unitaries):
        # A kron id_E via Kraus operators
        rho = sum(np.kron(K, np.eye(dE)) @ rho @ np.kron(K, np.eye(dE)).conj().T for K in A.kraus)
        rho = U @ rho @ U.conj().T
    E = np.kron(np.asarray(ops[-1]), np.eye(dE))
    return float(np.real(np.trace(E @ rho)))


def superchannel_build(rho_SE, U, d_S=2):
    """One-step process (superchannel) ``T[A] = tr_E{U (A kron id)[rho_SE] U^dagger}``."""
    return process_from_circuit(CircuitProcess(rho_SE, [U], d_S))


def apply_superchannel(T, A):
    """Output state of a one-step process for the operation ``A`` at time 0."""
    return born_multi(T, [A, "open"])


def markov_tensor(rho0, channels):
    """Product-form (Markovian) process ``rho0 kron Choi(E_1) kron ...``."""
    rho0 = np.asarray(qla._arr(rho0), dtype=complex)
    out = rho0
    slots = [Slot(0, "i", rho0.shape[0])]
    d_prev = rho0.shape[0]
    for t, E in enumerate(channels):
        if not is_cptp(E):
            raise ValueError(f"channel {t} is not CPTP")
        out = np.kron(out, op_matrix(E, E.d_in, E.d_out))
        slots += [Slot(t, "o", E.d_in), Slot(t + 1, "i", E.d_out)]
        d_prev = E.d_out
    return ProcessTensor(out, slots)


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------

@dataclass
class CausalityReport:
    passed: bool
    residuals: list
    failed_level: object
    trace: float
    trace_expected: float
    min_eig: float
    psd: bool

    def to_dict(self):
        return {"passed": self.passed, "psd": self.psd, "min_eig": self.min_eig,
                "trace": self.trace, "trace_expected": self.trace_expected,
                "failed_level": self.failed_level,
                "residuals": [{"level": lvl, "residual": r} for lvl, r in self.residuals]}


def check_causality(T, tol=CAUSAL_TOL):
    """Trace-hierarchy residuals ``||tr_{t i} Y - 1_{(t-1) o} kron Y_{t-1}||_F``.

    The report also carries the Choi trace and positivity; ``passed`` refers
    to the hierarchy (including the final unit trace) and positivity.
    """
    X = np.asarray(T.choi)
    slots = list(T.slots)
    residuals = []
    failed = None
    while slots:
        last = slots[-1]
        dims = [s.d for s in slots]
        Y = qla.partial_trace(CMatrix(X, dims), range(len(slots) - 1)).data if len(slots) > 1 \
            else np.array([[np.trace(X)]])
        slots = slots[:-1]
        if not slots:
            r = float(abs(Y[0, 0] - 1))
            residuals.append((f"{last.t}i", r))
            if r > tol and failed is None:
                failed = f"{last.t}i"
            break
        o = slots[-1]
        dims = [s.d for s in slots]
        cand = qla.partial_trace(CMatrix(Y, dims), range(len(slots) - 1)).data / o.d \
            if len(slots) > 1 else np.array([[np.trace(Y) / o.d]])
        rebuilt = np.kron(cand, np.eye(o.d))
        r = float(np.linalg.norm(Y - rebuilt))
        residuals.append((f"{last.t}i", r))
        if r > tol and failed is None:
            failed = f"{last.t}i"
        X = cand
        slots = slots[:-1]
    ok_psd, lo = qla.is_psd(T.choi)
    tr = float(np.real(np.trace(T.choi)))
    passed = failed is None and ok_psd
    return CausalityReport(passed, residuals, failed, tr, float(T.d_out_total()), lo, ok_psd)


def check_tester(element_sum, slots, tol=CAUSAL_TOL):
    """Mirrored hierarchy for the sum of a tester's elements.

    ``T = 1_{k i} kron T_{k-1}``, ``tr_{(k-1) o} T_{k-1} = 1_{(k-1) i} kron T_{k-2}``,
    ..., ``tr_{0 o} T_0 = 1_{0 i}``.  Returns ``(passed, residuals)``.
    """
    slots = make_slots(slots)
    X = np.asarray(qla._arr(element_sum), dtype=complex)
    residuals = []
    # peel the final input slot: must be an identity factor
    fin = slots[-1]
    dims = [s.d for s in slots]
    cand = qla.partial_trace(CMatrix(X, dims), range(len(slots) - 1)).data / fin.d \
        if len(slots) > 1 else np.array([[np.trace(X) / fin.d]])
    residuals.append((f"{fin.t}i", float(np.linalg.norm(X - np.kron(cand, np.eye(fin.d))))))
    X, slots = cand, slots[:-1]
    while slots:
        o = slots[-1]
        dims = [s.d for s in slots]
        Y = qla.partial_trace(CMatrix(X, dims), range(len(slots) - 1)).data if len(slots) > 1 \
            else np.array([[np.trace(X)]])
        slots = slots[:-1]
        i = slots[-1]
        dims = [s.d for s in slots]
        if len(slots) == 1:
            r = float(np.linalg.norm(Y - np.eye(i.d)))
            residuals.append((f"{o.t}o", r))
            break
        cand = qla.partial_trace(CMatrix(Y, dims), range(len(slots) - 1)).data / i.d
        residuals.append((f"{o.t}o", float(np.linalg.norm(Y - np.kron(cand, np.eye(i.d))))))
        X, slots = cand, slots[:-1]
    return all(r <= tol for _, r in residuals), residuals


# ---------------------------------------------------------------------------
# reduction and conditioning
# ---------------------------------------------------------------------------

def _trace_tail(T, last_keep):
    """Discard everything after the input slot of ``last_keep``."""
    keep = [j for j, s in enumerate(T.slots) if s.t < last_keep or (s.t == last_keep and s.dir == "i")]
    drop_o = [s.d for j, s in enumerate(T.slots) if j not in keep and s.dir == "o"]
    norm = float(np.prod(drop_o)) if drop_o else 1.0
    X = qla.partial_trace(T.cmatrix(), keep).data / norm
    return ProcessTensor(X, [T.slots[j] for j in keep], T.conditional)


def reduce(T, keep_times, ops=None):
    """Process tensor on a subset of times.

    Later times are traced out; dropped intermediate times receive the
    identity operation unless ``ops[t]`` supplies another CPTP operation;
    dropping times before the first kept one requires ``ops[t]`` and marks
    the result as conditional.

    Raises
    ------
    ValueError
        If an earlier time is dropped without an operation, or a supplied
        operation is not CPTP.
    """
    ops = dict(ops or {})
    keep = sorted(set(int(t) for t in keep_times))
    if not keep or not set(keep) <= set(T.times):
        raise ValueError(f"keep_times {keep} must be a non-empty subset of {T.times}")
    R = _trace_tail(T, keep[-1]) if keep[-1] < T.times[-1] else T
    dropped = [t for t in R.times if t not in keep]
    if not dropped:
        return R
    conditional = R.conditional
    mats = []
    for t in dropped:
        js = R.time_slots(t)
        di, do = R.slots[js[0]].d, R.slots[js[1]].d
        if t < keep[0]:
            if t not in ops:
                raise ValueError(f"dropping earlier time {t} requires an operation")
            conditional = True
        op = ops.get(t)
        if op is None:
            if di != do:
                raise ValueError(f"identity insertion at time {t} needs equal slot dims")
            mats.append(identity_op(di))
            continue
        if isinstance(op, Channel) and not is_cptp(op):
            raise ValueError(f"operation at time {t} is not CPTP")
        mats.append(op_matrix(op, di, do))
    A = mats[0]
    for m in mats[1:]:
        A = np.kron(A, m)
    idx = [j for t in dropped for j in R.time_slots(t)]
    X, rest = _contract(R.choi, R.dims, idx, A)
    return ProcessTensor(X, [R.slots[j] for j in rest], conditional)


def condition_on_past(T, element, times=None):
    """Conditional process given an operation (outcome) on ``times``.

    ``Y' = tr_times[Y A^T] / p`` with ``p = tr_times[Y A^T]`` normalized to the
    output dimensions of the remaining slots.

    Parameters
    ----------
    element : list or ndarray
        One operation per time in ``times`` (see :func:`op_matrix`) or one
        chronological Choi matrix over all their slots.
    times : list of int, optional
        Defaults to the first ``len(element)`` times.

    Raises
    ------
    ValueError
        If the outcome has probability below ``1e-12``.
    """
    if times is None:
        if not isinstance(element, (list, tuple)):
            raise ValueError("times must be given for a joint element")
        times = T.times[:len(element)]
    times = sorted(int(t) for t in times)
    if isinstance(element, (list, tuple)):
        A = _ops_matrix(T, times, element)
    else:
        A = np.asarray(qla._arr(element), dtype=complex)
    idx = [j for t in times for j in T.time_slots(t)]
    X, rest = _contract(T.choi, T.dims, idx, A)
    slots = [T.slots[j] for j in rest]
    dout = float(np.prod([s.d for s in slots if s.dir == "o"])) if slots else 1.0
    p = float(np.real(np.trace(X))) / dout
    if p < PROB_FLOOR:
        raise ValueError(f"conditioning event has probability {p:.3e}")
    return ProcessTensor(X / p, slots, conditional=True)


def as_channel(T):
    """Read a one-step process with a trivial first input as a channel."""
    if len(T.slots) != 3 or T.slots[0].d != 1:
        raise ValueError("not a one-step process with a trivial initial input")
    di, do = T.slots[1].d, T.slots[2].d
    C = qla.permute(CMatrix(T.choi, [di, do]), [1, 0]).data
    return Channel(di, do, "choi", C)


def channel_from_superchannel(T):
    """Choi (output, input) of the map obtained by feeding the identity into a one-step process."""
    return born_multi(T, [identity_op(T.slots[0].d), "open"])


# ---------------------------------------------------------------------------
# link product
# ---------------------------------------------------------------------------

def link_product(A, a_labels, B, b_labels, dims):
    """Link product ``A * B``: transpose ``A`` on shared labels, multiply, trace shared.

    Parameters
    ----------
    A, B : array_like
        Square matrices over the ordered label lists ``a_labels``, ``b_labels``.
    dims : dict
        Dimension for every label.

    Returns
    -------
    C : ndarray
    labels : list
        Non-shared labels of ``A`` followed by non-shared labels of ``B``.
    """
    a_labels, b_labels = list(a_labels), list(b_labels)
    A = np.asarray(qla._arr(A), dtype=complex)
    B = np.asarray(qla._arr(B), dtype=complex)
    letters = iter("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ")
    row, col = {}, {}
    for l in dict.fromkeys(a_labels + b_labels):
        row[l], col[l] = next(letters), next(letters)
    shared = [l for l in a_labels if l in b_labels]
    a_only = [l for l in a_labels if l not in b_labels]
    b_only = [l for l in b_labels if l not in a_labels]
    # A[x s''; x' s] B[s'' y; s y']
    sa = "".join(row[l] for l in a_labels) + "".join(col[l] for l in a_labels)
    sb = "".join(row[l] for l in b_labels) + "".join(col[l] for l in b_labels)
    # shared labels reuse the same (row, col) letters in A and B, which realises
    # the transpose on A followed by the trace over the shared spaces
    out_labels = a_only + b_only
    so = "".join(row[l] for l in out_labels) + "".join(col[l] for l in out_labels)
    ta = A.reshape([dims[l] for l in a_labels] * 2)
    tb = B.reshape([dims[l] for l in b_labels] * 2)
    for l in shared:
        if ta.shape[a_labels.index(l)] != tb.shape[b_labels.index(l)]:
            raise ValueError(f"dimension mismatch on shared label {l!r}")
    C = np.einsum(f"{sa},{sb}->{so}", ta, tb)
    n = int(np.prod([dims[l] for l in out_labels])) if out_labels else 1
    return C.reshape(n, n), out_labels


# ---------------------------------------------------------------------------
# tomography
# ---------------------------------------------------------------------------

def _time_dims(T):
    out = []
    last = T.times[-1]
    for t in T.times:
        js = T.time_slots(t)
        out.append(tuple(T.slots[j].d for j in js))
    return out


def ic_op_basis(d_i, d_o=None, seed=None):
    """Informationally complete family of CP operations for one time, chronological form.

    Measure-and-prepare products ``E_a^T kron rho_b`` (random IC POVM and
    random pure-state basis); preparations only when ``d_i = 1``; effects
    ``E_a^T`` at a final time (``d_o is None``).
    """
    from .tomo import random_ic_povm, random_state_basis
    rng = np.random.default_rng(seed)
    if d_o is None:
        return [E.T for E in random_ic_povm(d_i, rng.integers(2**31)).elements]
    states = random_state_basis(d_o, rng.integers(2**31)) if d_o > 1 else [np.ones((1, 1))]
    if d_i == 1:
        return [np.asarray(s) for s in states]
    effects = random_ic_povm(d_i, rng.integers(2**31)).elements
    return [np.kron(E.T, s) for E in effects for s in states]


def ic_basis_for(T, seed=None):
    rng = np.random.default_rng(seed)
    out = []
    for dd in _time_dims(T):
        s = int(rng.integers(2**31))
        out.append(ic_op_basis(dd[0], dd[1] if len(dd) == 2 else None, s))
    return out


def _blocked(choi, T):
    """Reshape the Choi to one vectorized (row, col) index per time."""
    tdims = [int(np.prod(dd)) for dd in _time_dims(T)]
    n = len(tdims)
    X = np.asarray(choi).reshape(tdims + tdims)
    axes = [a for t in range(n) for a in (t, t + n)]
    return X.transpose(axes).reshape([d * d for d in tdims]), tdims


def _unblock(Y, tdims):
    n = len(tdims)
    X = Y.reshape([d for d in tdims for _ in range(2)])
    axes = [2 * t for t in range(n)] + [2 * t + 1 for t in range(n)]
    N = int(np.prod(tdims))
    return X.transpose(axes).reshape(N, N)


def basis_probabilities(T, basis):
    """``P[x_0, ..., x_k] = tr[Y (A_{x_0} kron ... )^T]`` for all basis sequences."""
    Y, _ = _blocked(T.choi, T)
    out = Y
    for ops in basis:
        M = np.array([np.asarray(A).reshape(-1) for A in ops])  # (n_t, D_t^2)
        out = np.tensordot(out, M, axes=([0], [1]))  # contracted axis moves to the end
    return np.real(out)


def reconstruct_process(probs, basis, slots):
    """Linear-inversion process tomography ``Y = sum_x P(x) conj(D_{x_0}) kron ...``.

    Parameters
    ----------
    probs : ndarray
        Probabilities indexed by one basis label per time.
    basis : list of lists
        Per-time chronological operation matrices; each must span its space.
    slots : slot list of the target process.

    Raises
    ------
    ValueError
        If a per-time family is not informationally complete.
    """
    probs = np.asarray(probs, dtype=complex)
    dual_rows = []
    for ops in basis:
        D = dual_set(ops)  # raises on incomplete or dependent families
        n = np.asarray(ops[0]).shape[0]
        if len(ops) != n * n:
            raise ValueError("operation family is not informationally complete")
        dual_rows.append(np.array([np.conj(Dk).reshape(-1) for Dk in D.duals]))
    out = probs
    for M in dual_rows:
        out = np.tensordot(out, M, axes=([0], [0]))
    tdims = [int(round(np.sqrt(M.shape[1]))) for M in dual_rows]
    return ProcessTensor(_unblock(out, tdims), slots)


# ---------------------------------------------------------------------------
# worked processes
# ---------------------------------------------------------------------------

def shallow_pocket(gamma, t=None, steps=2, durations=None):
    """Qubit dephased by a Lorentzian-distributed environment field.

    The system is coupled through ``sigma_3``; a branch with signed elapsed
    time ``a`` (``+`` for ``|0>``, ``-`` for ``|1>`` per step) picks up the
    environment overlap ``<u^a psi|u^b psi> = exp(-gamma |a - b| / 2)``, so a
    single step of duration ``t`` dephases by ``exp(-gamma t)``.

    Parameters
    ----------
    gamma : float
        Lorentzian width.
    t : float
        Step duration (ignored when ``durations`` is given).
    steps : int
        Number of evolution steps (default 2).
    durations : sequence of float, optional
        Individual step durations.

    Returns
    -------
    ProcessTensor
        Slots ``(0,i,1), (0,o,2), (1,i,2), ..., (steps,i,2)``: a free
        preparation followed by ``steps`` evolution segments.
    """
    if durations is None:
        if t is None:
            raise ValueError("give t or durations")
        durations = [float(t)] * int(steps)
    durations = [float(x) for x in durations]
    if gamma < 0 or any(x < 0 for x in durations):
        raise ValueError("gamma*t must be non-negative")
    k = len(durations)
    pats = list(itertools.product(range(2), repeat=k))
    n = np.array([sum((1 - 2 * j) * dur for j, dur in zip(p, durations)) for p in pats])
    G = np.exp(-gamma * np.abs(n[:, None] - n[None, :]) / 2)
    # |j_0 j_0 j_1 j_1 ...> over (0o, 1i, 1o, 2i, ...)
    idx = []
    for p in pats:
        r = 0
        for j in p:
            r = r * 4 + 3 * j
        idx.append(r)
    N = 4 ** k
    Y = np.zeros((N, N), dtype=complex)
    Y[np.ix_(idx, idx)] = G
    slots = [Slot(0, "i", 1)]
    for s in range(k):
        slots += [Slot(s, "o", 2), Slot(s + 1, "i", 2)]
    return ProcessTensor(Y, slots)


def compressed_choi(T):
    """Restriction of a shallow-pocket Choi to the span of ``|j j>`` pairs per step."""
    k = (len(T.slots) - 1) // 2
    idx = []
    for p in itertools.product(range(2), repeat=k):
        r = 0
        for j in p:
            r = r * 4 + 3 * j
        idx.append(r)
    return np.asarray(T.choi)[np.ix_(idx, idx)]


def pocket_channel(gamma, durations, ops=()):
    """Channel from the initial preparation slot to the final output, with
    ``ops`` applied at the intermediate times of a shallow-pocket process."""
    T = shallow_pocket(gamma, durations=durations)
    if len(durations) == 1:
        return as_channel(T)
    if len(ops) != len(durations) - 1:
        raise ValueError("one operation per intermediate time required")
    R = condition_on_past(T, list(ops), times=list(range(1, len(durations))))
    return as_channel(R)


def stern_gerlach_process(steps=2):
    """Trivial dynamics on a qubit starting in ``|+x>`` (identity between times)."""
    from .channels import identity_channel
    plus = np.array([1, 1]) / np.sqrt(2)
    return markov_tensor(qla.proj(plus), [identity_channel(2) for _ in range(steps)])


def initial_correlation_state(a=(0.0, 0.0, 0.0), g=0.0):
    """``rho_SE = (1/4)(I kron I + a.sigma kron I + g sigma_2 kron sigma_3)``."""
    a = np.asarray(a, dtype=float)
    rho = np.kron(qla.I2, qla.I2) + sum(ai * np.kron(P, qla.I2) for ai, P in zip(a, qla.PAULIS[1:]))
    rho = rho + g * np.kron(qla.SY, qla.SZ)
    return rho / 4


def initial_correlation_process(a=(0.0, 0.0, 0.0), g=0.0, omega_t=0.0):
    """Superchannel of a qubit correlated with a qubit environment under
    ``exp(-i omega t (XX + YY + ZZ))``."""
    return superchannel_build(initial_correlation_state(a, g), xyz_coupling(omega_t), 2)


def initial_correlation_map(g=0.0, omega_t=0.0):
    """Linear map on the system alone induced by correlated initial states.

    Extending ``I -> I - g c s X`` and ``sigma_j -> c^2 sigma_j`` (with
    ``c = cos 2wt``, ``s = sin 2wt``) linearly gives a trace-preserving map
    that is not completely positive when ``|g c s| > 1 - c^2``.
    """
    c, s = np.cos(2 * omega_t), np.sin(2 * omega_t)

    def act(X):
        coeffs = [np.trace(P @ X) / 2 for P in qla.PAULIS]
        out = coeffs[0] * (qla.I2 - g * c * s * qla.SX)
        return out + c * c * sum(a * P for a, P in zip(coeffs[1:], qla.PAULIS[1:]))

    choi = np.zeros((4, 4), dtype=complex)
    for k in range(2):
        for l in range(2):
            E = np.zeros((2, 2))
            E[k, l] = 1
            choi += np.kron(act(E), E)
    return Channel(2, 2, "choi", choi)
