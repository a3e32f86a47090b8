"""
Classical stochastic processes: joint distributions, stochastic matrices,
Markov order, hidden-Markov embedding, conditional mutual information and
data-processing checks.

Conventions
-----------
* A :class:`JointDist` over times ``0..k-1`` stores the tensor
  ``P[x_{k-1}, ..., x_0]`` (latest time on axis 0).
* A :class:`StochMatrix` is column-stochastic: ``G[x, y] = P(x | y)``.
* Histories fed to an order-``m`` matrix are ordered most-recent first, i.e.
  the column index of ``Gamma^(m)`` is ``(x_{k-1}, ..., x_{k-m})`` row-major.
"""
import csv
import io
import itertools
import json
from dataclasses import dataclass, field

import numpy as np

STOCH_TOL = 1e-12


# ---------------------------------------------------------------------------
# stochastic matrices
# ---------------------------------------------------------------------------

class StochMatrix:
    """Column-stochastic matrix ``G[x, y] = P(x | y)``.

    Raises
    ------
    ValueError
        On negative entries or columns that do not sum to one.
    """

    def __init__(self, matrix, tol=1e-10):
        G = np.array(matrix, dtype=float)
        if G.ndim != 2:
            raise ValueError("stochastic matrix must be 2-D")
        if np.any(G < -tol):
            raise ValueError(f"negative entry {G.min():.3e}")
        err = np.abs(G.sum(axis=0) - 1).max()
        if err > tol:
            raise ValueError(f"columns do not sum to one (error {err:.3e})")
        self.matrix = G

    @property
    def shape(self):
        return self.matrix.shape

    def is_bistochastic(self, tol=1e-10):
        G = self.matrix
        return G.shape[0] == G.shape[1] and float(np.abs(G.sum(axis=1) - 1).max()) <= tol

    def __matmul__(self, other):
        if isinstance(other, StochMatrix):
            return StochMatrix(self.matrix @ other.matrix)
        return apply(self, other)

    def __repr__(self):
        return f"StochMatrix(shape={self.shape})"


def _mat(G):
    return G.matrix if isinstance(G, StochMatrix) else np.asarray(G, dtype=float)


def is_stochastic(G, tol=1e-10):
    try:
        StochMatrix(_mat(G), tol)
    except ValueError:
        return False
    return True


def is_bistochastic(G, tol=1e-10):
    return is_stochastic(G, tol) and StochMatrix(_mat(G), tol).is_bistochastic(tol)


def apply(G, p):
    """``P' = G P``.

    Raises
    ------
    ValueError
        On dimension mismatch.
    """
    G = _mat(G)
    p = np.asarray(p, dtype=float)
    if G.shape[1] != p.shape[0]:
        raise ValueError(f"dimension mismatch: matrix {G.shape} vs distribution {p.shape}")
    return G @ p


def chapman(mats):
    """Compose a chain of transitions given in chronological order.

    ``chapman([G1, G2, G3]) = G3 G2 G1``.
    """
    mats = [_mat(G) for G in mats]
    out = mats[0]
    for G in mats[1:]:
        if G.shape[1] != out.shape[0]:
            raise ValueError("dimension mismatch in chain")
        out = G @ out
    return StochMatrix(out)


# ---------------------------------------------------------------------------
# joint distributions
# ---------------------------------------------------------------------------

class JointDist:
    """Joint distribution ``P[x_{k-1}, ..., x_0]``.

    Parameters
    ----------
    probs : array_like
        Either the tensor itself or a flat row-major vector (then ``dims``
        is required).
    dims : sequence of int, optional
        Outcome counts per axis, latest time first.
    """

    def __init__(self, probs, dims=None, tol=STOCH_TOL):
        P = np.asarray(probs, dtype=float)
        if dims is not None:
            P = P.reshape(tuple(int(d) for d in dims))
        if np.any(P < -tol):
            raise ValueError(f"negative probability {P.min():.3e}")
        if abs(P.sum() - 1) > max(tol, 1e-12) * max(1, P.size) ** 0.5 and abs(P.sum() - 1) > 1e-10:
            raise ValueError(f"probabilities sum to {P.sum():.15g}")
        self.P = np.clip(P, 0, None)

    @property
    def k(self):
        return self.P.ndim

    @property
    def dims(self):
        """Outcome counts, latest time first."""
        return list(self.P.shape)

    def axis(self, t):
        """Array axis of time ``t`` (times count from 0 chronologically)."""
        if not 0 <= t < self.k:
            raise ValueError(f"time {t} out of range")
        return self.k - 1 - t

    def prob(self, outcomes):
        """``P(x_0, ..., x_{k-1})`` for chronologically ordered outcomes."""
        return float(self.P[tuple(reversed(outcomes))])

    def to_dict(self):
        return {"dims": self.dims, "probs": [float(v) for v in self.P.reshape(-1)]}

    @classmethod
    def from_dict(cls, d):
        return cls(d["probs"], d["dims"])

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    def allclose(self, other, atol=1e-10):
        return self.P.shape == other.P.shape and np.allclose(self.P, other.P, atol=atol, rtol=0)

    def __repr__(self):
        return f"JointDist(k={self.k}, dims={self.dims})"


def marginalize(J, keep):
    """Marginal on the times ``keep`` (chronological indices)."""
    keep = sorted(set(int(t) for t in keep))
    for t in keep:
        J.axis(t)
    drop = tuple(J.axis(t) for t in range(J.k) if t not in keep)
    return JointDist(J.P.sum(axis=drop))


def product_dist(marginals):
    """Independent process from chronologically ordered single-time marginals."""
    P = np.array(1.0)
    for p in marginals:
        P = np.multiply.outer(np.asarray(p, dtype=float), P)
    return JointDist(P)


def chain_joint(initial, transitions):
    """Joint distribution of a Markov chain.

    ``P(x_n, ..., x_0) = G_n[x_n, x_{n-1}] ... G_1[x_1, x_0] p_0[x_0]``.
    """
    P = np.asarray(initial, dtype=float)
    for G in transitions:
        G = _mat(G)
        if G.shape[1] != P.shape[0]:
            raise ValueError("dimension mismatch in chain")
        # new axis 0 is the newest outcome
        P = np.einsum("ab,b...->ab...", G, P)
    return JointDist(P)


def two_point_from_chain(transitions, initial, j=0, k=None):
    """Conditional ``P(x_k | x_j)`` by explicit summation over trajectories.

    Columns belonging to zero-probability ``x_j`` are set to ``nan``.
    """
    J = chain_joint(initial, transitions)
    k = J.k - 1 if k is None else k
    return conditional(J, k, [j])


def conditional(J, target, given):
    """Conditional table ``P(x_target | x_given)`` as a ``(d, prod d_given)`` array.

    ``given`` lists times most-recent first (column index is row-major over
    that order).  Columns with zero conditioning probability are ``nan``.
    """
    given = list(given)
    M = marginalize(J, [target] + given)
    times = sorted([target] + given)
    # reorder axes to (target, given...)
    axes = [len(times) - 1 - times.index(t) for t in [target] + given]
    T = np.transpose(M.P, axes)
    d = T.shape[0]
    T = T.reshape(d, -1)
    norm = T.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        C = np.where(norm > 0, T / np.where(norm > 0, norm, 1), np.nan)
    return C


def consistency_check(family, tol=1e-10):
    """Kolmogorov consistency of a family ``{times: JointDist}``.

    Every member whose times are a subset of another member's times must
    equal the corresponding marginal.

    Returns
    -------
    consistent : bool
    violations : list of dict
    """
    items = [(tuple(sorted(k)), v) for k, v in family.items()]
    violations = []
    for (ta, Ja), (tb, Jb) in itertools.permutations(items, 2):
        if set(ta) < set(tb):
            pos = [tb.index(t) for t in ta]
            M = marginalize(Jb, pos)
            if M.P.shape != Ja.P.shape:
                raise ValueError(f"incompatible dims between {ta} and {tb}")
            dev = float(np.abs(M.P - Ja.P).max())
            if dev > tol:
                violations.append({"subset": list(ta), "superset": list(tb), "deviation": dev})
    return not violations, violations


def markov_order_estimate(J, tol=1e-9):
    """Smallest ``l`` such that every conditional ``P(x_t | x_{t-1}, ..., x_0)``
    only depends on the last ``l`` outcomes (zero-probability histories skipped).
    """
    if J.k < 2:
        raise ValueError("at least two times are required")
    for l in range(J.k):
        ok = True
        for t in range(1, J.k):
            if l >= t:
                continue
            full = conditional(J, t, list(range(t - 1, -1, -1)))
            short = conditional(J, t, list(range(t - 1, t - 1 - l, -1)))
            # broadcast: full-history column index = (recent l, older) row-major
            n_old = full.shape[1] // short.shape[1]
            ref = np.repeat(short, n_old, axis=1)
            mask = ~np.isnan(full[0])
            if np.any(np.abs(full[:, mask] - ref[:, mask]) > tol):
                ok = False
                break
        if ok:
            return l
    return J.k - 1


# ---------------------------------------------------------------------------
# higher-order chains and the hidden-Markov embedding
# ---------------------------------------------------------------------------

def _order_of(G, d):
    m = int(round(np.log(G.shape[1]) / np.log(d))) if G.shape[1] > 1 else 0
    if d ** m != G.shape[1]:
        raise ValueError(f"matrix with {G.shape[1]} columns is not an order-m map on {d} outcomes")
    return m


def hidden_markov_embed(G):
    """Square map ``Xi`` on the last ``m`` outcomes from ``Gamma^(m)``.

    ``Xi[(y_0, ..., y_{m-1}), (x_1, ..., x_m)] = Gamma[y_0 | x] prod_i delta(y_i, x_i)``
    with both tuples ordered most-recent first.
    """
    G = StochMatrix(_mat(G)).matrix
    d = G.shape[0]
    m = _order_of(G, d)
    if m <= 1:
        return StochMatrix(G)
    D = d ** m
    Xi = np.zeros((D, D))
    for col, x in enumerate(itertools.product(range(d), repeat=m)):
        for y0 in range(d):
            y = (y0,) + x[:-1]
            Xi[np.ravel_multi_index(y, (d,) * m), col] += G[y0, col]
    return StochMatrix(Xi)


def simulate_order_m(G, initial, steps):
    """Joint distribution of an order-``m`` process by trajectory enumeration.

    Parameters
    ----------
    G : (d, d**m) array
    initial : (d**m,) array
        ``P(x_{m-1}, ..., x_0)`` flattened row-major (most recent first).
    steps : int
        Number of additional outcomes.

    Returns
    -------
    JointDist over ``m + steps`` times.
    """
    G = _mat(G)
    d = G.shape[0]
    m = _order_of(G, d)
    P0 = np.asarray(initial, dtype=float).reshape((d,) * m)
    k = m + steps
    P = np.zeros((d,) * k)
    for traj in itertools.product(range(d), repeat=k):  # chronological
        p = P0[tuple(reversed(traj[:m]))]
        for t in range(m, k):
            if p == 0:
                break
            hist = tuple(reversed(traj[t - m:t]))
            p *= G[traj[t], np.ravel_multi_index(hist, (d,) * m)]
        P[tuple(reversed(traj))] = p
    return JointDist(P)


# ---------------------------------------------------------------------------
# entropies, CMI, recovery and DPI
# ---------------------------------------------------------------------------

def shannon(p):
    """Shannon entropy in nats."""
    p = np.asarray(p, dtype=float).reshape(-1)
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def rel_entropy(p, q):
    """``D(p || q)`` in nats; ``inf`` if ``supp p`` is not inside ``supp q``."""
    p = np.asarray(p, dtype=float).reshape(-1)
    q = np.asarray(q, dtype=float).reshape(-1)
    m = p > 0
    if np.any(q[m] <= 0):
        return float("inf")
    return float(max(0.0, (p[m] * (np.log(p[m]) - np.log(q[m]))).sum()))


def mutual_info(P):
    """``H(X:Y)`` of a joint matrix ``P[x, y]``."""
    P = np.asarray(P, dtype=float)
    return shannon(P.sum(axis=1)) + shannon(P.sum(axis=0)) - shannon(P)


def _block(J, times):
    return shannon(marginalize(J, times).P) if times else 0.0


def cmi(J, split):
    """``H(F:H|M)`` for a split ``{"F": times, "M": times, "H": times}``."""
    F, M, H = (list(split.get(k, [])) for k in ("F", "M", "H"))
    return max(0.0, _block(J, F + M) + _block(J, H + M) - _block(J, M) - _block(J, F + M + H))


def recovery(J, split):
    """Recovery ``P~(F, M, H) = P(F | M) P(M, H)`` and its max-entry error.

    Zero-probability memory configurations contribute zero.
    """
    F, M, H = (sorted(split.get(k, [])) for k in ("F", "M", "H"))
    times = sorted(F + M + H)
    JJ = marginalize(J, times)
    pos = {t: i for i, t in enumerate(times)}
    sub = lambda ts: [pos[t] for t in ts]
    P_FM = marginalize(JJ, sub(F + M))
    P_MH = marginalize(JJ, sub(M + H))
    P_M = marginalize(JJ, sub(M))
    out = np.zeros_like(JJ.P)
    n = len(times)
    for idx in itertools.product(*[range(s) for s in JJ.P.shape]):
        x = {times[n - 1 - a]: v for a, v in enumerate(idx)}

        def val(D, ts):
            ts = sorted(ts)
            return D.P[tuple(x[t] for t in reversed(ts))] if ts else 1.0

        pm = val(P_M, M)
        if pm > 0:
            out[idx] = val(P_FM, F + M) * val(P_MH, M + H) / pm
    err = float(np.abs(out - JJ.P).max())
    return JointDist(out), err


def kolmogorov_distance(p, q):
    return 0.5 * float(np.abs(np.asarray(p, float) - np.asarray(q, float)).sum())


@dataclass
class DPIReport:
    trace_before: float
    trace_after: float
    rel_before: float
    rel_after: float
    mi_before: float
    mi_after: float
    contracts: bool
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return {k: getattr(self, k) for k in ("trace_before", "trace_after", "rel_before",
                                              "rel_after", "mi_before", "mi_after", "contracts")}


def dpi_suite(p, q, G, tol=1e-12):
    """Contraction of trace distance, relative entropy and mutual information under ``G``.

    The mutual information is evaluated on the perfectly correlated joint
    ``P(x, r) = p(x) delta(x, r)`` with ``G`` acting on ``x``.
    """
    G = _mat(G)
    p, q = np.asarray(p, float), np.asarray(q, float)
    Gp, Gq = apply(G, p), apply(G, q)
    tb, ta = kolmogorov_distance(p, q), kolmogorov_distance(Gp, Gq)
    rb, ra = rel_entropy(p, q), rel_entropy(Gp, Gq)
    J = np.diag(p)
    mb, ma = mutual_info(J), mutual_info(G @ J)
    ok = ta <= tb + tol and (ra <= rb + tol or np.isinf(rb)) and ma <= mb + tol
    return DPIReport(tb, ta, rb, ra, mb, ma, bool(ok))


def euclidean_counterexample(P=(1.0, 0.0), R=(0.0, 1.0)):
    """Two-bit example where discarding a uniform bit *increases* the Euclidean distance.

    Returns the entrywise initial difference (each entry is half the final
    difference), the final difference and both Euclidean norms.
    """
    P, R = np.asarray(P, float), np.asarray(R, float)
    u = np.full(2, 0.5)
    init_diff = np.kron(P, u) - np.kron(R, u)
    discard = np.kron(np.eye(len(P)), np.ones((1, 2)))  # sums over the second bit
    final_diff = discard @ np.kron(P, u) - discard @ np.kron(R, u)
    n0, n1 = float(np.linalg.norm(init_diff)), float(np.linalg.norm(final_diff))
    return {"initial_difference": init_diff.tolist(), "final_difference": final_diff.tolist(),
            "entry_ratio": float(np.max(np.abs(init_diff)) / np.max(np.abs(final_diff))),
            "initial_norm": n0, "final_norm": n1, "violates_dpi": bool(n1 > n0 + 1e-15)}


# ---------------------------------------------------------------------------
# worked processes
# ---------------------------------------------------------------------------

@dataclass
class ClassicalProcess:
    """A named classical process with its stochastic matrices."""
    kind: str
    params: dict
    matrices: dict
    joint_fn: object = None
    extras: dict = field(default_factory=dict)

    def joint(self, k=None):
        if self.joint_fn is None:
            raise ValueError(f"process {self.kind!r} has no joint distribution")
        return self.joint_fn(k) if k is not None else self.joint_fn()

    def to_dict(self, k=None):
        out = {"kind": self.kind, "params": self.params,
               "matrices": {n: _mat(G).tolist() for n, G in self.matrices.items()}}
        if self.joint_fn is not None:
            out["joint"] = self.joint(k).to_dict()
        out.update(self.extras)
        return out


def fair_die(d=6):
    return StochMatrix(np.full((d, d), 1.0 / d))


def biased_die(weights):
    w = np.asarray(weights, float)
    if np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
        raise ValueError("weights must form a distribution")
    return StochMatrix(np.tile(w[:, None], (1, len(w))))


def perturbed_die(p=0.5, q=0.115, s=0.04):
    """Six-sided die nudged to a neighbouring face (``q``) or flipped over (``s``).

    Faces on opposite sides sum to 7, so the ``s`` entries sit on the anti-diagonal.
    """
    if min(p, q, s) < 0 or abs(p + 4 * q + s - 1) > 1e-12:
        raise ValueError("need p, q, s >= 0 with p + 4q + s = 1")
    G = np.full((6, 6), q)
    np.fill_diagonal(G, p)
    for i in range(6):
        G[5 - i, i] = s
    return StochMatrix(G)


def escalating_die(intensities=(1, 2, 4, 8), full=8.0, d=6):
    """``Gamma^(mu)`` for ``mu = 0..3`` and the hidden chain on ``(mu, face)``.

    A shake of intensity ``I`` randomizes the face with probability
    ``min(1, I / full)``; the intensity doubles every time the face is
    unchanged and resets after a change or after the strongest shake.
    The intensity scale is a free (non-canonical) parameter.
    """
    lam = [min(1.0, float(I) / full) for I in intensities]
    mats = [StochMatrix((1 - l) * np.eye(d) + l * np.full((d, d), 1.0 / d)) for l in lam]
    n = len(mats)
    H = np.zeros((n * d, n * d))  # state index mu*d + face
    for mu in range(n):
        G = mats[mu].matrix
        for y in range(d):
            for x in range(d):
                nmu = 0 if (x != y or mu == n - 1) else mu + 1
                H[nmu * d + x, mu * d + y] += G[x, y]
    return mats, StochMatrix(H)


def _hidden_joint(H, init, d, n_hidden, k):
    """Observed joint of a hidden chain whose states are ``(hidden, face)``."""
    P = np.zeros((d,) * k)
    # forward recursion over observed trajectories
    alpha = {(): np.asarray(init, float)}
    for t in range(k):
        new = {}
        for hist, vec in alpha.items():
            for x in range(d):
                mask = np.zeros(n_hidden * d)
                mask[x::d] = 1
                v = vec * mask
                if t < k - 1:
                    new[hist + (x,)] = H @ v
                else:
                    P[tuple(reversed(hist + (x,)))] = v.sum()
        alpha = new
    return JointDist(P)


def coin_with_interventions(p=0.3, instrument="flip", initial="h"):
    """Perturbed coin (flips with probability ``p``) probed at ``t_1`` by an instrument.

    Instruments act after the outcome is recorded: ``flip`` (h<->t),
    ``identity`` (leave), ``reset`` (always to tails).  Outcome 0 is heads.
    """
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    G = StochMatrix([[1 - p, p], [p, 1 - p]])
    ops = {"flip": np.array([[0.0, 1.0], [1.0, 0.0]]), "identity": np.eye(2),
           "reset": np.array([[0.0, 0.0], [1.0, 1.0]])}
    if instrument not in ops:
        raise ValueError(f"unknown instrument {instrument!r}")
    A = StochMatrix(ops[instrument])
    p0 = np.array([1.0, 0.0]) if initial == "h" else np.array([0.0, 1.0])
    # joint over (F_2, F_1): P(f2, f1) = G[f2, A(f1)] G[f1, .] p0
    p1 = apply(G, p0)
    P = np.zeros((2, 2))
    for f1 in range(2):
        post = A.matrix[:, f1] * p1[f1]
        P[:, f1] = apply(G, post)
    return JointDist(P), G, A


def parity_process():
    """Four bits with ``x_3 = x_0 + x_1 + x_2 (mod 2)`` and uniform ``x_0..x_2``."""
    P = np.zeros((2,) * 4)
    for x in itertools.product(range(2), repeat=4):  # chronological x_0..x_3
        if (x[0] + x[1] + x[2]) % 2 == x[3]:
            P[tuple(reversed(x))] = 1 / 8
    return JointDist(P)


def long_memory(p=0.6, s=3, d=2, k=None):
    """Process where ``x_t`` copies ``x_{t-s}`` with probability ``p``.

    ``P(x_t | x_{t-s}) = p delta + (1 - p)/d``; the first ``s`` outcomes are uniform.
    """
    if not 0 <= p <= 1 or s < 1 or d < 2:
        raise ValueError("need 0 <= p <= 1, s >= 1, d >= 2")
    k = s + 2 if k is None else k
    T = p * np.eye(d) + (1 - p) / d
    P = np.zeros((d,) * k)
    for x in itertools.product(range(d), repeat=k):
        v = 1.0 / d ** min(s, k)
        for t in range(s, k):
            v *= T[x[t], x[t - s]]
        P[tuple(reversed(x))] = v
    return JointDist(P), StochMatrix(T)


def classical_factory(kind, **params):
    """Named classical processes.

    Kinds: ``fair_die``, ``biased_die``, ``perturbed_die``, ``escalating_die``,
    ``coin_with_interventions``, ``parity_process``, ``long_memory``.
    """
    kind = kind.replace("-", "_")
    if kind == "fair_die":
        d = int(params.get("d", 6))
        G = fair_die(d)
        return ClassicalProcess(kind, {"d": d}, {"Gamma0": G},
                                lambda k=3: chain_joint(np.full(d, 1 / d), [G] * (k - 1)))
    if kind == "biased_die":
        w = params.get("weights", [0.3, 0.2, 0.2, 0.1, 0.1, 0.1])
        G = biased_die(w)
        return ClassicalProcess(kind, {"weights": list(w)}, {"Gamma0": G},
                                lambda k=3: chain_joint(np.asarray(w), [G] * (k - 1)))
    if kind == "perturbed_die":
        pr = {k: float(params.get(k, v)) for k, v in (("p", 0.5), ("q", 0.115), ("s", 0.04))}
        G = perturbed_die(**pr)
        init = np.eye(6)[int(params.get("start", 0))]
        return ClassicalProcess(kind, pr, {"Gamma1": G},
                                lambda k=3: chain_joint(init, [G] * (k - 1)))
    if kind == "escalating_die":
        full = float(params.get("full", 8.0))
        mats, H = escalating_die(full=full)
        init = np.zeros(24)
        init[int(params.get("start", 0))] = 1.0
        named = {f"Gamma_mu{m}": G for m, G in enumerate(mats)}
        named["hidden"] = H
        return ClassicalProcess(kind, {"full": full}, named,
                                lambda k=3: _hidden_joint(H.matrix, init, 6, 4, k))
    if kind == "coin_with_interventions":
        p = float(params.get("p", 0.3))
        inst = params.get("instrument", "flip")
        J, G, A = coin_with_interventions(p, inst)
        ph = float(J.P[0].sum())
        return ClassicalProcess(kind, {"p": p, "instrument": inst}, {"Gamma": G, "instrument": A},
                                lambda k=None: J, {"P_F2_heads": ph})
    if kind == "parity_process":
        J = parity_process()
        pair = {f"Gamma_{a}{b}": StochMatrix(conditional(J, b, [a]))
                for a in range(4) for b in range(a + 1, 4)}
        return ClassicalProcess(kind, {}, pair, lambda k=None: J)
    if kind == "long_memory":
        p, s, d = float(params.get("p", 0.6)), int(params.get("s", 3)), int(params.get("d", 2))
        J, T = long_memory(p, s, d, params.get("k"))
        return ClassicalProcess(kind, {"p": p, "s": s, "d": d}, {"T": T}, lambda k=None: J)
    raise ValueError(f"unknown classical process {kind!r}")


def conditional_to_csv(C, target_label="x", given_label="history"):
    """CSV text of a conditional table (rows: outcome, history index, probability)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([target_label, given_label, "probability"])
    C = np.asarray(C, float)
    for col in range(C.shape[1]):
        for row in range(C.shape[0]):
            v = C[row, col]
            w.writerow([row, col, "" if np.isnan(v) else repr(float(v))])
    return buf.getvalue()
