"""
Command-line front end.

Exit codes: 0 on success / passed check, 2 on a failed check, 1 on usage or
input errors.  JSON output is deterministic (sorted keys, fixed seeds).
"""
import argparse
import csv
import io
import json
import sys

import numpy as np

from . import channels as ch
from . import classical as cl
from . import memory as mem
from . import proctensor as pt
from . import qla
from . import tomo
from .qla import CMatrix

EXIT_OK, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# serialization helpers
# ---------------------------------------------------------------------------

def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        if np.iscomplexobj(x):
            return CMatrix(x).to_dict() if x.ndim == 2 else {"re": x.real.tolist(), "im": x.imag.tolist()}
        return x.tolist()
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if np.isfinite(v) else str(v)
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    return x


def dumps(obj):
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


def _emit(args, obj, rows=None, header=None):
    if args.format == "csv":
        if rows is None:
            raise UsageError("this command has no CSV output")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in r])
        text = buf.getvalue()
    else:
        text = dumps(obj)
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _load(path):
    if not path:
        raise UsageError("--in is required")
    with open(path) as f:
        return json.load(f)


def _load_process(path):
    d = _load(path)
    return pt.ProcessTensor.from_dict(d.get("process", d))


def _load_channel(path):
    d = _load(path)
    return ch.channel_from_dict(d.get("channel", d))


def _parse_split(items):
    split = {}
    for it in items or []:
        key, _, val = it.partition("=")
        if key not in ("F", "M", "H") or not val:
            raise UsageError(f"bad split item {it!r}; use F=2 M=1 H=0")
        split[key] = [int(v) for v in val.split(",") if v != ""]
    if not split:
        raise UsageError("--split is required")
    return split


# ---------------------------------------------------------------------------
# model construction
# ---------------------------------------------------------------------------

def _gamma_t(args):
    return float(args.gamma_t)


def build_model(args):
    """Process tensor for ``--model``."""
    m = args.model
    if m == "shallow-pocket":
        return pt.shallow_pocket(1.0, _gamma_t(args), steps=args.steps)
    if m == "stern-gerlach":
        return pt.stern_gerlach_process(args.steps)
    if m == "initial-correlations":
        return pt.initial_correlation_process((args.a1, args.a2, args.a3), args.g, args.omega_t)
    if m == "markov":
        rho0 = qla.random_state(2, seed=args.seed)
        chans = [ch.random_cptp(seed=args.seed + 1 + j) for j in range(args.steps)]
        return pt.markov_tensor(rho0, chans)
    if m == "circuit":
        rng = np.random.default_rng(args.seed)
        rho = qla.random_state(4, seed=int(rng.integers(2 ** 31)))
        us = [qla.haar_unitary(4, seed=int(rng.integers(2 ** 31))) for _ in range(args.steps)]
        return pt.process_from_circuit(pt.CircuitProcess(rho, us, d_S=2, d_E=2))
    raise UsageError(f"unknown model {m!r}")


def _channel_family(args):
    m = args.model
    if m == "dephasing":
        return lambda t: ch.dephasing(args.gamma, t)
    if m == "xz-oscillatory":
        return lambda t: ch.xz_oscillatory(args.omega, t)
    if m == "shallow-pocket":
        # X applied at t_x (when t exceeds it)
        tx = args.t_x

        def fam(t):
            if t <= tx:
                return pt.pocket_channel(args.gamma, [t])
            return pt.pocket_channel(args.gamma, [tx, t - tx], [ch.unitary_channel(qla.SX)])
        return fam
    raise UsageError(f"unknown channel family {m!r}")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _pocket_mi(T):
    return mem.slot_mutual_info(T, [1, 2], [3, 4])


def cmd_demo(args):
    name = args.name
    if name == "shallow-pocket":
        T = pt.shallow_pocket(1.0, _gamma_t(args), steps=2)
        nr, conf = mem.nonmarkov_rel_entropy(T)
        rep = pt.check_causality(T)
        out = {"gamma_t": _gamma_t(args), "compressed_choi": pt.compressed_choi(T).real,
               "mutual_information": _pocket_mi(T), "causal": rep.passed,
               "rel_entropy_measure": nr, "confusion": conf,
               "bond_dims": mem.mpo_bond_dims(T)}
        _emit(args, out)
        return EXIT_OK
    if name == "stern-gerlach":
        T = pt.stern_gerlach_process(2)
        luders = tomo.projective_instrument(d=2)
        h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
        xinst = tomo.projective_instrument(h, d=2)
        zeff = tomo.projective_povm(d=2).elements
        seqs = {}
        for a in range(2):
            for b in range(2):
                for c in range(2):
                    p = pt.born_multi(T, [luders.elements[a], xinst.elements[b], zeff[c]])
                    seqs[f"z{'+-'[a]} x{'+-'[b]} z{'+-'[c]}"] = float(np.real(p))
        marg = float(np.real(pt.born_multi(T, [luders.elements[0], sum_channel(xinst), zeff[0]])))
        ident = float(np.real(pt.born_multi(T, [luders.elements[0], ch.identity_channel(2), zeff[0]])))
        out = {"sequences": seqs, "summed_over_x": marg, "no_measurement": ident}
        _emit(args, out, [(k, v) for k, v in sorted(seqs.items())], ["sequence", "probability"])
        return EXIT_OK
    if name == "initial-correlations":
        a = (args.a1, args.a2, args.a3)
        T = pt.initial_correlation_process(a, args.g, args.omega_t)
        ok, lo = qla.is_psd(T.choi)
        E = pt.initial_correlation_map(args.g, args.omega_t)
        ev = qla.herm_eig(E.choi)[0]
        grid = []
        for g in np.linspace(0, 1, 5):
            for wt in np.linspace(0, np.pi / 2, 7):
                lo_g = float(qla.min_eig(pt.initial_correlation_map(g, wt).choi))
                grid.append({"g": float(g), "omega_t": float(wt), "min_eig": lo_g, "ncp": lo_g < -1e-12})
        out = {"params": {"a": list(a), "g": args.g, "omega_t": args.omega_t},
               "superchannel_choi": T.choi, "psd": ok, "min_eig": lo,
               "example_map_eigenvalues": ev, "ncp_grid": grid}
        _emit(args, out)
        return EXIT_OK
    if name.startswith("classical-"):
        kind = name[len("classical-"):]
        params = {}
        for key in ("p", "q", "s", "instrument", "d"):
            v = getattr(args, key, None)
            if v is not None:
                params[key] = v
        if kind.replace("-", "_") == "long_memory" and "s" in params:
            params["s"] = int(params["s"])
        proc = cl.classical_factory(kind, **params)
        out = proc.to_dict(args.steps + 1 if kind.replace("-", "_") in
                           ("fair_die", "biased_die", "perturbed_die", "escalating_die") else None)
        _emit(args, out)
        return EXIT_OK
    raise UsageError(f"unknown demo {name!r}")


def sum_channel(inst):
    total = sum(A.choi for A in inst.elements)
    e = inst.elements[0]
    return ch.Channel(e.d_in, e.d_out, "choi", total)


def cmd_build(args):
    T = build_model(args)
    out = {"model": args.model, "process": T.to_dict()}
    if args.model == "shallow-pocket":
        out["compressed_choi"] = pt.compressed_choi(T).real
    _emit(args, out)
    return EXIT_OK


def cmd_check(args):
    what = args.what
    if what in ("cp", "tp"):
        C = _load_channel(args.in_)
        if what == "cp":
            ok, val = ch.is_cp(C, tau=args.tol)
            out = {"check": "cp", "passed": ok, "min_eig": val}
        else:
            ok, val = ch.is_tp(C, tol=args.tol)
            out = {"check": "tp", "passed": ok, "residual": val}
    elif what == "causality":
        T = _load_process(args.in_)
        rep = pt.check_causality(T, tol=args.tol)
        ok = rep.passed
        out = {"check": "causality", **rep.to_dict()}
    elif what == "markov":
        T = _load_process(args.in_)
        v = mem.is_markov(T, tol=args.tol)
        nr, conf = mem.nonmarkov_rel_entropy(T)
        ok = v.markov
        out = {"check": "markov", "passed": ok, "distance": v.distance,
               "causal_breaks_independent": v.causal_breaks,
               "rel_entropy_measure": nr, "confusion": conf}
    elif what == "order":
        T = _load_process(args.in_)
        split = _parse_split(args.split)
        inst = _memory_instrument(T, split["M"], args.instrument, args.seed)
        ok, factors = mem.markov_order_test(T, split, inst, tol=args.tol)
        out = {"check": "order", "passed": ok, "instrument": args.instrument,
               "outcomes": {str(x): {"schmidt_ratio": f[2], "mutual_information": f[3]}
                            for x, f in factors.items()}}
    else:
        raise UsageError(f"unknown check {what!r}")
    _emit(args, out)
    return EXIT_OK if ok else EXIT_FAIL


def _memory_instrument(T, times, kind, seed):
    """Measure-and-reprepare instrument on every memory time (product over times)."""
    per_time = []
    for t in times:
        js = T.time_slots(t)
        d = T.slots[js[0]].d
        if kind == "computational":
            V = np.eye(d)
        elif kind == "random":
            V = qla.haar_unitary(d, seed=seed + t)
        else:
            raise UsageError(f"unknown instrument {kind!r}")
        els = []
        for x in range(d):
            P = qla.proj(V[:, x])
            els.append(np.kron(P.T, P) if len(js) == 2 else P.T)
        per_time.append(els)
    out = per_time[0]
    for els in per_time[1:]:
        out = [np.kron(a, b) for a in out for b in els]
    return out


def cmd_tomo(args):
    what = args.what
    rng = np.random.default_rng(args.seed)
    if what == "state":
        povm = tomo.sic_povm_qubit()
        if args.in_:
            d = _load(args.in_)
            probs = d["probs"]
            truth = None
        else:
            truth = qla.random_state(2, seed=int(rng.integers(2 ** 31)))
            probs = povm.probabilities(truth)
        est = tomo.state_tomography(probs, povm)
        out = {"estimate": est, "probs": list(map(float, probs))}
        if truth is not None:
            out["error"] = float(np.abs(est - truth).max())
    elif what == "channel":
        C = _load_channel(args.in_) if args.in_ else ch.random_cptp(seed=int(rng.integers(2 ** 31)))
        inputs = tomo.pauli_state_basis() if C.d_in == 2 else tomo.random_state_basis(C.d_in, args.seed)
        outputs = tomo.pmap(lambda r: ch.apply(C, r), inputs)
        est = tomo.channel_tomography(inputs, outputs)
        out = {"channel": ch.channel_to_dict(est), "error": float(np.abs(est.choi - C.choi).max())}
    elif what == "process":
        T = _load_process(args.in_) if args.in_ else build_model(args)
        basis = pt.ic_basis_for(T, seed=args.seed)
        probs = pt.basis_probabilities(T, basis)
        R = pt.reconstruct_process(probs, basis, T.slots)
        out = {"process": R.to_dict(), "error": float(np.abs(R.choi - T.choi).max()),
               "n_probabilities": int(np.asarray(probs).size)}
    else:
        raise UsageError(f"unknown tomography target {what!r}")
    _emit(args, out)
    return EXIT_OK


def _times(args):
    return [float(t) for t in np.linspace(args.t_min, args.t_max, args.points)]


def cmd_witness(args):
    what = args.what
    fam = _channel_family(args)
    ts = _times(args)
    if what == "blp":
        plus = qla.proj(np.array([1, 1]) / np.sqrt(2))
        minus = qla.proj(np.array([1, -1]) / np.sqrt(2))
        series = mem.blp_witness(fam, plus, minus, ts)
        out = {"model": args.model, "markov": series.markov,
               "series": [{"t": t, "distance": d, "verdict": v} for t, d, v in series.rows()]}
        _emit(args, out, series.rows(), ["t", "distance", "verdict"])
        return EXIT_OK if series.markov else EXIT_FAIL
    if what == "divisor":
        rows, ok_all = [], True
        for i, s in enumerate(ts):
            for t in ts[i + 1:]:
                try:
                    r = mem.infer_divisor(fam(t), fam(s))
                    rows.append((s, t, r.min_eig, "cp" if r.cp else "ncp"))
                    ok_all &= r.cp
                except ValueError:
                    rows.append((s, t, float("nan"), "singular"))
        out = {"model": args.model, "cp_divisible": ok_all,
               "pairs": [{"s": s, "t": t, "min_eig": e, "verdict": v} for s, t, e, v in rows]}
        _emit(args, out, rows, ["s", "t", "min_eig", "verdict"])
        return EXIT_OK if ok_all else EXIT_FAIL
    if what == "snapshot":
        t = args.t_max
        r = mem.snapshot_generator(fam(t), t, family=fam, samples=ts)
        out = {"model": args.model, "t": t, "generator": r.generator,
               "reconstruction_error": r.reconstruction_error, "cp_semigroup": r.cp_semigroup,
               "family_consistent": r.family_consistent, "markov": r.markov, "samples": r.samples}
        rows = [(row["s"], row["min_eig"], "cp" if row["cp"] else "ncp") for row in r.samples]
        _emit(args, out, rows, ["s", "min_eig", "verdict"])
        return EXIT_OK if r.markov else EXIT_FAIL
    raise UsageError(f"unknown witness {what!r}")


def cmd_memory(args):
    if args.what != "report":
        raise UsageError("only 'memory report' is available")
    T = _load_process(args.in_)
    split = _parse_split(args.split) if args.split else None
    rep = mem.memory_report(T, split, p=args.p_norm, tol=args.tol)
    out = rep.to_dict()
    if split:
        out["split"] = split
    _emit(args, out)
    return EXIT_OK


def cmd_proc(args):
    if args.what == "build":
        return cmd_build(args)
    if args.what == "check":
        args.what = "causality"
        return cmd_check(args)
    if args.what == "contract":
        T = _load_process(args.in_)
        spec = _load(args.ops)
        ops = []
        for item in spec["ops"]:
            if item == "open":
                ops.append("open")
            elif isinstance(item, dict) and "rep" in item:
                ops.append(ch.channel_from_dict(item))
            else:
                ops.append(CMatrix.from_dict(item).data)
        r = pt.born_multi(T, ops)
        out = {"result": r if isinstance(r, np.ndarray) else float(np.real(r))}
        _emit(args, out)
        return EXIT_OK
    raise UsageError(f"unknown proc action {args.what!r}")


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _common(p):
    p.add_argument("--in", dest="in_", help="input JSON file")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--tol", type=_positive, default=1e-8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=2)


def _model_params(p):
    p.add_argument("--model", default="shallow-pocket")
    p.add_argument("--gamma-t", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--omega-t", type=float, default=0.7)
    p.add_argument("--g", type=float, default=0.5)
    p.add_argument("--a1", type=float, default=0.3)
    p.add_argument("--a2", type=float, default=0.2)
    p.add_argument("--a3", type=float, default=0.4)
    p.add_argument("--p", type=float)
    p.add_argument("--q", type=float)
    p.add_argument("--s", type=float)
    p.add_argument("--d", type=int)
    p.add_argument("--instrument")
    p.add_argument("--t-min", type=float, default=0.1)
    p.add_argument("--t-max", type=float, default=2.0)
    p.add_argument("--t-x", type=float, default=1.0)
    p.add_argument("--points", type=int, default=20)
    p.add_argument("--split", nargs="+")
    p.add_argument("--p-norm", type=float, default=1)
    p.add_argument("--ops", help="JSON file with operations for 'proc contract'")


def _positive(v):
    x = float(v)
    if not x > 0:
        raise argparse.ArgumentTypeError("tolerance must be positive")
    return x


def build_parser():
    parser = _Parser(prog="qproc", description="Classical and quantum stochastic processes.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True
    specs = [
        ("demo", "name", None, cmd_demo),
        ("build", None, None, cmd_build),
        ("proc", "what", ("build", "check", "contract"), cmd_proc),
        ("check", "what", ("cp", "tp", "causality", "markov", "order"), cmd_check),
        ("tomo", "what", ("state", "channel", "process"), cmd_tomo),
        ("witness", "what", ("blp", "divisor", "snapshot"), cmd_witness),
        ("memory", "what", ("report",), cmd_memory),
    ]
    for name, pos, choices, fn in specs:
        p = sub.add_parser(name)
        if pos:
            p.add_argument(pos, choices=choices)
        _common(p)
        _model_params(p)
        p.set_defaults(func=fn)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "check" and args.what == "order" and args.instrument is None:
        args.instrument = "computational"
    try:
        return args.func(args)
    except (UsageError, ValueError, KeyError, OSError, json.JSONDecodeError) as e:
        sys.stderr.write(f"qproc: error: {e}\n")
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
