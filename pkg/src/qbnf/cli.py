"""Command-line front end: ``qbnf normalize|spectrum|associate|recover|roundtrip``.

Every command that writes a file also writes ``<file>.manifest.json`` with
the arguments, content hashes of inputs and outputs, the noise seed and the
library versions.  Nothing time-dependent is recorded, so repeating a run
reproduces every file byte for byte.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import platform
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from importlib import metadata
from pathlib import Path

import numpy as np

from .errors import QBNFError
from .frequency import auto_frequency, check_diophantine
from .inverse import FreeEps, parse_schedule, recover, relative_error, true_class_sums
from .lattice import associate, associate_lattice
from .normal_form import NormalForm, birkhoff_normalize, frequency_of
from .spectrum import (UNMATCHED, QuantizationData, SpectralDataset, SpectralRecord, SpectralWindow,
                       generate_spectrum, inject_noise)
from .symbols import TruncatedSymbol


# ---------------------------------------------------------------------------
# helpers


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("QBNF_THREADS", "1")))
    except ValueError:
        return 1


def _pmap(fn, items):
    items = list(items)
    n = min(_threads(), len(items)) or 1
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(n) as pool:
        return list(pool.map(fn, items))


def _read(path: str) -> str:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(2, "no such file", str(path))
    return p.read_text(encoding="utf-8")


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _versions() -> dict:
    out = {"python": platform.python_version(), "numpy": np.__version__}
    for dist in ("artifact", "scipy"):
        try:
            out[dist] = metadata.version(dist)
        except metadata.PackageNotFoundError:
            pass
    return out


def _write(path: str, text: str, args, inputs=(), seed=None) -> None:
    p = Path(path)
    if p.parent != Path(""):
        p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text, encoding="utf-8")
    skip = {"func", "command"}
    manifest = {
        "command": args.command,
        "arguments": {k: v for k, v in sorted(vars(args).items()) if k not in skip},
        "inputs": {str(i): _sha256(i) for i in inputs},
        "output": {str(p): _sha256(p)},
        "seed": seed,
        "versions": _versions(),
    }
    Path(str(p) + ".manifest.json").write_text(json.dumps(manifest, indent=1, default=str) + "\n", encoding="utf-8")


def _pair(text: str, kind=float) -> tuple:
    parts = [kind(v) for v in text.split(",")]
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected two comma-separated numbers, got {text!r}")
    return tuple(parts)


def _h_grid(text: str) -> list[float]:
    """``0.02,0.01`` or ``geom:<hi>:<lo>:<n>``."""
    if text.startswith("geom:"):
        hi, lo, n = text[5:].split(":")
        return [float(v) for v in np.geomspace(float(hi), float(lo), int(n))]
    return [float(v) for v in text.split(",")]


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",")]


def _quant(args) -> QuantizationData:
    return QuantizationData(tuple(args.k0), tuple(args.S))


def _beta(text: str) -> float:
    return math.inf if text in ("inf", "none") else float(text)


def _add_quant(p):
    p.add_argument("--k0", type=lambda t: _pair(t, int), default=(0, 0), help="Maslov indices, e.g. 2,1")
    p.add_argument("--S", type=_pair, default=(0.0, 0.0), help="torus actions, e.g. 0,0")


def _center_F(nf: NormalForm) -> complex:
    """Window centre from the constant eps term: Im z ~ eps Im P_010."""
    c = complex(nf[(0, 1, 0)].coeffs[0])
    return complex(c.imag, 0.0)


def _eps_values(schedule, exponents, h: float, delta: float) -> list[float]:
    if exponents:
        if not isinstance(schedule, FreeEps):
            raise QBNFError("--eps-exponents needs the free schedule")
        return [h ** e for e in exponents]
    return [schedule.eps(h, delta)]


# ---------------------------------------------------------------------------
# stages


def _normalize(symbol: TruncatedSymbol, order: int, radius: int | None, C0: float | None, N0: float):
    a = frequency_of(symbol)
    K = radius or symbol.n_max
    freq = check_diophantine(a, C0, N0, K) if C0 else auto_frequency(a, K, N0)
    return birkhoff_normalize(symbol, freq, order)


def _spectrum(nf: NormalForm, win: SpectralWindow, quant, hs, schedule, exponents, beta, seed, bound):
    jobs = [(h, eps) for h in hs for eps in _eps_values(schedule, exponents, h, win.delta)]
    recs = _pmap(lambda job: generate_spectrum(nf, quant, win, job[0], job[1], bound), jobs)
    ds = SpectralDataset(recs)
    return inject_noise(ds, beta, seed) if math.isfinite(beta) else ds


def _associate(ds: SpectralDataset, nf: NormalForm, quant, method: str, error_bound: float):
    seed = nf.eps_free()

    def one(rec: SpectralRecord):
        K = rec.k_search_bound or 1
        if method == "lattice":
            A = associate_lattice(rec.eigenvalues, nf.frequency, quant, rec.h, rec.eps, k_search_bound=K,
                                  seed=seed, error_bound=error_bound)
        else:
            A = associate(rec.eigenvalues, nf.frequency, quant, rec.h, k_search_bound=K, seed=seed,
                          error_bound=error_bound)
        stats = {"h": rec.h, "eps": rec.eps, "points": len(rec.eigenvalues), "matched": len(A.labels),
                 "match_rate": A.match_rate, "collisions": len(A.collisions), "refused": A.refused}
        if rec.labels is not None:
            stats["mislabeled"] = int(sum(tuple(rec.labels[i]) != k for i, k in A.labels.items()))
        return replace(rec, labels=A.label_array(len(rec.eigenvalues))), stats

    done = _pmap(one, ds.records)
    return SpectralDataset([r for r, _ in done]), [s for _, s in done]


# ---------------------------------------------------------------------------
# commands


def cmd_normalize(args) -> int:
    sym = TruncatedSymbol.loads(_read(args.symbol))
    res = _normalize(sym, args.order, args.radius, args.C0, args.N0)
    _write(args.out, res.normal_form.dumps() + "\n", args, [args.symbol])
    return 0


def cmd_spectrum(args) -> int:
    nf = NormalForm.loads(_read(args.nf))
    win = SpectralWindow.from_json_obj(json.loads(_read(args.window)))
    ds = _spectrum(nf, win, _quant(args), _h_grid(args.h_grid), parse_schedule(args.eps_schedule),
                   _floats(args.eps_exponents) if args.eps_exponents else None, args.beta, args.seed,
                   args.k_search_bound)
    _write(args.out, ds.dumps(), args, [args.nf, args.window], seed=args.seed)
    return 0


def cmd_associate(args) -> int:
    ds = SpectralDataset.loads(_read(args.ds))
    nf = NormalForm.loads(_read(args.nf_header))
    if nf.frequency is None:
        raise QBNFError(f"{args.nf_header} has no frequency header")
    out, stats = _associate(ds, nf, _quant(args), args.method, args.error_bound)
    _write(args.out, out.dumps(), args, [args.ds, args.nf_header])
    print(json.dumps({"records": stats}, indent=1))
    return 0


def cmd_recover(args) -> int:
    ds = SpectralDataset.loads(_read(args.ds))
    seed = NormalForm.loads(_read(args.seed_nf))
    rep = recover(ds, seed.eps_free(), parse_schedule(args.schedule), args.delta, args.beta,
                  args.max_grading, quant=_quant(args))
    _write(args.out, rep.dumps() + "\n", args, [args.ds, args.seed_nf])
    return 0


def cmd_roundtrip(args) -> int:
    sym = TruncatedSymbol.loads(_read(args.symbol))
    quant = _quant(args)
    schedule = parse_schedule(args.schedule)
    nf = _normalize(sym, args.order, args.radius, args.C0, args.N0).normal_form
    win = SpectralWindow(args.delta, args.C, _center_F(nf))
    exps = _floats(args.eps_exponents) if args.eps_exponents else None
    if exps is None and isinstance(schedule, FreeEps):
        # a second eps per h keeps the eps^3 and eps^2 h columns apart in double precision
        exps = [0.5, schedule.exponent(args.delta)]
    ds = _spectrum(nf, win, quant, _h_grid(args.h_grid), schedule, exps, args.beta, args.seed, None)
    labeled, stats = _associate(ds.stripped(), nf, quant, "lattice", args.error_bound)
    mislabeled = 0
    for truth, got in zip(ds.records, labeled.records):
        ok = got.labels[:, 0] != UNMATCHED
        mislabeled += int(np.sum(np.any(truth.labels[ok] != got.labels[ok], axis=1)))
    rep = recover(labeled, nf.eps_free(), schedule, args.delta, args.beta, min(args.order, args.max_grading),
                  quant=quant)
    truth = true_class_sums(nf, rep)
    rows = []
    for c in rep.classes:
        if c.cls.excluded:
            rows.append((c.cls.label(), None, "below floor"))
            continue
        err = relative_error(c.polynomial, truth[c.cls.members])
        rows.append((c.cls.label(), err, "pass" if err <= args.tol else "FAIL"))
    matched = sum(s["matched"] for s in stats)
    total = sum(s["points"] for s in stats)
    assoc_ok = mislabeled == 0 and matched == total
    print(f"association: {matched}/{total} matched, {mislabeled} mislabeled  "
          f"[{'pass' if assoc_ok else 'FAIL'}]")
    width = max(len(r[0]) for r in rows)
    for name, err, verdict in rows:
        shown = "-" if err is None else f"{err:.2e}"
        print(f"{name:<{width}}  {shown:>9}  {verdict}")
    ok = assoc_ok and all(v != "FAIL" for _, _, v in rows)
    print("roundtrip:", "pass" if ok else "FAIL")
    if args.csv:
        lines = ["class,relative_error,verdict"]
        lines += [f"{n},{'' if e is None else repr(e)},{v}" for n, e, v in rows]
        _write(args.csv, "\n".join(lines) + "\n", args, [args.symbol], seed=args.seed)
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qbnf", description="Normal forms, quasi-eigenvalue lattices and their inversion.")
    sub = ap.add_subparsers(dest="command", required=True)

    def norm_opts(p):
        p.add_argument("--symbol", required=True, help="symbol JSON")
        p.add_argument("--order", type=int, required=True, help="normalize through this grading")
        p.add_argument("--radius", type=int, default=None, help="Diophantine check radius (default: symbol n_max)")
        p.add_argument("--C0", type=float, default=None, help="Diophantine constant (default: certified automatically)")
        p.add_argument("--N0", type=float, default=2.0)

    p = sub.add_parser("normalize", help="Birkhoff-normalize a symbol")
    norm_opts(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("spectrum", help="quasi-eigenvalues in a window")
    p.add_argument("--nf", required=True)
    p.add_argument("--window", required=True, help='JSON {"delta":..,"C":..,"F":[re,im]}')
    p.add_argument("--h-grid", required=True, help="comma list or geom:<hi>:<lo>:<n>")
    p.add_argument("--eps-schedule", default="free", help="free, free:<alpha> or fixed:<s>")
    p.add_argument("--eps-exponents", default=None, help="free schedule only: eps = h^e for each listed e")
    p.add_argument("--beta", type=_beta, default=math.inf)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k-search-bound", type=int, default=None)
    _add_quant(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("associate", help="label eigenvalues with lattice points")
    p.add_argument("--ds", required=True)
    p.add_argument("--nf-header", required=True, help="normal form file; its frequency and eps-free part are used")
    p.add_argument("--method", choices=("lattice", "greedy"), default="lattice")
    p.add_argument("--error-bound", type=float, default=0.0)
    _add_quant(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_associate)

    p = sub.add_parser("recover", help="fit normal-form coefficients from labelled data")
    p.add_argument("--ds", required=True)
    p.add_argument("--seed-nf", required=True)
    p.add_argument("--schedule", default="free")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--beta", type=_beta, default=math.inf)
    p.add_argument("--max-grading", type=int, default=6)
    _add_quant(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("roundtrip", help="normalize, generate, associate, recover and compare")
    norm_opts(p)
    p.add_argument("--schedule", default="free")
    p.add_argument("--eps-exponents", default=None,
                   help="free schedule: eps = h^e per listed e (default: 0.5 and the schedule exponent)")
    p.add_argument("--delta", type=float, default=0.2)
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--h-grid", default="geom:0.02:0.003:6")
    p.add_argument("--beta", type=_beta, default=math.inf)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--error-bound", type=float, default=0.0)
    p.add_argument("--max-grading", type=int, default=6)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--csv", default=None, help="write the comparison table as CSV")
    _add_quant(p)
    p.set_defaults(func=cmd_roundtrip)
    return ap


def _error(kind: str, message: str, **extra) -> None:
    print(json.dumps({"error": kind, "message": message, **extra}, default=str), file=sys.stderr)


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as e:
        _error("FileNotFoundError", "input file not found", path=e.filename)
        return 2
    except QBNFError as e:
        extra = {k: v for k, v in vars(e).items() if not k.startswith("_")}
        _error(type(e).__name__, str(e), **extra)
        return 1
    except (ValueError, KeyError, json.JSONDecodeError) as e:
        _error(type(e).__name__, str(e))
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
