"""Command-line front end: band trees, exponents, DOS tables, spectra.

Exit codes: 0 success, 1 compute failure, 2 validation error,
3 verification failure.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .bands import (
    BandTree,
    build_band_tree,
    estimate_bounds_profile,
    gaps,
)
from .coding import hat_matrix, incidence_matrix, prefix_vectors
from .dosmeasure import (
    build_Q,
    level_weights,
    periodic_eigenvalues,
    verify_continuant_form,
)
from .errors import SturmSpecError
from .frequency import FrequencySpec
from .precision import PrecisionContext, charpoly_int, perron_eigen

TREE_CACHE_VERSION = 1


def _build_parser():
    ap = argparse.ArgumentParser(
        prog="sturmspec",
        description="Spectral band hierarchy, DOS measure and dimension "
        "spectra of Sturm Hamiltonians of eventually constant type.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, depth_default):
        p.add_argument("--kappa", type=int, default=1)
        p.add_argument("--prefix", default="0",
                       help="comma-separated CF digits before the constant tail")
        p.add_argument("--V", type=float, default=24.0)
        p.add_argument("--depth", type=int, default=depth_default)
        p.add_argument("--bits", type=int, default=53,
                       help="mantissa bits (53 = double)")
        p.add_argument("--tol", type=float, default=1e-12)
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--cache-dir", default=None)
        p.add_argument("--seed", type=int, default=0)

    common(sub.add_parser("bands", help="band tree and gap report"), 8)
    p = sub.add_parser("dims", help="spectral exponent estimates")
    common(p, 8)
    p.add_argument("--compare-prefix-vectors", action="store_true")
    common(sub.add_parser("dos", help="DOS weight table"), 8)
    common(sub.add_parser("multifractal", help="tau curve and spectrum"), 8)
    p = sub.add_parser("asymptotics", help="large-coupling constants")
    p.add_argument("--kappa-max", type=int, default=8)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    common(sub.add_parser("verify", help="run the invariant suite"), 6)
    return ap


def _validate(args) -> "tuple[FrequencySpec, PrecisionContext]":
    try:
        prefix = tuple(int(t) for t in args.prefix.split(","))
    except ValueError:
        raise SystemExit(_fail(2, f"bad --prefix {args.prefix!r}"))
    if args.kappa < 1:
        raise SystemExit(_fail(2, "--kappa must be >= 1"))
    if args.V <= 4:
        raise SystemExit(_fail(2, f"--V {args.V} is at or below the hard floor 4"))
    if args.V <= 20:
        print(f"warning: V = {args.V} is in (4, 20], outside the V > 20 "
              "hypotheses; results are exploratory", file=sys.stderr)
    spec = FrequencySpec(prefix, args.kappa)
    if args.bits == 53:
        ctx = PrecisionContext(53, args.tol, args.tol)
    else:
        t = min(args.tol, 1e-30)
        ctx = PrecisionContext(args.bits, t, t)
    return spec, ctx


def _fail(code: int, msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return code


def _config_hash(args, keys) -> str:
    doc = {k: getattr(args, k) for k in keys}
    doc["version"] = TREE_CACHE_VERSION
    blob = json.dumps(doc, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _atomic_write(path: str, text: str):
    d = os.path.dirname(path) or "."
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _tree_for(args, spec, ctx, cfg_hash) -> BandTree:
    if args.cache_dir:
        path = os.path.join(args.cache_dir, f"tree-{cfg_hash}.json")
        if os.path.exists(path):
            try:
                with open(path) as f:
                    return BandTree.from_json_dict(json.load(f))
            except (ValueError, KeyError):
                pass  # version mismatch or corruption: recompute
    tree = build_band_tree(spec, args.V, args.depth, ctx, f_tol=args.tol)
    if args.cache_dir:
        _atomic_write(path, tree.to_json())
    return tree


def _csv(lines, cfg_hash) -> str:
    buf = io.StringIO()
    buf.write(f"# config {cfg_hash}\n")
    for row in lines:
        buf.write(",".join(str(x) for x in row) + "\n")
    return buf.getvalue()


def cmd_bands(args) -> int:
    spec, ctx = _validate(args)
    h = _config_hash(args, ("kappa", "prefix", "V", "depth", "bits", "tol"))
    tree = _tree_for(args, spec, ctx, h)
    if args.format == "json":
        doc = tree.to_json_dict()
        doc["gap_report"] = []
        for n in range(tree.depth):
            _, mr = gaps(tree, n)
            doc["gap_report"].append({"order": n, "min_gap_ratio": mr})
        print(json.dumps(doc, indent=1))
    else:
        rows = [("order", "n_gaps", "min_gap_ratio")]
        for n in range(tree.depth):
            gs, mr = gaps(tree, n)
            rows.append((n, len(gs), mr))
        print(_csv(rows, h), end="")
    return 0


def cmd_dims(args) -> int:
    from .thermo import (
        build_potentials_streaming,
        compare_prefix_vectors,
        exponent_estimates,
    )

    spec, ctx = _validate(args)
    h = _config_hash(args, ("kappa", "prefix", "V", "depth", "bits", "tol"))
    Q, p = build_Q(args.kappa)
    pvs = prefix_vectors(spec)
    pt = build_potentials_streaming(spec, args.V, pvs[0], Q, p, args.depth,
                                    ctx, f_tol=args.tol)
    est = exponent_estimates(pt)
    doc = est.to_json_dict()
    doc["diagnostics"] = {
        k: v for k, v in doc["diagnostics"].items() if not k.endswith("_raw")
    }
    if args.kappa == 2:
        doc["note"] = ("silver type: the three asymptotic constants "
                       "coincide, no large-V separation of the exponents "
                       "is available")
    if args.compare_prefix_vectors:
        alt = prefix_vectors(spec, policy=("sample", 2), seed=args.seed)
        pv2 = alt[1] if str(alt[1].words) != str(pvs[0].words) else alt[0]
        doc["prefix_vector_deviation"] = compare_prefix_vectors(
            spec, args.V, pvs[0], pv2, args.depth, Q, p, ctx, f_tol=args.tol)
    if args.format == "json":
        print(json.dumps(doc, indent=1, default=float))
    else:
        rows = [("kappa", "V", "depth", "s_hat", "d_hat", "gamma_hat")]
        rows.append((est.kappa, est.V, est.depth, est.s_hat, est.d_hat,
                     est.gamma_hat))
        print(_csv(rows, h), end="")
    return 0


def cmd_dos(args) -> int:
    spec, ctx = _validate(args)
    h = _config_hash(args, ("kappa", "prefix", "V", "depth", "bits", "tol"))
    tree = _tree_for(args, spec, ctx, h)
    n = tree.depth
    w = level_weights(spec, tree, n)
    if args.format == "csv":
        rows = [("word", "type", "order", "lo", "hi", "weight")]
        for b, wt in zip(tree.bands(n), w):
            rows.append((str(tree.word_obj(b)), b.btype, b.order,
                         float(b.lo), float(b.hi), wt))
        print(_csv(rows, h), end="")
    else:
        print(json.dumps({
            "kappa": spec.kappa, "V": args.V, "order": n,
            "bands": [
                {"word": str(tree.word_obj(b)), "type": b.btype,
                 "lo": float(b.lo), "hi": float(b.hi), "weight": float(wt)}
                for b, wt in zip(tree.bands(n), w)
            ],
        }, indent=1))
    return 0


def cmd_multifractal(args) -> int:
    from .multifractal import build_tau_curve, legendre
    from .thermo import build_potentials_streaming

    spec, ctx = _validate(args)
    h = _config_hash(args, ("kappa", "prefix", "V", "depth", "bits", "tol"))
    Q, p = build_Q(args.kappa)
    pv = prefix_vectors(spec)[0]
    pt = build_potentials_streaming(spec, args.V, pv, Q, p, args.depth, ctx,
                                    f_tol=args.tol)
    curve = build_tau_curve(pt, args.depth)
    ls = legendre(curve)
    summary = {"beta_star": ls.beta_star, "beta_sup": ls.beta_sup,
               "tangency_beta": ls.tangency_beta}
    if args.format == "csv":
        rows = [("q", "tau")]
        rows += list(zip(curve.qs.tolist(), curve.taus.tolist()))
        rows.append(())
        rows.append(("beta", "tau_star"))
        rows += list(zip(ls.betas.tolist(), ls.tau_star.tolist()))
        print(_csv(rows, h), end="")
        print("# " + json.dumps(summary))
    else:
        print(json.dumps({
            "summary": summary,
            "tau": {"q": curve.qs.tolist(), "tau": curve.taus.tolist()},
            "spectrum": {"beta": ls.betas.tolist(),
                         "tau_star": ls.tau_star.tolist()},
        }, indent=1))
    return 0


def cmd_asymptotics(args) -> int:
    from .asymptotics import inequality_table

    if args.kappa_max < 2:
        return _fail(2, "--kappa-max must be >= 2")
    rows = inequality_table(args.kappa_max)
    if args.format == "json":
        print(json.dumps(rows, indent=1))
    else:
        header = ("kappa", "rho_hat", "varrho", "rho", "strict_first",
                  "strict_second", "tie")
        table = [header] + [tuple(r[k] for k in header) for r in rows]
        print(_csv(table, _config_hash(args, ("kappa_max",))), end="")
    return 0


def cmd_verify(args) -> int:
    spec, ctx = _validate(args)
    kappa = args.kappa
    failures = []

    def check(name, ok, detail=""):
        print(f"{'ok  ' if ok else 'FAIL'} {name}" +
              (f" ({detail})" if detail else ""))
        if not ok:
            failures.append(name)

    # eigenstructure of the collapsed and full incidence matrices
    ch = charpoly_int(hat_matrix(kappa))
    # (l^2 - k l - 1)(l + 1) = l^3 + (1-k) l^2 - (k+1) l - 1
    check("hat-matrix charpoly", ch == [1, 1 - kappa, -(kappa + 1), -1])
    lam, _, _ = perron_eigen(hat_matrix(kappa).astype(float))
    alpha = (kappa + math.sqrt(kappa * kappa + 4)) / 2
    check("hat-matrix Perron value", abs(lam - alpha) < 1e-12)
    lam2, _, _ = perron_eigen(incidence_matrix(kappa, kappa).astype(float))
    check("incidence Perron value", abs(lam2 - alpha) < 1e-12)

    # DOS transition matrix
    try:
        Q, p = build_Q(kappa)
        check("DOS matrix invariants", True)
    except RuntimeError as e:
        check("DOS matrix invariants", False, str(e))
        Q = p = None
    check("continuant growth law", verify_continuant_form(spec) < 1e-12)

    # band tree: counts, nesting, one eigenvalue per band, sandwich, gaps
    tree = build_band_tree(spec, args.V, args.depth, ctx, f_tol=args.tol)
    from .coding import count_words
    counts_ok = all(
        len(tree.bands(n)) == count_words(spec, n, rooted=True)
        for n in range(args.depth + 1)
    )
    check("band counts match enumeration", counts_ok)
    for k in range(min(args.depth, 6) + 1):
        evs = periodic_eigenvalues(spec, args.V, k, ctx)
        hit = []
        for b in tree.bands(k):
            inside = [e for e in evs if b.lo - 1e-9 <= e <= b.hi + 1e-9]
            hit.append(len(inside))
        if sum(hit) != len(evs) or any(c > 1 for c in hit):
            check(f"one eigenvalue per band, order {k}", False)
            break
    else:
        check("one eigenvalue per band", True)
    if kappa == 2:
        from .asymptotics import constants
        c = constants(2)
        tie = abs(float(c.rho_hat) - float(c.varrho)) < 1e-12 and \
            abs(float(c.varrho) - float(c.rho)) < 1e-12
        check("silver-type exact ties", tie)
    try:
        estimate_bounds_profile(tree)
        check("length sandwich", True)
    except SturmSpecError as e:
        check("length sandwich", False, str(e))
    ratios = []
    for n in range(args.depth):
        _, mr = gaps(tree, n)
        ratios.append(mr)
    check("gap ratios positive", all(r > 0 for r in ratios[1:]),
          f"min {min(ratios[1:]) if len(ratios) > 1 else 'n/a'}")

    if failures:
        print(f"{len(failures)} check(s) failed")
        return 3
    print("all checks passed")
    return 0


_COMMANDS = {
    "bands": cmd_bands,
    "dims": cmd_dims,
    "dos": cmd_dos,
    "multifractal": cmd_multifractal,
    "asymptotics": cmd_asymptotics,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    np.random.seed(args.seed if hasattr(args, "seed") else 0)
    try:
        return _COMMANDS[args.command](args)
    except SystemExit as e:
        return int(e.code) if e.code is not None else 0
    except SturmSpecError as e:
        return _fail(1, f"{type(e).__name__}: {e}")


if __name__ == "__main__":
    sys.exit(main())
