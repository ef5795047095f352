"""Command-line surface with canonical JSON output and a persistent cache.

Every invocation is reduced to a request envelope (subcommand, canonical
parameter map, seed, budget).  The envelope's canonical serialization is
hashed to a 32-hex-digit cache key; results are stored as the exact output
bytes, so repeated invocations are byte-identical.  Output is a single JSON
object with schema tag "v1": exact integers are decimal strings, exact
rationals are {"num", "den"} pairs, and floating-point values appear only
in fields named *_approx or *_stderr.  Timings and progress go to standard
error.  Exit codes: 0 success, 2 precondition violation, 3 budget
exhaustion, 4 verification failure.
"""

import hashlib
import json
import os
import sys
from fractions import Fraction

import click

from .errors import (BudgetError, PreconditionError, QclError,
                     VerificationError)

SCHEMA = "v1"
DEFAULT_SEED = 20260823
_EXIT_CODES = [(PreconditionError, 2), (BudgetError, 3),
               (VerificationError, 4), (QclError, 2)]

_FLOAT_SUFFIXES = ("_approx", "_stderr")


def _jsonable(value, key=""):
    """Normalize a result tree to the v1 schema conventions."""
    if isinstance(value, bool):
        return value
    if isinstance(value, int):
        return str(value)
    if isinstance(value, Fraction):
        return {"num": str(value.numerator), "den": str(value.denominator)}
    if isinstance(value, float):
        if not key.endswith(_FLOAT_SUFFIXES):
            raise VerificationError(
                f"float leaked into exact field {key!r}")
        return value
    if isinstance(value, str) or value is None:
        return value
    if isinstance(value, dict):
        return {str(k): _jsonable(v, str(k)) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v, key) for v in value]
    if hasattr(value, "c"):  # integral quaternion
        return [str(ci) for ci in value.c]
    raise VerificationError(f"unserializable value of type {type(value)}")


def _canonical_request(subcommand, params, seed, budget):
    clean = {k: v for k, v in params.items() if v is not None}
    env = {"schema": SCHEMA, "subcommand": subcommand,
           "params": _jsonable(clean), "seed": seed, "budget": budget}
    return json.dumps(env, sort_keys=True, separators=(",", ":"))


def _load_config(path):
    cfg = {}
    if path is None:
        path = os.path.expanduser("~/.config/qcl.cfg")
        if not os.path.exists(path):
            return cfg
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or "=" not in line:
                continue
            k, v = line.split("=", 1)
            cfg[k.strip()] = v.strip()
    return cfg


def _cache_dir(cfg):
    env = os.environ.get("QCL_CACHE_DIR")
    if env:
        return env
    if "cache_dir" in cfg:
        return cfg["cache_dir"]
    return os.path.join(os.path.expanduser("~"), ".cache", "qcl")


def _flatten(tree, prefix=""):
    rows = []
    if isinstance(tree, dict):
        for k in sorted(tree):
            rows.extend(_flatten(tree[k], f"{prefix}.{k}" if prefix else k))
    elif isinstance(tree, list):
        for i, v in enumerate(tree):
            rows.extend(_flatten(v, f"{prefix}[{i}]"))
    else:
        rows.append((prefix, tree))
    return rows


def _emit(ctx, subcommand, params, compute):
    opts = ctx.obj
    request = _canonical_request(subcommand, params, opts["seed"],
                                 opts["budget"])
    key = hashlib.sha256(request.encode()).hexdigest()[:32]
    cache_file = os.path.join(_cache_dir(opts["config"]), key + ".json")
    payload_bytes = None
    if not opts["no_cache"] and os.path.exists(cache_file):
        with open(cache_file, "rb") as fh:
            payload_bytes = fh.read()
        print(f"cache hit {key}", file=sys.stderr)
    if payload_bytes is None:
        try:
            result = compute()
        except QclError as exc:
            for klass, code in _EXIT_CODES:
                if isinstance(exc, klass):
                    print(f"error: {exc}", file=sys.stderr)
                    sys.exit(code)
        payload = {"schema": SCHEMA, "subcommand": subcommand,
                   "request_hash": key, "result": _jsonable(result)}
        payload_bytes = (json.dumps(payload, sort_keys=True,
                                    separators=(",", ":")) + "\n").encode()
        if not opts["no_cache"]:
            os.makedirs(os.path.dirname(cache_file), exist_ok=True)
            tmp = cache_file + f".tmp{os.getpid()}"
            with open(tmp, "wb") as fh:
                fh.write(payload_bytes)
            os.replace(tmp, cache_file)
    sys.stdout.buffer.write(payload_bytes)
    sys.stdout.buffer.flush()
    if opts["csv"]:
        obj = json.loads(payload_bytes)
        with open(opts["csv"], "w") as fh:
            fh.write("field,value\n")
            for path, v in _flatten(obj["result"]):
                fh.write(f"{path},{v}\n")
    failed = (subcommand == "audit"
              and not json.loads(payload_bytes)["result"]["passed"])
    sys.exit(4 if failed else 0)


def _parse_coords(text):
    parts = [int(v) for v in text.split(",")]
    if len(parts) != 4:
        raise PreconditionError("need four comma-separated integers")
    return parts


def _parse_signs(text):
    if not text or any(ch not in "+-" for ch in text):
        raise PreconditionError("sign pattern must be a string of + and -")
    return tuple(1 if ch == "+" else -1 for ch in text)


@click.group()
@click.option("--no-cache", is_flag=True, help="Bypass the result cache.")
@click.option("--csv", "csv_path", type=click.Path(), default=None,
              help="Also write the flattened result as CSV.")
@click.option("--threads", default=1, type=int,
              help="Worker budget; results are thread-count invariant.")
@click.option("--seed", default=DEFAULT_SEED, type=int, show_default=True)
@click.option("--budget", default=None, type=int,
              help="Element-operation cap forwarded to the engines.")
@click.option("--config", "config_path", type=click.Path(exists=True),
              default=None, help="Key=value config file.")
@click.pass_context
def main(ctx, no_cache, csv_path, threads, seed, budget, config_path):
    """Exact-arithmetic toolkit for quaternionic counting problems."""
    if threads < 1:
        raise click.UsageError("--threads must be positive")
    cfg = _load_config(config_path)
    if budget is None and "budget" in cfg:
        budget = int(cfg["budget"])
    ctx.obj = {"no_cache": no_cache, "csv": csv_path, "threads": threads,
               "seed": seed, "budget": budget, "config": cfg}


@main.command()
@click.option("--n", required=True, type=int)
@click.option("--upsilon", default=None,
              help="Sign pattern, e.g. +-; defaults to all +.")
@click.option("--x", "--X", "height", required=True, type=int)
@click.option("--engine", type=click.Choice(["conv", "brute", "both"]),
              default="conv", show_default=True)
@click.option("--traceless", is_flag=True)
@click.pass_context
def count(ctx, n, upsilon, height, engine, traceless):
    """Count solutions of the signed sum-of-squares equation in a box."""
    ups = "+" * n if upsilon is None else upsilon
    params = {"n": n, "upsilon": ups, "X": height, "engine": engine,
              "traceless": traceless}

    def compute():
        from .counting import brute_count, conv_count, traceless_count
        signs = _parse_signs(ups)
        if len(signs) != n:
            raise PreconditionError("sign pattern length must equal n")
        out = {"n": n, "upsilon": ups, "X": height, "traceless": traceless}
        if traceless:
            cnt, quadric = traceless_count(n, signs, height)
            out["count"] = cnt
            out["quadric_count"] = quadric
            out["equal"] = cnt == quadric
            return out
        if engine in ("conv", "both"):
            out["conv_count"] = conv_count(n, signs, height)
        if engine in ("brute", "both"):
            out["brute_count"] = brute_count(n, signs, height)
        if engine == "both":
            out["equal"] = out["conv_count"] == out["brute_count"]
        return out

    _emit(ctx, "count", params, compute)


@main.command()
@click.option("--place", type=click.Choice(["split", "nonsplit"]),
              default="split", show_default=True)
@click.option("--p", required=True, type=int)
@click.option("--m", required=True, type=int, help="Level exponent.")
@click.option("--n", required=True, type=int, help="Number of slots.")
@click.option("--engine", type=click.Choice(["conv", "exhaustive", "both"]),
              default="conv", show_default=True)
@click.pass_context
def density(ctx, place, p, m, n, engine):
    """Local solution density of the sum-of-squares equation."""
    params = {"place": place, "p": p, "m": m, "n": n, "engine": engine}

    def compute():
        from .densities import (nonsplit_density_odd, nonsplit_density_two,
                                split_density, split_density_exhaustive)
        out = {"place": place, "p": p, "m": m, "n": n}
        if place == "nonsplit":
            out["density"] = (nonsplit_density_two(m, n) if p == 2
                              else nonsplit_density_odd(p, m, n))
            return out
        if engine in ("conv", "both"):
            out["density"] = split_density(p, m, n)
        if engine in ("exhaustive", "both"):
            out["density_exhaustive"] = split_density_exhaustive(p, m, n)
        if engine == "both":
            out["equal"] = out["density"] == out["density_exhaustive"]
        return out

    _emit(ctx, "density", params, compute)


@main.command()
@click.option("--p", required=True, type=int)
@click.option("--va", required=True, type=int)
@click.option("--vt", required=True, type=int)
@click.option("--xi", "vxi", required=True, type=int,
              help="Valuation of the linear coefficient.")
@click.option("--ua", default=1, type=int)
@click.option("--ut", default=1, type=int)
@click.option("--uxi", default=1, type=int)
@click.option("--xi-zero", is_flag=True)
@click.pass_context
def gauss(ctx, p, va, vt, vxi, ua, ut, uxi, xi_zero):
    """Normalized quadratic character sum with its structural laws."""
    params = {"p": p, "va": va, "vt": vt, "vxi": vxi, "ua": ua, "ut": ut,
              "uxi": uxi, "xi_zero": xi_zero}

    def compute():
        from .padic import GaussSumParams, gauss_sum_law_report
        rep = gauss_sum_law_report(
            GaussSumParams(p, va, vt, vxi, ua, ut, uxi, xi_zero))
        return {"p": p, "value": _cyclo_out(rep["value"]),
                "laws": rep["laws"]}

    _emit(ctx, "gauss", params, compute)


def _cyclo_out(val):
    c = val.canonical()
    if c.is_rational():
        return c.to_fraction()
    return {"p": c.p, "k": c.k, "scale": c.scale,
            "counts": {str(r): n for r, n in sorted(c.counts.items())}}


@main.command()
@click.option("--p", required=True, type=int)
@click.option("--delta", required=True,
              help="Flat 2x2 matrix entries a,b,c,d.")
@click.option("--gamma", "gammas", multiple=True, required=True,
              help="Flat 2x2 matrix entries; repeat once per slot.")
@click.pass_context
def expsum(ctx, p, delta, gammas):
    """Local oscillatory integral attached to a modulus and shift tuple."""
    params = {"p": p, "delta": delta, "gammas": list(gammas)}

    def compute():
        from .expsums import i0_local, witness_report
        d = tuple(_parse_coords(delta))
        gs = [_parse_coords(g) for g in gammas]
        val = i0_local(d, gs, p)
        rep = witness_report(d, [tuple(g) for g in gs], p)
        return {"p": p, "value": _cyclo_out(val), "is_zero": val.is_zero(),
                "supported": rep["supported"]}

    _emit(ctx, "expsum", params, compute)


@main.command()
@click.option("--h", "--H", "hh", default=1, type=int, show_default=True)
@click.option("--k", "--K", "kk", required=True, type=int)
@click.option("--m", required=True, type=int)
@click.option("--eta", required=True,
              help="Integral-basis coordinates of the norm element.")
@click.option("--m0", default="1,0,0,0", show_default=True)
@click.option("--minima", is_flag=True, help="Also report successive minima.")
@click.pass_context
def lattice(ctx, hh, kk, m, eta, m0, minima):
    """Congruence lattice basis, index, and optional successive minima."""
    params = {"H": hh, "K": kk, "m": m, "eta": eta, "m0": m0,
              "minima": minima}

    def compute():
        from .algebra import hq_from_basis_coords
        from .lattices import lattice_basis, minkowski_bracket, \
            successive_minima
        lat = lattice_basis(hh, kk, m, hq_from_basis_coords(_parse_coords(eta)),
                            hq_from_basis_coords(_parse_coords(m0)))
        out = {"hnf": [list(r) for r in lat.hnf], "index": lat.index,
               "kprime": lat.kprime, "mprime": lat.mprime}
        if minima:
            mins = successive_minima(lat, max(4, m))
            prod, lo, hi = minkowski_bracket(lat, mins)
            out["minima"] = list(mins)
            out["minkowski"] = {"product": prod, "lower": lo, "upper": hi}
        return out

    _emit(ctx, "lattice", params, compute)


@main.command()
@click.option("--m", default=None, type=int)
@click.option("--max", "max_m", default=None, type=int)
@click.pass_context
def repnum(ctx, m, max_m):
    """Primitive representation numbers (enumerated and closed form)."""
    params = {"m": m, "max": max_m}

    def compute():
        from .lattices import rep_number
        if (m is None) == (max_m is None):
            raise PreconditionError("give exactly one of --m / --max")
        if m is not None:
            a, b = rep_number(m)
            return {"m": m, "enumerated": a, "formula": b, "equal": a == b}
        rows = []
        for mm in range(1, max_m + 1):
            a, b = rep_number(mm)
            rows.append({"m": mm, "enumerated": a, "formula": b})
        return {"max": max_m, "values": rows,
                "all_equal": all(r["enumerated"] == r["formula"]
                                 for r in rows)}

    _emit(ctx, "repnum", params, compute)


@main.command()
@click.option("--n", required=True, type=int)
@click.option("--m", default=1, type=int, show_default=True,
              help="Level exponent for the local factors.")
@click.option("--primes", default="3,5,7", show_default=True)
@click.option("--skip-two", is_flag=True)
@click.option("--arch", is_flag=True,
              help="Include the Monte Carlo archimedean factor.")
@click.pass_context
def singular(ctx, n, m, primes, skip_two, arch):
    """Partial singular series: product of local densities."""
    params = {"n": n, "m": m, "primes": primes, "skip_two": skip_two,
              "arch": arch}

    def compute():
        from .densities import archimedean_density, singular_series
        plist = sorted({int(v) for v in primes.split(",") if v.strip()})
        value, per = singular_series(n, plist, m, include_two=not skip_two)
        out = {"n": n, "m": m, "value": value,
               "per_prime": {str(p): d for p, d in sorted(per.items())}}
        if arch:
            est, err = archimedean_density(n, seed=ctx.obj["seed"])
            out["archimedean_approx"] = est
            out["archimedean_stderr"] = err
        return out

    _emit(ctx, "singular", params, compute)


@main.command(name="delta-check")
@click.option("--alpha", default="0,0,0,0", show_default=True,
              help="Integral-basis coordinates of the shift.")
@click.option("--q", "--Q", "height", required=True, type=int)
@click.pass_context
def delta_check(ctx, alpha, height):
    """Two-sided delta-symbol sum: exact cancellation or main-term ratio."""
    params = {"alpha": alpha, "Q": height}

    def compute():
        from .algebra import hq_from_basis_coords
        from .delta import delta_sum
        a = hq_from_basis_coords(_parse_coords(alpha))
        rep = delta_sum(a, height)
        out = {"alpha": alpha, "Q": height, "difference": rep["difference"]}
        if a.is_zero():
            bt = rep["b_term"]
            out["b_term_approx"] = bt
            out["normalized"] = rep["normalized"]
            out["rel_gap_approx"] = abs(bt - float(rep["normalized"])) / abs(bt)
        else:
            out["terms"] = list(rep["terms"])
            out["cancelled"] = rep["difference"] == 0
        return out

    _emit(ctx, "delta-check", params, compute)


@main.command()
@click.argument("suite")
@click.pass_context
def audit(ctx, suite):
    """Run a named verification suite; exits 4 on any failed check."""
    params = {"suite": suite}

    def compute():
        from .audits import run_suite
        return run_suite(suite, seed=ctx.obj["seed"])

    _emit(ctx, "audit", params, compute)


if __name__ == "__main__":
    main()
