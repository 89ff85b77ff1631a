"""Command-line front end.

Every command takes flags, optionally backed by a ``key=value`` config file
(``--config``; flags win, unknown keys are rejected). Stochastic commands
need ``--seed``. Artifacts go to ``--out`` (default ``.``) and are written
atomically, followed by ``manifest.json``. Exit status: 0 success, 2 invalid
configuration, 3 runtime failure.
"""
import argparse
import os
import sys
from math import sqrt

from . import io as tio
from .enumeration import enumerate_general_boundary_quads, enumerate_simple_boundary_quads
from .errors import ConfigError, RuntimeFailure, TdquadError
from .experiments import replicate_rng, run_replicates
from .gluing import cut, glue, glue_extended
from .peeling import peel_increments, sample_peeling_host
from .quads import general_count, simple_count, sample_simple_boundary_quad
from .reports import BUILDERS
from .trees import (contour_of, sample_bi_infinite_tree_truncation, sample_infinite_tree_truncation,
                    sample_uniform_tree)

REQUIRED = object()
U64 = 2 ** 64


def _ints(s):
    return [int(x) for x in str(s).split(",") if x.strip()]


def _bool(s):
    if isinstance(s, bool):
        return s
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _seed(s):
    v = int(s)
    if not 0 <= v < U64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return v


# command -> (stochastic, {parameter: (type, default, help)})
COMMANDS = {
    "sample-tree": (True, {
        "size": (int, REQUIRED, "number of edges k (uniform) or spine depth m (infinite kinds)"),
        "kind": (str, "uniform", "uniform | infinite | bi-infinite"),
    }),
    "sample-quad": (True, {
        "faces": (int, REQUIRED, "target number of inner faces f"),
        "perimeter": (int, REQUIRED, "target half-perimeter l"),
        "window": (float, 0.25, "relative acceptance window around (f, l)"),
        "count": (int, 1, "ensemble size"),
        "max_attempts": (int, 2000, "attempt budget per sample"),
    }),
    "glue": (False, {
        "quad": (str, REQUIRED, "HEMAP file of a simple-boundary quad"),
        "tree": (str, REQUIRED, "parenthesis file of a plane tree"),
        "extended": (_bool, False, "allow a tree shorter than the boundary"),
    }),
    "cut": (False, {
        "decorated": (str, REQUIRED, "HEMAP file with a 'marked' line"),
    }),
    "peel": (True, {
        "faces": (int, 100000, "host faces"),
        "perimeter": (int, None, "host half-perimeter (default 3 sqrt f)"),
        "spine": (int, 40, "spine depth of the glued tree"),
        "hosts": (int, 1, "number of hosts"),
        "window": (float, 0.25, "host acceptance window"),
        "check_balls": (_bool, True, "assert ball containment on every layer"),
    }),
    "enumerate": (False, {
        "faces": (int, REQUIRED, "inner faces f"),
        "perimeter": (int, REQUIRED, "half-perimeter of the boundary"),
        "general": (_bool, False, "general instead of simple boundary"),
        "write_maps": (_bool, False, "also write every map as HEMAP"),
    }),
}

EXPERIMENTS = {
    "overshoot": (True, {
        "f": (int, 100000, "faces"),
        "l": (int, None, "half-perimeter (default 3 sqrt f)"),
        "replicates": (int, 1000, "overshoot samples"),
        "anchors": (int, 2, "anchors per map"),
        "window": (float, 0.25, "acceptance window"),
        "bootstrap": (int, 200, "bootstrap resamples"),
    }),
    "diameter": (True, {
        "f": (_ints, [1000, 10000, 100000], "comma-separated face counts"),
        "sigma": (float, 1.0, "l / sqrt f"),
        "alpha": (float, 2.0, "log power of the lower bound"),
        "replicates": (int, 50, "replicates per f"),
        "window": (float, 0.1, "acceptance window"),
    }),
    "subadditive": (True, {
        "n": (_ints, [5, 10, 20, 40], "comma-separated spine indices"),
        "f": (int, 100000, "host faces"),
        "sigma": (float, 3.0, "host l / sqrt f"),
        "replicates": (int, 50, "hosts"),
        "window": (float, 0.25, "acceptance window"),
    }),
    "rn": (False, {
        "k": (_ints, [50, 100, 200], "comma-separated tree sizes"),
        "gamma": (float, 0.25, "fraction of the tree left unexplored"),
        "sigma": (float, 1.0, "boundary scale"),
        "alpha": (float, 0.1, "event margin"),
        "f": (int, 10 ** 6, "faces"),
    }),
    "donsker": (True, {
        "k_small": (int, 2000, "small tree size"),
        "k_large": (int, 8000, "large tree size"),
        "samples": (int, 10000, "samples per size"),
    }),
    "peel-tail": (True, {
        "f": (int, 100000, "host faces"),
        "l": (int, None, "host half-perimeter (default 3 sqrt f)"),
        "spine": (int, 40, "spine depth"),
        "min_increments": (int, 4000, "pooled increments to collect"),
        "window": (float, 0.25, "acceptance window"),
        "a_max": (int, 100, "largest a in the CCDF table"),
        "fit_max": (int, None, "largest a in the slope fit (default spine/2)"),
    }),
    "claim": (True, {
        "samples": (int, 10 ** 6, "Monte-Carlo samples"),
        "a_max": (int, 1000, "largest a"),
        "tail_exponent": (float, 1.5, "tail exponent of O"),
    }),
}


def _add_params(p, params, stochastic):
    for name, (_, default, helptext) in params.items():
        extra = " (required)" if default is REQUIRED else ""
        p.add_argument("--" + name.replace("_", "-"), dest=name, default=None, help=helptext + extra)
    p.add_argument("--seed", default=None, help="unsigned 64-bit seed" + (" (required)" if stochastic else ""))
    p.add_argument("--threads", default=None, help="worker threads (does not change any artifact)")
    p.add_argument("--out", default=None, help="output directory (default .)")
    p.add_argument("--config", default=None, help="key=value config file; flags win")


def build_parser():
    ap = argparse.ArgumentParser(prog="tdquad", description="Tree-decorated quadrangulation toolkit.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, (stoch, params) in COMMANDS.items():
        _add_params(sub.add_parser(name, help=f"{name} command"), params, stoch)
    ex = sub.add_parser("experiment", help="run a statistical experiment and write its report")
    exsub = ex.add_subparsers(dest="experiment", required=True)
    for name, (stoch, params) in EXPERIMENTS.items():
        _add_params(exsub.add_parser(name, help=f"{name} experiment"), params, stoch)
    return ap


def read_config_file(path):
    cfg = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    for no, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{no}: expected key=value")
        k, v = line.split("=", 1)
        cfg[k.strip().replace("-", "_")] = v.strip()
    return cfg


def resolve(args, params, stochastic):
    """Merge flags over the config file over defaults; returns (params, seed, threads, out)."""
    ns = vars(args)
    filecfg = read_config_file(ns["config"]) if ns.get("config") else {}
    known = set(params) | {"seed", "threads", "out"}
    unknown = sorted(set(filecfg) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")

    def pick(key):
        v = ns.get(key)
        return filecfg.get(key) if v is None else v

    out = {}
    for name, (typ, default, _) in params.items():
        raw = pick(name)
        if raw is None:
            if default is REQUIRED:
                raise ConfigError(f"--{name.replace('_', '-')} is required")
            out[name] = default
            continue
        try:
            out[name] = typ(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {name}: {exc}") from None
    seed = pick("seed")
    if seed is None:
        if stochastic:
            raise ConfigError("--seed is required for stochastic commands")
    else:
        try:
            seed = _seed(seed)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    try:
        threads = int(pick("threads") or 1)
    except ValueError:
        raise ConfigError("--threads must be an integer") from None
    if threads < 1:
        raise ConfigError("--threads must be positive")
    return out, seed, threads, pick("out") or "."


# commands

def cmd_sample_tree(p, seed, threads, out):
    rng = replicate_rng(seed, "sample", 0)
    if p["size"] < 1:
        raise ConfigError("--size must be at least 1")
    if p["kind"] == "uniform":
        t = sample_uniform_tree(p["size"], rng)
        info = {"edges": t.size}
    elif p["kind"] in ("infinite", "bi-infinite"):
        f = sample_infinite_tree_truncation if p["kind"] == "infinite" else sample_bi_infinite_tree_truncation
        st = f(p["size"], rng)
        t = st.tree
        info = {"edges": t.size, "spine": st.spine.tolist()}
    else:
        raise ConfigError(f"unknown tree kind {p['kind']!r}")
    tio.write_tree(os.path.join(out, "tree.paren"), t)
    tio.write_json(os.path.join(out, "tree.json"), info)
    return {"edges": t.size}, ["tree.paren", "tree.json"]


def cmd_sample_quad(p, seed, threads, out):
    if p["count"] < 1:
        raise ConfigError("--count must be at least 1")

    def one(i, rng):
        return sample_simple_boundary_quad(p["faces"], p["perimeter"], p["window"], rng, p["max_attempts"])

    qs = run_replicates(one, seed, "sample", p["count"], threads, prefix=(1,))
    rows, files = [], []
    for i, q in enumerate(qs):
        name = "quad.hemap" if p["count"] == 1 else f"quad_{i:05d}.hemap"
        tio.write_quad(os.path.join(out, name), q)
        files.append(name)
        rows.append({"index": i, "seed": seed, "requested_f": p["faces"], "requested_l": p["perimeter"],
                     "realized_f": q.internal_faces, "realized_l": q.half_perimeter, "attempts": q.attempts})
    tio.write_csv(os.path.join(out, "ensemble.csv"), rows)
    return {"samples": len(qs), "realized": [(r["realized_f"], r["realized_l"]) for r in rows]}, \
        files + ["ensemble.csv"]


def cmd_glue(p, seed, threads, out):
    q = tio.read_quad(p["quad"])
    t = tio.read_tree(p["tree"])
    d, cert = (glue_extended if p["extended"] else glue)(q, t)
    tio.write_decorated(os.path.join(out, "decorated.hemap"), d)
    info = {"faces": d.internal_faces, "tree_edges": d.k, "vertices": d.map.vertex_count,
            "boundary_classes": cert.class_count, "hole": None if d.hole is None else int(d.hole.shape[0])}
    tio.write_json(os.path.join(out, "glue.json"), info)
    return info, ["decorated.hemap", "glue.json"]


def cmd_cut(p, seed, threads, out):
    d = tio.read_decorated(p["decorated"])
    q, t = cut(d)
    tio.write_quad(os.path.join(out, "quad.hemap"), q)
    tio.write_tree(os.path.join(out, "tree.paren"), contour_of(t))
    return {"faces": q.internal_faces, "half_perimeter": q.half_perimeter, "tree_edges": t.size}, \
        ["quad.hemap", "tree.paren"]


def cmd_peel(p, seed, threads, out):
    l = p["perimeter"] or int(round(3 * sqrt(p["faces"])))

    def one(i, rng):
        host = sample_peeling_host(p["faces"], l, p["spine"], rng, p["window"])
        s = peel_increments(host, 0, check_balls=p["check_balls"])
        return s.increments

    res = run_replicates(one, seed, "sample", p["hosts"], threads, prefix=(2,))
    rows = [(h, j, x) for h, inc in enumerate(res) for j, x in enumerate(inc)]
    tio.write_csv(os.path.join(out, "increments.csv"), rows, ["host", "layer", "increment"])
    return {"hosts": len(res), "increments": len(rows), "balls_checked": p["check_balls"]}, ["increments.csv"]


def cmd_enumerate(p, seed, threads, out):
    f, l = p["faces"], p["perimeter"]
    maps = (enumerate_general_boundary_quads if p["general"] else enumerate_simple_boundary_quads)(f, l)
    formula = general_count(f, l) if p["general"] else simple_count(f, l)
    info = {"faces": f, "perimeter": l, "boundary": "general" if p["general"] else "simple",
            "count": len(maps), "formula": formula}
    files = ["enumerate.json"]
    tio.write_json(os.path.join(out, "enumerate.json"), info)
    if p["write_maps"]:
        for i, m in enumerate(maps):
            name = f"map_{i:05d}.hemap"
            tio.write_hemap(os.path.join(out, name), m)
            files.append(name)
    print(f"count {len(maps)}")
    return info, files


def run_experiment(name, p, seed, threads, out):
    kwargs = dict(p)
    if name in ("diameter",):
        kwargs["f_grid"] = kwargs.pop("f")
    if name == "subadditive":
        kwargs["n_grid"] = kwargs.pop("n")
    if name == "rn":
        kwargs["k_values"] = kwargs.pop("k")
    builder = BUILDERS[name]
    if name != "rn":
        kwargs["seed"] = seed
    if name not in ("rn", "donsker", "claim"):
        kwargs["threads"] = threads
    rep = builder(**kwargs)
    files = ["report.json"]
    tio.write_json(os.path.join(out, "report.json"), rep.data)
    for fname, (rows, cols) in rep.tables.items():
        tio.write_csv(os.path.join(out, fname), rows, cols)
        files.append(fname)
    for fname, draw in rep.figures.items():
        draw(os.path.join(out, fname))
        files.append(fname)
    for crit, ok in rep.criteria.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}: {crit}")
    return rep.data["criteria"], files


HANDLERS = {
    "sample-tree": cmd_sample_tree,
    "sample-quad": cmd_sample_quad,
    "glue": cmd_glue,
    "cut": cmd_cut,
    "peel": cmd_peel,
    "enumerate": cmd_enumerate,
}


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "experiment":
            stoch, params = EXPERIMENTS[args.experiment]
            label = f"experiment {args.experiment}"
        else:
            stoch, params = COMMANDS[args.command]
            label = args.command
        p, seed, threads, out = resolve(args, params, stoch)
        os.makedirs(out, exist_ok=True)
        if args.command == "experiment":
            _, files = run_experiment(args.experiment, p, seed, threads, out)
        else:
            _, files = HANDLERS[args.command](p, seed, threads, out)
        tio.write_manifest(out, label, {"parameters": p, "seed": seed}, files)
    except (ConfigError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except RuntimeFailure as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except TdquadError as exc:  # pragma: no cover - every library error is one of the two above
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
