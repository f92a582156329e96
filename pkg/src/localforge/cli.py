"""Command-line interface: generate graphs, run algorithms, verify artifacts, write manifests."""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import math
import os
import random
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

from . import __version__
from .combinatorial import (
    is_maximal_independent,
    matching_ctda,
    mis_ctda,
    verify_matching,
    weighted_is,
)
from .doubling import basic_algorithm, extend_partition, good_tuple_search, strong_family
from .errors import ContractError, LocalForgeError, StructuralError
from .generators import KINDS, generate
from .graph import BoundedDegreeGraph, doubling_constant, max_eccentricity
from .hyperfinite import FINDERS, hyperfinite_oracle
from .jsonio import digest, dumps, frac_str, parse_fraction, read_json
from .limits import awalk_exists, awalk_period, configuration_set, naive_distance
from .local import Labeling, compress_labels, greedy_separating_labeling
from .partition import (
    CodeFamily,
    Partition,
    fractional_tree_family,
    verify_partition,
    verify_strong_family,
)
from .spectra import laplacian_spectrum, restricted_norm, spectrum_estimate_for

EXIT_OK, EXIT_CONTRACT, EXIT_STRUCTURAL = 0, 2, 3
KIND_ALIASES = {"random": "randomBoundedDegree", "tree": "regularTreeTruncation"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_STRUCTURAL, f"{self.prog}: error: {message}\n")


def _clean(obj):
    """Round floats to 12 digits and turn rationals into "p/q" strings, recursively."""
    if isinstance(obj, float):
        return round(obj, 12)
    if isinstance(obj, Fraction):
        return frac_str(obj)
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    raw = os.environ.get("LOCALFORGE_SEED", "0")
    try:
        return int(raw)
    except ValueError as exc:
        raise StructuralError(f"LOCALFORGE_SEED must be an integer, got {raw!r}") from exc


def _load_graph(path: str) -> BoundedDegreeGraph:
    data = read_json(path)
    if isinstance(data, dict) and "graph" in data:
        data = data["graph"]
    return BoundedDegreeGraph.from_dict(data)


def _load_labeling(path: str | None, G: BoundedDegreeGraph, k: int) -> Labeling:
    if path is None:
        return greedy_separating_labeling(G, k)
    lab = Labeling.from_dict(read_json(path))
    if len(lab) != G.n:
        raise StructuralError(f"labeling has {len(lab)} values for {G.n} vertices")
    return lab


def _injective(G: BoundedDegreeGraph) -> Labeling:
    return Labeling(tuple(range(1, G.n + 1)))


class Session:
    """Collects inputs/outputs of one command and writes the manifest."""

    def __init__(self, args, argv):
        self.args = args
        self.argv = list(argv)
        self.inputs: list[str] = []
        self.start = time.perf_counter()

    def read(self, path: str) -> str:
        self.inputs.append(path)
        return path

    def emit(self, obj, status: int = EXIT_OK) -> int:
        text = dumps(_clean(obj))
        out = getattr(self.args, "output", None)
        if out:
            Path(out).write_text(text)
            self._manifest(out, status)
        else:
            sys.stdout.write(text)
        return status

    def _manifest(self, out: str, status: int) -> None:
        params = {k: (str(v) if isinstance(v, Fraction) else v) for k, v in vars(self.args).items() if k not in ("func",)}
        manifest = {
            "tool": "localforge",
            "version": __version__,
            "command": [p for p in (self.args.command, getattr(self.args, "target", None)) if p],
            "argv": self.argv,
            "parameters": params,
            "seed": _seed(self.args),
            "inputs": {p: digest(p) for p in self.inputs},
            "outputs": {out: digest(out)},
            "status": status,
            "wallTime": round(time.perf_counter() - self.start, 6),
        }
        Path(f"{out}.manifest.json").write_text(dumps(manifest))


# ---------------------------------------------------------------- generate / label


def cmd_generate(s: Session) -> int:
    a = s.args
    kind = KIND_ALIASES.get(a.kind, a.kind)
    params = {k: getattr(a, k) for k in ("n", "a", "b", "d", "branching", "depth", "edges") if getattr(a, k) is not None}
    G = generate(kind, params, _seed(a))
    return s.emit(G.to_dict())


def cmd_label(s: Session) -> int:
    a = s.args
    G = _load_graph(s.read(a.graph))
    if a.compress is not None:
        lab = compress_labels(G, _injective(G), a.compress, a.k)
    else:
        lab = greedy_separating_labeling(G, a.k)
    return s.emit(lab.to_dict())


# ---------------------------------------------------------------- run


def _content_digest(obj) -> str:
    return hashlib.sha256(dumps(_clean(obj)).encode()).hexdigest()


def _check_digest(data, key: str) -> None:
    """Reject artifacts whose payload no longer matches the digest written by ``run``."""
    if isinstance(data, dict) and "digest" in data and key in data:
        if _content_digest(data[key]) != data["digest"]:
            raise StructuralError(f"{key} payload does not match its recorded digest (file was modified)")


def _partition_result(G, P: Partition, verify: bool, extra: dict | None = None) -> tuple[dict, int]:
    out = {"partition": P.to_dict(), "digest": _content_digest(P.to_dict())}
    if extra:
        out.update(extra)
    status = EXIT_OK
    if verify:
        rep = verify_partition(G, P)
        out["verification"] = rep.to_dict()
        status = EXIT_OK if rep.passed else EXIT_CONTRACT
    return out, status


def _doubling_partition(G, a, seed):
    eps = a.eps
    D = a.D or max(2, math.ceil(doubling_constant(G, max(1, max_eccentricity(G)))))
    tup = good_tuple_search(G, D, eps, levels=a.levels, margin_factor=a.margin, seed=seed)
    phi = _injective(G)
    system = basic_algorithm(G, tup, phi)
    ext = extend_partition(G, system, a.eps_prime if a.eps_prime is not None else eps / 4, cover_radius=a.cover_radius, phi=phi)
    extra = {"tuple": tup.to_dict(), "niceBalls": system.to_dict(), "maxDisplacement": ext.max_displacement}
    return ext.partition, extra


def run_partition(s: Session, G) -> int:
    a = s.args
    if a.method == "hyperfinite":
        res = hyperfinite_oracle(G, a.eps, a.K, a.finder)
        P, extra = res.partition, {"sweeps": res.sweeps_run}
    else:
        P, extra = _doubling_partition(G, a, _seed(a))
    out, status = _partition_result(G, P, not a.no_verify, extra)
    return s.emit(out, status)


def run_hyperfinite(s: Session, G) -> int:
    a = s.args
    res = hyperfinite_oracle(G, a.eps, a.K, a.finder)
    out, status = _partition_result(G, res.partition, not a.no_verify)
    out.update({"sweepsBudget": res.sweeps_budget, "sweepsRun": res.sweeps_run, "starSize": res.star_size, "starBound": res.star_bound})
    if not a.no_verify and res.star_size > res.star_bound:
        status = EXIT_CONTRACT
    return s.emit(out, status)


def run_mis(s: Session, G) -> int:
    a = s.args
    phi = _load_labeling(a.labels and s.read(a.labels), G, 1)
    S = mis_ctda(G, phi)
    out = {"set": sorted(S)}
    status = EXIT_OK
    if not a.no_verify:
        ok = is_maximal_independent(G, S)
        out["verification"] = {"pass": ok}
        status = EXIT_OK if ok else EXIT_CONTRACT
    return s.emit(out, status)


def run_matching(s: Session, G) -> int:
    a = s.args
    phi = _load_labeling(a.labels and s.read(a.labels), G, 20 * a.T) if a.labels else _injective(G)
    run = matching_ctda(G, phi, a.T, bound=a.bound)
    edges = [list(e) for e in sorted(run.matching)]
    out = {"T": a.T, "edges": edges, "digest": _content_digest(edges), "sweeps": run.sweeps, "families": run.families}
    status = EXIT_OK
    if not a.no_verify:
        rep = verify_matching(G, run.matching, a.T)
        out["verification"] = rep.to_dict()
        status = EXIT_OK if rep.passed else EXIT_CONTRACT
    return s.emit(out, status)


def run_strong_family(s: Session, G) -> int:
    a = s.args
    seed = _seed(a)
    D = a.D or 2
    tup = good_tuple_search(G, D, a.eps, a.delta, levels=a.levels, margin_factor=a.margin, seed=seed)
    fam = strong_family(
        G, tup, a.samples, seed, _injective(G), eps_prime=a.eps_prime, cover_radius=a.cover_radius, threads=a.threads
    )
    out = {"family": fam.to_dict(), "digest": _content_digest(fam.to_dict()), "tuple": tup.to_dict()}
    status = EXIT_OK
    if not a.no_verify:
        rep = verify_strong_family(G, fam, a.eps)
        out["verification"] = rep.to_dict()
        status = EXIT_OK if rep.passed else EXIT_CONTRACT
    return s.emit(out, status)


def _load_family(path: str) -> CodeFamily:
    data = read_json(path)
    if isinstance(data, dict) and "family" in data:
        data = data["family"]
    return CodeFamily.from_dict(data)


def run_weighted_is(s: Session, G) -> int:
    a = s.args
    fam = _load_family(s.read(a.family))
    if a.weights:
        w = read_json(s.read(a.weights))
        if isinstance(w, dict):
            w = w.get("weights")
        if not isinstance(w, list) or len(w) != G.n or not all(isinstance(x, int) and x >= 0 for x in w):
            raise StructuralError("weights must be a list of non-negative integers, one per vertex")
    else:
        rng = random.Random(_seed(a))
        w = [rng.randint(0, a.max_weight) for _ in range(G.n)]
    parts = fam.partitions()
    if a.threads > 1:
        with ThreadPoolExecutor(max_workers=a.threads) as pool:
            results = list(pool.map(lambda P: weighted_is(G, [P], w), parts))
    else:
        results = [weighted_is(G, [P], w) for P in parts]
    weights = [r.best.weight for r in results]
    best = max(range(len(weights)), key=lambda i: (weights[i], -i))
    out = {"weights": weights, "bestIndex": best, "best": results[best].best.to_dict(), "vertexWeights": w}
    return s.emit(out)


def run_tree_fractional(s: Session, G) -> int:
    a = s.args
    fam = fractional_tree_family(G, a.root, a.l)
    out = {"family": fam.to_dict(), "digest": _content_digest(fam.to_dict())}
    status = EXIT_OK
    if not a.no_verify:
        rep = verify_strong_family(G, fam, Fraction(3, a.l))
        out["verification"] = rep.to_dict()
        status = EXIT_OK if rep.max <= Fraction(2, a.l) else EXIT_CONTRACT
    return s.emit(out, status)


RUNNERS = {
    "mis": run_mis,
    "matching": run_matching,
    "partition": run_partition,
    "hyperfinite": run_hyperfinite,
    "strong-family": run_strong_family,
    "weighted-is": run_weighted_is,
    "tree-fractional": run_tree_fractional,
}


def cmd_run(s: Session) -> int:
    G = _load_graph(s.read(s.args.graph))
    return RUNNERS[s.args.target](s, G)


# ---------------------------------------------------------------- verify


def cmd_verify(s: Session) -> int:
    a = s.args
    G = _load_graph(s.read(a.graph))
    data = read_json(s.read(a.artifact))
    _check_digest(data, {"partition": "partition", "matching": "edges"}.get(a.target, "family"))
    if a.target == "partition":
        P = Partition.from_dict(data["partition"] if isinstance(data, dict) and "partition" in data else data)
        if a.eps is not None:
            P = Partition(P.class_of, a.eps, P.K if a.K is None else a.K, P.star)
        rep = verify_partition(G, P)
        return s.emit(rep.to_dict(), EXIT_OK if rep.passed else EXIT_CONTRACT)
    if a.target == "matching":
        if not isinstance(data, dict) or "edges" not in data:
            raise StructuralError("matching file needs an 'edges' list")
        T = a.T if a.T is not None else int(data.get("T", 1))
        rep = verify_matching(G, [tuple(e) for e in data["edges"]], T)
        return s.emit(rep.to_dict(), EXIT_OK if rep.passed else EXIT_CONTRACT)
    fam = CodeFamily.from_dict(data["family"] if isinstance(data, dict) and "family" in data else data)
    eps = a.eps if a.eps is not None else fam.epsilon
    rep = verify_strong_family(G, fam, eps)
    return s.emit(rep.to_dict(), EXIT_OK if rep.passed else EXIT_CONTRACT)


# ---------------------------------------------------------------- spectrum


def cmd_spectrum(s: Session) -> int:
    a = s.args
    G = _load_graph(s.read(a.graph))
    if a.target == "restricted-norm":
        fam = _load_family(s.read(a.family))
        coeffs = [float(c) for c in a.poly.split(",")]
        delta = a.delta
        if delta is None:
            delta = float(verify_strong_family(G, fam, 1).max)
        rep = restricted_norm(G, fam, coeffs, l=a.l, delta=delta)
        out = rep.to_dict()
        ok = rep.gap >= -1e-9 and (rep.gap_bound is None or rep.gap <= rep.gap_bound + 1e-9)
        out["pass"] = ok
        return s.emit(out, EXIT_OK if ok else EXIT_CONTRACT)
    spec = laplacian_spectrum(G) if a.target == "full" else spectrum_estimate_for(G, a.s, a.t)
    if a.csv:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "eigenvalue"])
        for k, v in enumerate(spec.values):
            w.writerow([k, repr(round(v, 12))])
        text = buf.getvalue()
        if a.output:
            Path(a.output).write_text(text)
            s._manifest(a.output, EXIT_OK)
        else:
            sys.stdout.write(text)
        return EXIT_OK
    return s.emit(spec.to_dict())


# ---------------------------------------------------------------- compare


def _parse_words(text: str) -> list[tuple]:
    words = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if chunk:
            words.append(tuple(int(x) for x in chunk.split(",")))
    if not words:
        raise StructuralError("no words given")
    return words


def cmd_compare(s: Session) -> int:
    a = s.args
    if a.target == "naive-distance":
        if len(a.inputs) != 2:
            raise StructuralError("naive-distance needs two graph files")
        G, H = (_load_graph(s.read(p)) for p in a.inputs)
        return s.emit({"distance": frac_str(naive_distance(G, H))})
    if a.target == "configurations":
        if len(a.inputs) != 2:
            raise StructuralError("configurations needs a graph file and a labeling file")
        G = _load_graph(s.read(a.inputs[0]))
        lab = Labeling.from_dict(read_json(s.read(a.inputs[1])))
        conf = configuration_set(G, lab, a.r)
        return s.emit({"radius": a.r, "count": len(conf), "balls": [cb.encoding.decode() for cb in sorted(conf)]})
    words = _parse_words(a.words)
    rep = awalk_period(words).to_dict()
    if a.n is not None:
        rep["n"] = a.n
        rep["exists"] = awalk_exists(words, a.n)
    return s.emit(rep)


# ---------------------------------------------------------------- report


def cmd_report(s: Session) -> int:
    a = s.args
    man = read_json(a.manifest)
    if not isinstance(man, dict) or "argv" not in man:
        raise StructuralError("not a manifest")
    summary = {k: man.get(k) for k in ("command", "seed", "status", "inputs", "outputs", "wallTime")}
    if not a.replay:
        return s.emit(summary)
    for p, h in man.get("inputs", {}).items():
        if not Path(p).exists() or digest(p) != h:
            summary["replay"] = {"pass": False, "reason": f"input {p} changed or missing"}
            return s.emit(summary, EXIT_CONTRACT)
    before = dict(man["outputs"])
    env = dict(os.environ)
    env["LOCALFORGE_SEED"] = str(man.get("seed", 0))
    old = os.environ.get("LOCALFORGE_SEED")
    os.environ["LOCALFORGE_SEED"] = env["LOCALFORGE_SEED"]
    try:
        main(man["argv"])
    finally:
        if old is None:
            os.environ.pop("LOCALFORGE_SEED", None)
        else:
            os.environ["LOCALFORGE_SEED"] = old
    after = {p: digest(p) for p in before}
    same = after == before
    summary["replay"] = {"pass": same, "outputs": after}
    return s.emit(summary, EXIT_OK if same else EXIT_CONTRACT)


# ---------------------------------------------------------------- parser


def _frac(text: str) -> Fraction:
    q = parse_fraction(text)
    if q <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive rational, got {text!r}")
    return q


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="localforge", description="Local graph algorithms, partitions and spectra.")
    p.add_argument("--version", action="version", version=f"localforge {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-o", "--output", help="write JSON here (and a .manifest.json beside it)")
    common.add_argument("--seed", type=int, help="overrides LOCALFORGE_SEED (default 0)")
    common.add_argument("--threads", type=int, default=1)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", parents=[common], help="build a graph")
    g.add_argument("kind", choices=sorted(KINDS) + sorted(KIND_ALIASES))
    for name in ("n", "a", "b", "d", "branching", "depth", "edges"):
        g.add_argument(f"--{name}", type=int)
    g.set_defaults(func=cmd_generate)

    lb = sub.add_parser("label", parents=[common], help="k-separating labeling")
    lb.add_argument("graph")
    lb.add_argument("--k", type=int, default=1)
    lb.add_argument("--compress", type=int, help="shrink an injective labeling to {1..m}")
    lb.set_defaults(func=cmd_label)

    r = sub.add_parser("run", parents=[common], help="run an algorithm")
    r.add_argument("target", choices=sorted(RUNNERS))
    r.add_argument("graph")
    r.add_argument("--labels")
    r.add_argument("--eps", type=_frac, default=Fraction(1, 2))
    r.add_argument("--delta", type=_frac, default=Fraction(1, 2))
    r.add_argument("--eps-prime", type=_frac)
    r.add_argument("--K", type=int, default=50)
    r.add_argument("--T", type=int, default=3)
    r.add_argument("--bound", type=int)
    r.add_argument("--D", type=int)
    r.add_argument("--levels", type=int)
    r.add_argument("--margin", type=int, default=20)
    r.add_argument("--cover-radius", type=int)
    r.add_argument("--samples", type=int, default=8)
    r.add_argument("--method", choices=["doubling", "hyperfinite"], default="doubling")
    r.add_argument("--finder", choices=sorted(FINDERS), default="ball")
    r.add_argument("--family")
    r.add_argument("--weights")
    r.add_argument("--max-weight", type=int, default=9)
    r.add_argument("--root", type=int, default=0)
    r.add_argument("--l", type=int, default=8)
    r.add_argument("--no-verify", action="store_true")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", parents=[common], help="check an artifact")
    v.add_argument("target", choices=["partition", "matching", "strong-family"])
    v.add_argument("graph")
    v.add_argument("artifact")
    v.add_argument("--eps", type=_frac)
    v.add_argument("--K", type=int)
    v.add_argument("--T", type=int)
    v.set_defaults(func=cmd_verify)

    sp = sub.add_parser("spectrum", parents=[common], help="spectral tools")
    sp.add_argument("target", choices=["full", "estimate", "restricted-norm"])
    sp.add_argument("graph")
    sp.add_argument("--s", type=int, default=4)
    sp.add_argument("--t", type=int, default=1)
    sp.add_argument("--family")
    sp.add_argument("--poly", default="0,0.5", help="coefficients, constant term first")
    sp.add_argument("--l", type=int, default=1)
    sp.add_argument("--delta", type=float)
    sp.add_argument("--csv", action="store_true")
    sp.set_defaults(func=cmd_spectrum)

    c = sub.add_parser("compare", parents=[common], help="graph-limit comparisons")
    c.add_argument("target", choices=["naive-distance", "configurations", "awalk"])
    c.add_argument("inputs", nargs="*")
    c.add_argument("--r", type=int, default=1)
    c.add_argument("--words", default="1,2,1;2,1,2")
    c.add_argument("--n", type=int)
    c.set_defaults(func=cmd_compare)

    rp = sub.add_parser("report", parents=[common], help="summarise or replay a manifest")
    rp.add_argument("manifest")
    rp.add_argument("--replay", action="store_true")
    rp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "threads", 1) < 1:
        sys.stderr.write("localforge: --threads must be at least 1\n")
        return EXIT_STRUCTURAL
    session = Session(args, argv)
    try:
        return args.func(session)
    except StructuralError as exc:
        sys.stderr.write(f"localforge: input error: {exc}\n")
        return EXIT_STRUCTURAL
    except ContractError as exc:
        sys.stderr.write(f"localforge: contract failure: {exc}\n")
        return EXIT_CONTRACT
    except LocalForgeError as exc:
        sys.stderr.write(f"localforge: {exc}\n")
        return EXIT_CONTRACT
    except (OSError, KeyError, TypeError, ValueError) as exc:
        sys.stderr.write(f"localforge: input error: {exc}\n")
        return EXIT_STRUCTURAL


if __name__ == "__main__":
    sys.exit(main())
