"""Command-line front end.

Structured results are JSON, sweeps are CSV. Every file written carries a
run manifest (JSON sidecar or a leading ``#`` comment line for CSV) so a
result can be traced back to its inputs and re-run.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import platform
import sys
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import __version__, fme
from .bounds import BOUND_LAW_KIND
from .channels import (
    BUILTIN_CHANNELS,
    ChannelSpec,
    builtin_channel,
    is_state_deterministic,
    law_to_json,
    load_channel,
    load_law,
    save_channel,
)
from .errors import MacRegionsError
from .gaussian import MODELS, GaussianParams, gaussian_capacity
from .search import MODES, RatePoint, SearchConfig, compute_region, sum_capacity

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_USAGE = 2
EXIT_ACCEPTANCE = 3

REGION_HEADER = ("lambda", "rc", "r1", "sum_cap", "r1_cap", "feasible")
SIM_HEADER = ("n", "rate_rc", "rate_r1", "err", "err_lo", "err_hi")
BUILTIN_PREFIX = "builtin:"


@dataclass
class RunManifest:
    subcommand: str
    config: dict
    seed: int | None = None
    inputs: dict = field(default_factory=dict)
    version: str = __version__
    python: str = platform.python_version()
    started_at: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds"))
    elapsed_s: float = 0.0

    def add_input(self, path: str | Path) -> None:
        data = Path(path).read_bytes()
        self.inputs[str(path)] = "sha256:" + hashlib.sha256(data).hexdigest()

    def to_json(self) -> dict:
        return asdict(self)


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, int):
        return str(x)
    return f"{float(x):.10f}"


def csv_text(header, rows, manifest: RunManifest | None = None) -> str:
    buf = io.StringIO()
    if manifest is not None:
        buf.write("# manifest " + json.dumps(manifest.to_json(), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def csv_body(text: str) -> str:
    """CSV text with manifest comment lines removed."""
    return "".join(line for line in text.splitlines(keepends=True) if not line.startswith("#"))


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _parse_params(items) -> dict:
    params = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise MacRegionsError(f"--param expects KEY=VALUE, got {item!r}")
        try:
            params[key] = float(value)
        except ValueError:
            raise MacRegionsError(f"--param {key}: {value!r} is not a number") from None
    return params


def _channel(args, manifest: RunManifest) -> ChannelSpec:
    ref = args.channel
    if ref.startswith(BUILTIN_PREFIX):
        params = _parse_params(args.param)
        manifest.config["channel"] = {"builtin": ref[len(BUILTIN_PREFIX):], "params": params}
        return builtin_channel(ref[len(BUILTIN_PREFIX):], params)
    if not Path(ref).is_file():
        raise MacRegionsError(f"channel file {ref!r} not found (use builtin:NAME for built-in channels)")
    manifest.add_input(ref)
    manifest.config["channel"] = {"path": ref}
    return load_channel(ref)


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


# ---------------------------------------------------------------- subcommands

def cmd_region(args) -> int:
    manifest = RunManifest("region", {}, seed=args.seed)
    t0 = time.perf_counter()
    ch = _channel(args, manifest)
    cfg = SearchConfig(lambda_points=args.lambda_points, restarts=args.restarts, sweeps=args.sweeps,
                       grid_resolution=args.grid_resolution, card_v=args.card_v, card_u=args.card_u,
                       seed=args.seed, q1=args.q1, q2=args.q2, mode=args.mode,
                       relax_constraint=args.relax_constraint, lambdas=args.lambdas)
    manifest.config.update(bound=args.bound, search=cfg.to_json())
    region = compute_region(ch, args.bound, cfg)
    manifest.elapsed_s = round(time.perf_counter() - t0, 3)
    rows = [(s.lam, s.rc, s.r1, s.sum_cap, s.r1_cap, s.feasible) for s in region.samples]
    _emit(csv_text(REGION_HEADER, rows, manifest), args.out)
    if args.out is not None:
        sidecar = {
            "manifest": manifest.to_json(),
            "bound": region.bound,
            "mode": region.mode,
            "cards": dict(region.cards),
            "cardinality_heuristic": region.cardinality_heuristic,
            "hull": [list(p) for p in region.hull],
            "max_sum": region.max_sum(),
            "max_r1": region.max_r1(),
            "witness_digests": {f"{s.lam:.6f}": s.digest for s in region.samples},
        }
        if args.save_witnesses:
            sidecar["witness_laws"] = {c.digest: law_to_json(c.law) for c in region.corners}
        Path(str(args.out) + ".json").write_text(_dump_json(sidecar))
    return EXIT_OK


def cmd_sum_capacity(args) -> int:
    manifest = RunManifest("sum-capacity", {})
    t0 = time.perf_counter()
    ch = _channel(args, manifest)
    value = sum_capacity(ch)
    manifest.elapsed_s = round(time.perf_counter() - t0, 3)
    _emit(_dump_json({"value": value, "channel": ch.name, "manifest": manifest.to_json()}), args.out)
    return EXIT_OK


def cmd_gaussian(args) -> int:
    params = GaussianParams(P1=args.P1, P2=args.P2, Q=args.Q, N=args.N, rho12=args.rho12)
    manifest = RunManifest("gaussian", {"model": args.model, **asdict(params)})
    res = gaussian_capacity(args.model, params)
    out = {"value": res["value"], "rho_star": res["rho_star"], "model": args.model}
    if args.out is not None:
        out["manifest"] = manifest.to_json()
    _emit(_dump_json(out), args.out)
    return EXIT_OK


def cmd_fme(args) -> int:
    res = fme.run_builtin(args.system)
    if args.text:
        text = "".join(f"[{label}]\n" + "".join(line + "\n" for line in entry["text"])
                       for label, entry in res["stages"].items())
        _emit(text, args.out)
        return EXIT_OK
    if args.out is not None:
        res = dict(res, manifest=RunManifest("fme", {"system": args.system}).to_json())
    _emit(fme.dumps(res), args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .sim import SimConfig, example3_law, identity_strategy_law, run_block_markov, run_shannon_strategy

    manifest = RunManifest("simulate", {}, seed=args.seed)
    t0 = time.perf_counter()
    ch = _channel(args, manifest)
    if args.law is not None:
        manifest.add_input(args.law)
        law = load_law(args.law)
    elif args.scheme == "block-markov":
        law = example3_law(args.beta)
    else:
        law = identity_strategy_law(ch)
    rates = RatePoint(args.rc, args.r1)
    runner = run_block_markov if args.scheme == "block-markov" else run_shannon_strategy
    results = []
    cfgs = []
    for n in args.n:
        cfg = SimConfig(n=n, B=args.B, trials=args.trials, seed=args.seed, epsilon=args.epsilon,
                        epsilon_scale=args.epsilon_scale, delta=args.delta, backoff=args.backoff,
                        decision=args.decision, cover_rule=args.cover_rule, law=law)
        cfgs.append(cfg.to_json())
        results.append((n, runner(ch, rates, cfg)))
    manifest.config.update(scheme=args.scheme, rates=asdict(rates), law=law_to_json(law), sim=cfgs)
    manifest.elapsed_s = round(time.perf_counter() - t0, 3)
    out = {
        "scheme": args.scheme,
        "rates": asdict(rates),
        "results": [dict(n=n, **r.to_json()) for n, r in results],
        "manifest": manifest.to_json(),
    }
    _emit(_dump_json(out), args.out)
    if args.csv is not None:
        rows = [(n, rates.rc, rates.r1, r.rate, r.ci_low, r.ci_high) for n, r in results]
        Path(args.csv).write_text(csv_text(SIM_HEADER, rows, manifest))
    return EXIT_OK


def cmd_verify_examples(args) -> int:
    from .acceptance import run_all

    manifest = RunManifest("verify-examples", {"only": list(args.only) if args.only else None})
    t0 = time.perf_counter()
    results = run_all(args.only)
    manifest.elapsed_s = round(time.perf_counter() - t0, 3)
    for r in results:
        print(r.line())
    n_pass = sum(r.passed and r.within_budget for r in results)
    print(f"{n_pass}/{len(results)} criteria passed")
    if args.out is not None:
        Path(args.out).write_text(_dump_json({"criteria": [r.to_json() for r in results],
                                              "manifest": manifest.to_json()}))
    return EXIT_OK if n_pass == len(results) else EXIT_ACCEPTANCE


def cmd_channel_validate(args) -> int:
    ch = load_channel(args.path)
    print(_dump_json({
        "path": args.path,
        "valid": True,
        "name": ch.name,
        "sizes": ch.sizes,
        "state_deterministic": is_state_deterministic(ch),
        "state_factors": list(ch.state_factors) if ch.state_factors else None,
    }), end="")
    return EXIT_OK


def cmd_channel_export(args) -> int:
    ch = builtin_channel(args.name, _parse_params(args.param))
    if args.out is None:
        sys.stdout.write(json.dumps(ch.to_json(), indent=1, sort_keys=True) + "\n")
    else:
        save_channel(ch, args.out)
    return EXIT_OK


# ---------------------------------------------------------------- parser

def _add_channel_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--channel", required=True, metavar="PATH",
                   help=f"channel JSON file, or {BUILTIN_PREFIX}NAME for one of {sorted(BUILTIN_CHANNELS)}")
    p.add_argument("--param", action="append", metavar="KEY=VALUE", help="parameter of a built-in channel")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="macregions", allow_abbrev=False,
                                     description="Rate regions of state-dependent cooperative MACs.")
    parser.add_argument("--version", action="version", version=f"macregions {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("region", help="search a rate region and emit its support samples as CSV",
                       allow_abbrev=False)
    _add_channel_args(p)
    p.add_argument("--bound", required=True, choices=sorted(BOUND_LAW_KIND))
    p.add_argument("--mode", choices=MODES, default="pentagon-union")
    p.add_argument("--relax-constraint", action="store_true")
    p.add_argument("--lambda-points", type=int, default=33)
    p.add_argument("--lambdas", type=_float_list, default=None, help="explicit comma-separated lambda values")
    p.add_argument("--restarts", type=int, default=4)
    p.add_argument("--sweeps", type=int, default=60)
    p.add_argument("--grid-resolution", type=int, default=8)
    p.add_argument("--card-v", type=int, default=None)
    p.add_argument("--card-u", type=int, default=None)
    p.add_argument("--q1", type=float, default=None, help="cap on Pr{X1 != 0}")
    p.add_argument("--q2", type=float, default=None, help="cap on Pr{X2 != 0}")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--save-witnesses", action="store_true", help="include witness laws in the JSON sidecar")
    p.add_argument("--out", default=None, metavar="PATH", help="CSV path; the sidecar goes to PATH.json")
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("sum-capacity", help="Blahut-Arimoto sum capacity of the state-averaged MAC",
                       allow_abbrev=False)
    _add_channel_args(p)
    p.add_argument("--out", default=None, metavar="PATH")
    p.set_defaults(func=cmd_sum_capacity)

    p = sub.add_parser("gaussian", help="closed-form Gaussian capacities", allow_abbrev=False)
    p.add_argument("--model", required=True, choices=MODELS)
    p.add_argument("--P1", type=float, required=True)
    p.add_argument("--P2", type=float, required=True)
    p.add_argument("--N", type=float, default=0.0)
    p.add_argument("--Q", type=float, required=True)
    p.add_argument("--rho12", type=float, default=0.0)
    p.add_argument("--out", default=None, metavar="PATH")
    p.set_defaults(func=cmd_gaussian)

    p = sub.add_parser("fme", help="Fourier-Motzkin projection of a built-in symbolic system",
                       allow_abbrev=False)
    p.add_argument("--system", required=True, choices=("appendixE", "appendixJ"))
    p.add_argument("--text", action="store_true", help="print the rendered stages instead of JSON")
    p.add_argument("--out", default=None, metavar="PATH")
    p.set_defaults(func=cmd_fme)

    p = sub.add_parser("simulate", help="Monte Carlo error rate of a coding scheme", allow_abbrev=False)
    _add_channel_args(p)
    p.add_argument("--scheme", choices=("block-markov", "shannon"), default="block-markov")
    p.add_argument("--rc", type=float, required=True)
    p.add_argument("--r1", type=float, required=True)
    p.add_argument("--n", type=_int_list, required=True, help="blocklength(s), comma-separated")
    p.add_argument("--B", type=int, default=4)
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--epsilon-scale", type=float, default=0.6)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--backoff", type=float, default=0.0)
    p.add_argument("--decision", choices=("max-likelihood", "min-distance", "unique"), default="max-likelihood")
    p.add_argument("--cover-rule", choices=("first", "best"), default="first")
    p.add_argument("--law", default=None, metavar="PATH", help="law JSON {kind, factors}")
    p.add_argument("--beta", type=float, default=0.02,
                   help="flip probability of the default block-markov witness V = S xor Bern(beta)")
    p.add_argument("--csv", default=None, metavar="PATH")
    p.add_argument("--out", default=None, metavar="PATH")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify-examples", help="run the acceptance battery", allow_abbrev=False)
    p.add_argument("--only", type=_int_list, default=None, help="criterion numbers, comma-separated")
    p.add_argument("--out", default=None, metavar="PATH")
    p.set_defaults(func=cmd_verify_examples)

    p = sub.add_parser("channel", help="channel file utilities", allow_abbrev=False)
    csub = p.add_subparsers(dest="channel_command", required=True)
    q = csub.add_parser("validate", help="check a channel JSON file", allow_abbrev=False)
    q.add_argument("path")
    q.set_defaults(func=cmd_channel_validate)
    q = csub.add_parser("export", help="write a built-in channel as JSON", allow_abbrev=False)
    q.add_argument("name", choices=sorted(BUILTIN_CHANNELS))
    q.add_argument("--param", action="append", metavar="KEY=VALUE")
    q.add_argument("--out", default=None, metavar="PATH")
    q.set_defaults(func=cmd_channel_export)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except (MacRegionsError, OSError) as exc:
        print(f"macregions: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
