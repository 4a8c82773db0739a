"""Command-line front end: ``dpsecagg {run,verify,rates,sweep}``.

Configuration comes from an optional JSON file (``--config``) overridden by
flags; anything unset falls back to built-in defaults. Every output file is
written atomically and carries a schema version.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import random
import sys
import tempfile
from dataclasses import dataclass, fields

from .errors import EnumerationTooLarge, ProtocolFailure, SecAggError
from .harness import DropoutModel, rate_sweep, rates_csv, run_protocol, sweep
from .model import (
    SCHEMA_VERSION,
    SCHEMES,
    DemandMatrix,
    ProblemParams,
    default_modulus,
    sample_demand,
    sample_inputs,
    validate_demand,
)
from .scheme_baseline import rewrite_demand_for_baseline
from .verify import (
    FAIL,
    PASS,
    SKIPPED,
    Verdict,
    decode_check,
    mi_exhaustive,
    privacy_query_uniformity,
    security_realizations,
)

log = logging.getLogger("dpsecagg")

CHECKS = ("decode", "security", "privacy", "mi")

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2


@dataclass
class RunConfig:
    k: int = 3
    u: int = 2
    kc: int = 1
    q: int | None = None
    l: int = 2
    scheme: str = "single"
    dropout: str = "none"
    seed: int = 0
    trials: int = 20
    workers: int = 1
    control: str | None = None
    debug_demand: bool = False
    demand: list | None = None
    inputs: list | None = None
    checks: list | None = None
    kc_range: str | None = None
    out: str | None = None

    def params(self) -> ProblemParams:
        q = default_modulus(self.k, self.u) if self.q is None else self.q
        p = ProblemParams(self.k, self.u, self.kc, q, self.l)
        p.check_scheme(self.scheme)
        return p


class ConfigError(SecAggError, ValueError):
    pass


def load_config(path: str | None, overrides: dict) -> RunConfig:
    """defaults < file < flags; ``overrides`` holds only flags that were given."""
    data = {}
    if path:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        data.pop("schema_version", None)
    known = {f.name for f in fields(RunConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    data.update({k: v for k, v in overrides.items() if v is not None})
    cfg = RunConfig(**data)
    if cfg.scheme not in SCHEMES:
        raise ConfigError(f"unknown scheme {cfg.scheme!r}")
    return cfg


def atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(obj: dict, out: str | None) -> None:
    text = json.dumps({"schema_version": SCHEMA_VERSION, **obj}, sort_keys=True, indent=2) + "\n"
    if out:
        atomic_write(out, text)
    sys.stdout.write(text)


def _error(exc: Exception, code: int = EXIT_CONFIG) -> int:
    payload = {"schema_version": SCHEMA_VERSION, "error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ProtocolFailure):
        payload["stage"] = exc.stage
    sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")
    return code


# --- subcommands -------------------------------------------------------------

def cmd_run(cfg: RunConfig) -> int:
    p = cfg.params()
    rng = random.Random(cfg.seed)
    if cfg.demand is not None:
        f = validate_demand(DemandMatrix.from_rows(cfg.demand, p.q), p)
    else:
        f = sample_demand(p, rng, nonzero=cfg.scheme == "single")
    w = cfg.inputs if cfg.inputs is not None else sample_inputs(p, rng)
    model = DropoutModel.parse(cfg.dropout)
    if model.mode == "exhaustive":
        raise ConfigError("'run' takes one schedule; use 'sweep' for exhaustive dropout")
    schedule = next(model.schedules(p.k, p.u, rng, cfg.scheme, p))
    try:
        transcript, report = run_protocol(cfg.scheme, p, f, w, schedule, rng, seed=cfg.seed,
                                          control=cfg.control, debug_demand=cfg.debug_demand)
    except ProtocolFailure as exc:
        if cfg.out and exc.transcript is not None:
            atomic_write(cfg.out, exc.transcript.to_json() + "\n")
        return _error(exc, EXIT_FAILED)
    if cfg.out:
        atomic_write(cfg.out, transcript.to_json() + "\n")
    _emit({"rates": report.to_dict(), "transcript": cfg.out}, None)
    return EXIT_OK


def _privacy_verdict(cfg: RunConfig, p: ProblemParams) -> Verdict:
    rng = random.Random(f"cli-privacy:{cfg.seed}")
    n = max(2, min(cfg.trials, 20))
    if cfg.scheme == "baseline":
        # every repetition is a single-combination run on one (remixed) row
        p1 = ProblemParams(p.k, p.u, 1, p.q, p.l)
        demands = []
        for _ in range(n):
            mixed = rewrite_demand_for_baseline(sample_demand(p, rng), rng).demand
            demands.extend(DemandMatrix.from_rows([r], p.q) for r in mixed.rows())
        return privacy_query_uniformity("single", p1, demands, control=cfg.control)
    demands = [sample_demand(p, rng, nonzero=cfg.scheme == "single") for _ in range(n)]
    return privacy_query_uniformity(cfg.scheme, p, demands, control=cfg.control, seed=cfg.seed)


def cmd_verify(cfg: RunConfig) -> int:
    p = cfg.params()
    checks = cfg.checks or list(CHECKS)
    bad = set(checks) - set(CHECKS)
    if bad:
        raise ConfigError(f"unknown checks {sorted(bad)}; choose from {list(CHECKS)}")
    verdicts = []
    for check in checks:
        try:
            if check == "decode":
                v = decode_check(cfg.scheme, p, cfg.trials, cfg.seed, cfg.workers)
            elif check == "security":
                v = security_realizations(cfg.scheme, p, cfg.trials, cfg.seed, control=cfg.control,
                                          density=0.0 if cfg.control else 0.5)
            elif check == "privacy":
                v = _privacy_verdict(cfg, p)
            else:
                r = mi_exhaustive(cfg.scheme, p, control=cfg.control)
                v = Verdict("mi", PASS if r.passed else FAIL, r.to_dict())
        except EnumerationTooLarge as exc:
            v = Verdict(check, SKIPPED, {"reason": str(exc)})
        log.info("%s: %s", check, v.status)
        verdicts.append(v.to_dict())
    ok = all(v["status"] == PASS for v in verdicts)
    _emit({"scheme": cfg.scheme, "params": p.to_dict(), "verdicts": verdicts, "ok": ok}, cfg.out)
    return EXIT_OK if ok else EXIT_FAILED


def parse_range(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            a, b = part.split("-", 1)
            out.extend(range(int(a), int(b) + 1))
        elif part:
            out.append(int(part))
    return out


def cmd_rates(cfg: RunConfig) -> int:
    kcs = parse_range(cfg.kc_range) if cfg.kc_range else list(range(1, cfg.u))
    points = rate_sweep(cfg.k, cfg.u, kcs, cfg.q, cfg.seed)
    text = rates_csv(points)
    if cfg.out:
        atomic_write(cfg.out, text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    p = cfg.params()
    rep = sweep(cfg.scheme, p, cfg.trials, cfg.seed, cfg.workers)
    _emit({"sweep": rep.to_dict()}, cfg.out)
    return EXIT_OK if rep.ok else EXIT_FAILED


COMMANDS = {"run": cmd_run, "verify": cmd_verify, "rates": cmd_rates, "sweep": cmd_sweep}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dpsecagg", description="Demand-private secure aggregation simulator")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", metavar="PATH")
        sp.add_argument("--scheme", choices=SCHEMES)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--trials", type=int)
        sp.add_argument("--workers", type=int)
        sp.add_argument("--out", metavar="PATH")
        sp.add_argument("--k", type=int)
        sp.add_argument("--u", type=int)
        sp.add_argument("--kc", type=int)
        sp.add_argument("--q", type=int)
        sp.add_argument("--l", type=int)
        sp.add_argument("--dropout", help="none | fixed:1,2;1,2 | random:0.3 | worst")
        sp.add_argument("--control", choices=["no-mask", "reuse-mask", "leak-demand"],
                        help="deliberately broken variant, for checking the verifiers")
        sp.add_argument("--debug-demand", action="store_true", default=None,
                        help="export the demand matrix in cleartext")
        if name == "verify":
            sp.add_argument("--checks", help=f"comma list from {','.join(CHECKS)}")
        if name == "rates":
            sp.add_argument("--kc-range", help="e.g. 1-3 or 1,2")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    overrides = {k: v for k, v in vars(args).items() if k not in ("command", "config", "verbose")}
    if isinstance(overrides.get("checks"), str):
        overrides["checks"] = [c.strip() for c in overrides["checks"].split(",") if c.strip()]
    try:
        cfg = load_config(args.config, overrides)
        return COMMANDS[args.command](cfg)
    except SecAggError as exc:
        return _error(exc)
    except (TypeError, ValueError) as exc:  # malformed config values or ranges
        return _error(ConfigError(str(exc)))


if __name__ == "__main__":
    sys.exit(main())
