"""Command-line harness: rate, certify, simulate, indexcoding, properties.

Every command writes machine-readable records (JSON or CSV) and exits
nonzero when a certification or simulation check fails.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, fields
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from . import blockcodes as bc
from .caching import (
    IDEALIZED,
    CachingConfig,
    ConfigError,
    FileLibrary,
    IntegrityError,
    deliver,
    distinct_demands,
    kappa_units,
    place,
    zero_error_rate,
)
from .ecc import (
    ADVERSARIAL,
    RANDOM,
    ChannelSpec,
    adversarial_failures,
    build_scheme,
    correct_and_decode,
    transmit,
    worst_case_rate,
)
from .indexcoding import (
    InstanceError,
    alpha_brute,
    expand_units,
    format_member,
    kappa_brute,
    load_instance,
    sandwich_check,
)
from .properties import run_all

log = logging.getLogger("codedcaching")

CERTIFY_MAX_DEMANDS = 10_000


@dataclass
class ResultRecord:
    scenario: str
    N: int
    K: int
    p: str
    F: int
    delta: int
    demand: str = ""
    kappa_units: int | None = None
    b_bits: int | None = None
    delivery_bits: int | None = None
    formula_bits: str | None = None
    code: str | None = None
    rate: str | None = None
    rate_decimal: float | None = None
    rate_exact: bool | None = None
    empirical_rate: str | None = None
    certified: bool = False
    trials: int = 0
    failures: int = 0
    wall_time: float | None = None
    witness: str | None = None

    def __post_init__(self):
        self.refresh()

    def refresh(self) -> None:
        self.certified = (
            self.b_bits is not None
            and self.delivery_bits is not None
            and self.formula_bits is not None
            and self.b_bits == self.delivery_bits == Fraction(self.formula_bits)
        )

    @classmethod
    def from_dict(cls, data: dict) -> "ResultRecord":
        kwargs = {}
        for f in fields(cls):
            v = data.get(f.name)
            if v in ("", None) and f.type != "str":
                kwargs[f.name] = None if f.default is None else f.default
                continue
            kwargs[f.name] = _coerce(f.type, v)
        rec = cls(**kwargs)
        if "certified" in data and _coerce("bool", data["certified"]) != rec.certified:
            raise ValueError("certified flag disagrees with the recorded bit counts")
        return rec


def _coerce(type_name: str, value):
    base = type_name.replace(" | None", "")
    if base == "int":
        return int(value)
    if base == "float":
        return float(value)
    if base == "bool":
        if isinstance(value, str):
            return value.lower() == "true"
        return bool(value)
    return "" if value is None else str(value)


def _fmt_demand(d: Sequence[int]) -> str:
    return "(" + ",".join(str(x + 1) for x in d) + ")"


def _code_str(code: bc.LinearCode) -> str:
    d = "?" if code.d is None else code.d
    return f"[{code.n},{code.k},{d}]"


def trial_seed(master: int, t: int) -> int:
    return int(np.random.SeedSequence([master, t]).generate_state(1)[0])


def parse_fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad fraction {text!r}") from exc


def parse_demand_list(text: str) -> tuple[int, ...]:
    """``"1,2,3"`` (1-based, as printed) to a 0-based tuple."""
    return tuple(int(x) - 1 for x in text.replace("(", "").replace(")", "").split(","))


def make_config(args) -> CachingConfig:
    p = parse_fraction(args.p)
    F = args.F if args.F is not None else (p.denominator**args.K if args.mode == IDEALIZED else 100_000)
    return CachingConfig(args.N, args.K, p, F, args.mode, args.seed)


def demand_vectors(args, config: CachingConfig, limit: int | None = None) -> list[tuple[int, ...]]:
    spec = args.demand
    if spec == "worst-all":
        out = []
        for d in distinct_demands(config.N, config.K):
            out.append(d)
            if limit is not None and len(out) > limit:
                break
        if limit is not None and len(out) > limit:
            rng = np.random.default_rng(args.seed)
            perm = list(distinct_demands(config.N, config.K))
            picks = rng.choice(len(perm), size=limit, replace=False)
            return sorted(perm[i] for i in picks)
        return out
    if spec.startswith("random:"):
        count = int(spec.split(":", 1)[1])
        rng = np.random.default_rng(args.seed)
        return [tuple(int(x) for x in rng.permutation(config.N)[: config.K]) for _ in range(count)]
    d = parse_demand_list(spec)
    if len(d) != config.K:
        raise ConfigError(f"demand {spec} has {len(d)} entries, expected K={config.K}")
    return [d]


def _deltas(args) -> list[int]:
    return [int(x) for x in str(args.delta).split(",")]


def cmd_rate(args) -> tuple[list[ResultRecord], bool]:
    config = make_config(args)
    records = []
    for delta in _deltas(args):
        rec = ResultRecord("rate", config.N, config.K, str(config.p), config.F, delta, _fmt_demand(range(config.K)))
        rec.kappa_units = kappa_units(config)
        rate, exact = worst_case_rate(config, delta)
        rec.rate, rec.rate_decimal, rec.rate_exact = str(rate), float(rate), exact
        if config.p > 0:
            rec.formula_bits = str(zero_error_rate(config) * config.F)
        else:
            rec.formula_bits = str(config.K * config.F)
        rec.code = f"[{bc.best_known_length(rec.kappa_units, 2 * delta + 1)[0]},{rec.kappa_units},{2 * delta + 1}]"
        if config.mode == IDEALIZED:
            part = place(config, FileLibrary.random(config.N, config.F, args.seed))
            report = sandwich_check(part, tuple(range(config.K)))
            rec.b_bits, rec.delivery_bits = report.b_bits, report.delivery_bits
        rec.refresh()
        records.append(rec)
    return records, True


def cmd_certify(args) -> tuple[list[ResultRecord], bool]:
    config = make_config(args)
    if config.mode != IDEALIZED:
        raise ConfigError("certification runs on idealized placement")
    part = place(config, FileLibrary.random(config.N, config.F, args.seed))
    records = []
    for d in demand_vectors(args, config, limit=CERTIFY_MAX_DEMANDS):
        t0 = time.perf_counter()
        if len(set(d)) != len(d):
            raise ConfigError(f"certification needs distinct demands, got {_fmt_demand(d)}")
        report = sandwich_check(part, d)
        rec = ResultRecord(
            "certify", config.N, config.K, str(config.p), config.F, 0, _fmt_demand(d),
            kappa_units=report.kappa_units,
            b_bits=report.b_bits,
            delivery_bits=report.delivery_bits,
            formula_bits=str(report.formula_bits),
            rate=str(Fraction(report.delivery_bits, config.F)),
            rate_decimal=report.delivery_bits / config.F,
            rate_exact=True,
            witness=" ".join(format_member(m) for m in report.certificate.members),
        )
        if args.timing:
            rec.wall_time = time.perf_counter() - t0
        if not rec.certified:
            log.error("certification failed for demand %s: |B|=%s delivered=%s formula=%s",
                      rec.demand, rec.b_bits, rec.delivery_bits, rec.formula_bits)
        records.append(rec)
    good = sum(r.certified for r in records)
    print(f"certified {good}/{len(records)} demands", file=sys.stderr)
    return records, good == len(records)


def cmd_simulate(args) -> tuple[list[ResultRecord], bool]:
    base = make_config(args)
    deltas = _deltas(args)
    records = []
    for delta in deltas:
        t0 = time.perf_counter()
        trials = args.trials
        demands = demand_vectors(args, base) if args.demand != "random" else None
        delivered = coded = failures = 0
        last_code = None
        for t in range(trials):
            seed = trial_seed(args.seed, t)
            config = CachingConfig(base.N, base.K, base.p, base.F, base.mode, seed)
            lib = FileLibrary.random(config.N, config.F, seed)
            part = place(config, lib)
            rng = np.random.default_rng(seed)
            if demands is None:
                d = tuple(int(x) for x in rng.permutation(config.N)[: config.K])
            else:
                d = demands[t % len(demands)]
            scheme, encoded = build_scheme(part, d, delta)
            last_code = scheme.code
            delivered += deliver(part, d).total_bits
            coded += scheme.n * scheme.unit
            if args.channel == ADVERSARIAL:
                targets = [lib[i] for i in d]
                _, bad = adversarial_failures(scheme, encoded, part, d, targets)
                for pos in bad:
                    log.error("decode mismatch: trial %d seed %d positions %s", t, seed, [p + 1 for p in pos])
                failures += len(bad)
                continue
            rx = transmit(encoded, ChannelSpec(delta, RANDOM, seed), rng)
            for k in range(config.K):
                try:
                    got = correct_and_decode(rx, scheme, part, d, k)
                    ok = np.array_equal(got, lib[d[k]])
                except (bc.UncorrectableError, IntegrityError):
                    ok = False
                if not ok:
                    failures += 1
                    log.error("decode mismatch: trial %d seed %d user %d", t, seed, k + 1)
        rec = ResultRecord(
            "simulate", base.N, base.K, str(base.p), base.F, delta,
            args.demand,
            kappa_units=scheme.kappa_units if trials else None,
            code=_code_str(last_code) if last_code is not None else None,
            trials=trials,
            failures=failures,
        )
        if trials:
            rate = Fraction(coded, trials * base.F)
            rec.rate, rec.rate_decimal = str(rate), float(rate)
            rec.empirical_rate = str(Fraction(delivered, trials * base.F))
            rec.rate_exact = scheme.exact
        if args.timing:
            rec.wall_time = time.perf_counter() - t0
        records.append(rec)
    return records, all(r.failures == 0 for r in records)


def cmd_indexcoding(args) -> tuple[dict, bool]:
    inst = load_instance(args.instance)
    alpha, cert = alpha_brute(inst)
    unit_inst = inst if inst.unit_weights else expand_units(inst)
    kappa = kappa_brute(unit_inst)
    out = {"n": inst.n, "receivers": len(inst.receivers), "alpha": alpha,
           "alpha_witness": [i + 1 for i in sorted(cert.H)], "kappa": kappa}
    for delta in _deltas(args):
        d = 2 * delta + 1
        lo, lo_exact = bc.best_known_length(alpha, d)
        hi, hi_exact = bc.best_known_length(kappa, d)
        out.setdefault("bounds", []).append(
            {"delta": delta, "alpha_bound": lo, "alpha_bound_exact": lo_exact,
             "kappa_bound": hi, "kappa_bound_exact": hi_exact}
        )
    return out, alpha <= kappa


def cmd_properties(args) -> tuple[dict, bool]:
    results = run_all(seed=args.seed, count=args.count)
    for r in results:
        print(r.line(), file=sys.stderr)
    out = [{"name": r.name, "cases": r.cases, "passed": r.passed, "failures": r.failures[:5]} for r in results]
    return {"properties": out}, all(r.passed for r in results)


def render(records, fmt: str) -> str:
    if isinstance(records, dict):
        return json.dumps(records, indent=2, sort_keys=True) + "\n"
    records = sorted(records, key=lambda r: (r.scenario, r.delta, r.demand))
    rows = [asdict(r) for r in records]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=[f.name for f in fields(ResultRecord)], lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: "" if v is None else v for k, v in row.items()})
        return buf.getvalue()
    payload = rows[0] if len(rows) == 1 else rows
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def parse_records(text: str, fmt: str) -> list[ResultRecord]:
    if fmt == "csv":
        return [ResultRecord.from_dict(row) for row in csv.DictReader(io.StringIO(text))]
    data = json.loads(text)
    if isinstance(data, dict):
        data = [data]
    return [ResultRecord.from_dict(row) for row in data]


DEFAULTS = {
    "N": 2, "K": 2, "p": "1/2", "F": None, "delta": "0", "mode": IDEALIZED,
    "demand": "worst-all", "seed": 0, "trials": 10, "format": "json", "out": None,
    "channel": RANDOM, "count": 200, "timing": False,
}


def _apply_config_file(args) -> None:
    """Values in the ``[experiment]`` section override command-line flags."""
    parser = configparser.ConfigParser()
    if not parser.read(args.config):
        raise ConfigError(f"cannot read config file {args.config}")
    if not parser.has_section("experiment"):
        raise ConfigError("config file needs an [experiment] section")
    section = parser["experiment"]
    for key, value in section.items():
        name = {"n": "N", "k": "K", "f": "F"}.get(key, key)
        if name not in DEFAULTS and name != "scenario":
            raise ConfigError(f"unknown config key {key!r}")
        if name in ("N", "K", "F", "seed", "trials", "count"):
            value = int(value)
        elif name == "timing":
            value = section.getboolean(key)
        setattr(args, name, value)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="codedcaching", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--N", type=int, default=DEFAULTS["N"], help="number of files")
        p.add_argument("--K", type=int, default=DEFAULTS["K"], help="number of users")
        p.add_argument("--p", default=DEFAULTS["p"], help="cache fraction M/N as a/b")
        p.add_argument("--F", type=int, default=None, help="file size in bits (default b^K, or 1e5 for bernoulli)")
        p.add_argument("--delta", default=DEFAULTS["delta"], help="errors to correct; comma list allowed")
        p.add_argument("--mode", choices=["idealized", "bernoulli"], default=DEFAULTS["mode"])
        p.add_argument("--demand", default=DEFAULTS["demand"], help="worst-all, random, random:COUNT, or 1,2,3")
        p.add_argument("--seed", type=int, default=DEFAULTS["seed"], help="master seed")
        p.add_argument("--trials", type=int, default=DEFAULTS["trials"])
        p.add_argument("--channel", choices=[RANDOM, ADVERSARIAL], default=DEFAULTS["channel"])
        p.add_argument("--timing", action="store_true", help="record wall time (breaks byte-identical output)")
        p.add_argument("--format", choices=["json", "csv"], default=DEFAULTS["format"])
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--config", default=None, help="INI file with an [experiment] section")

    for name, helptext in [
        ("rate", "zero-error and worst-case rates"),
        ("certify", "check |B| = delivered bits = formula for distinct demands"),
        ("simulate", "end-to-end placement, coded delivery, channel and decoding"),
    ]:
        common(sub.add_parser(name, help=helptext))

    ic = sub.add_parser("indexcoding", help="alpha, kappa and ECIC length bounds of an instance file")
    ic.add_argument("instance")
    ic.add_argument("--delta", default="0")
    ic.add_argument("--format", choices=["json"], default="json")
    ic.add_argument("--out", default=None)
    ic.add_argument("--config", default=None)

    pr = sub.add_parser("properties", help="run the property suites")
    pr.add_argument("--seed", type=int, default=0)
    pr.add_argument("--count", type=int, default=DEFAULTS["count"], help="random instances for alpha <= kappa")
    pr.add_argument("--format", choices=["json"], default="json")
    pr.add_argument("--out", default=None)
    pr.add_argument("--config", default=None)
    return parser


COMMANDS = {
    "rate": cmd_rate,
    "certify": cmd_certify,
    "simulate": cmd_simulate,
    "indexcoding": cmd_indexcoding,
    "properties": cmd_properties,
}


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config:
            _apply_config_file(args)
        records, ok = COMMANDS[args.command](args)
    except (ConfigError, InstanceError, bc.CodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    text = render(records, args.format)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if not ok:
        print("FAILED", file=sys.stderr)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
