"""Command-line interface: ``lfbgw {classify,iterate,simulate,limits,verify}``.

Exit codes: 0 success, 1 invalid input, 2 numeric precondition failure,
3 verification failure. Tables go to ``<out>/<command>.csv`` when ``--out``
is given, otherwise to standard output; diagnostics go to standard error.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import limits, spectral
from .errors import (
    DomainError,
    InvalidArgumentError,
    LFError,
    ModelParseError,
    PreconditionError,
    SeriesDivergenceError,
)
from .io import parse_model
from .model import ModelTriplet, scaled_generations
from .sim import (
    POPULATION_CAP,
    run_replicates,
    simulate_bgw,
    simulate_cmj,
    simulate_population,
    tree_to_contour,
)
from .verify import IDENTITY_TOL, verify_life_law, verify_triplet

EXIT_OK, EXIT_INPUT, EXIT_PRECONDITION, EXIT_VERIFY = 0, 1, 2, 3


@dataclass
class RunConfig:
    command: str
    model: str
    n: int = 10
    reps: int = 1000
    seed: int = 0
    out: str | None = None
    tol: float = IDENTITY_TOL
    cap: int = POPULATION_CAP
    fmt: str | None = None
    workers: int = 1
    engine: str = "particle"
    start: int | None = None
    dump_contours: bool = False

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise InvalidArgumentError("--seed must be an unsigned 64-bit integer")
        if self.reps < 1:
            raise InvalidArgumentError("--reps must be >= 1")
        if self.n < 1:
            raise InvalidArgumentError("--n must be >= 1")
        if not self.tol > 0:
            raise InvalidArgumentError("--tol must be positive")
        if self.cap < 1 or self.workers < 1:
            raise InvalidArgumentError("--cap and --workers must be >= 1")


def fmt_float(x: float) -> str:
    """17 significant digits, the CSV float format."""
    return format(float(x), ".17g")


def _short(x: float) -> str:
    return format(float(x), ".12g")


class Table:
    def __init__(self, header: list[str]):
        self.header = header
        self.rows: list[list[str]] = []

    def add(self, *values):
        self.rows.append([fmt_float(v) if isinstance(v, (float, np.floating)) else str(v) for v in values])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        w.writerows(self.rows)
        return buf.getvalue()


def _emit(cfg: RunConfig, name: str, table: Table, text: str | None, default_fmt: str, stdout) -> None:
    if cfg.out:
        os.makedirs(cfg.out, exist_ok=True)
        with open(os.path.join(cfg.out, f"{name}.csv"), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(table.to_csv())
    fmt = cfg.fmt or default_fmt
    if fmt == "csv":
        if not cfg.out:
            stdout.write(table.to_csv())
    elif text is not None:
        stdout.write(text)


def _triplet_required(model, command: str) -> ModelTriplet:
    if not isinstance(model, ModelTriplet):
        raise InvalidArgumentError(f"'{command}' needs a triplet model (types, m, g, H)")
    return model


_SHORT = {spectral.R_TRANSIENT: "R-transient", spectral.R_NULL: "R-null", spectral.R_POSITIVE: "R-positive"}


def cmd_classify(cfg: RunConfig, model, stdout) -> int:
    table = Table(["name", "value"])
    if isinstance(model, ModelTriplet):
        s = spectral.classify(model)
        crit, rec, R, beta, alpha = s.criticality, s.recurrence, s.R, s.beta, s.alpha
        lam, mu = s.lam, s.mu
    else:
        res, crit, rec = spectral.classify_life(model)
        s = None
        R, beta, alpha, lam, mu = res.R, res.beta, res.alpha, model.lam, model.mu
    for key, val in (("R", R), ("rho", 1.0 / R), ("alpha", alpha), ("beta", beta), ("lambda", lam), ("mu", mu)):
        table.add(key, float(val))
    table.add("criticality", crit)
    table.add("recurrence", rec)
    lines = [f"{crit}, {_SHORT[rec]}, R={_short(R)}, beta={_short(beta)}"]
    lines.append(f"alpha={_short(alpha)}, rho={_short(1.0 / R)}, lambda={_short(lam)}, mu={_short(mu)}")
    if s is not None and s.positive:
        for name, vec in (("u", s.u), ("v", s.v)):
            for i, x in enumerate(vec):
                table.add(f"{name}_{i + 1}", float(x))
            lines.append(f"{name}=" + " ".join(_short(x) for x in vec))
    _emit(cfg, "classify", table, "\n".join(lines) + "\n", "text", stdout)
    return EXIT_OK


def _growth_R(t: ModelTriplet) -> float:
    try:
        return spectral.classify(t).R
    except LFError:
        return 1.0


def cmd_iterate(cfg: RunConfig, model, stdout) -> int:
    t = _triplet_required(model, "iterate")
    a = t.dim
    table = Table(["n", "m_n"] + [f"g_{i + 1}" for i in range(a)] + [f"survival_{i + 1}" for i in range(a)])
    R = _growth_R(t)
    log_R = math.log(R)
    for sg in scaled_generations(t, R, cfg.n):
        mn = sg.scaled_mn * math.exp(-sg.n * log_R)
        if sg.n == 1:
            survival = t.H.sum(axis=1)
        else:
            survival = sg.survival
        table.add(sg.n, float(mn), *map(float, sg.gn), *map(float, survival))
    _emit(cfg, "iterate", table, None, "csv", stdout)
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, model, stdout) -> int:
    n = cfg.n
    if isinstance(model, ModelTriplet):
        t = model
        a = t.dim
        header = ["rep", "truncated", "total_n"] + [f"Z_n_{i + 1}" for i in range(a)]
        if cfg.engine == "population":

            def run(rng):
                r = simulate_population(t, n, rng, start=cfg.start, cap=cfg.cap)
                return r, None

        else:

            def run(rng):
                r = simulate_bgw(t, n, rng, start=cfg.start, cap=cfg.cap, record_tree=cfg.dump_contours)
                contour = tree_to_contour(r.tree) if cfg.dump_contours and r.tree is not None else None
                return r, contour

        results = run_replicates(run, cfg.seed, cfg.reps, cfg.workers)
        table = Table(header)
        contours = Table(["rep", "step", "level", "label"])
        alive = 0
        for k, (r, contour) in enumerate(results):
            last = r.path[n] if r.path.shape[0] > n else np.zeros(a, dtype=np.int64)
            alive += int(last.sum() > 0)
            table.add(k, int(r.truncated), int(last.sum()), *map(int, last))
            if contour is not None:
                for step, (lev, lab) in enumerate(contour.states()):
                    contours.add(k, step, lev, lab)
        if cfg.dump_contours and cfg.out:
            os.makedirs(cfg.out, exist_ok=True)
            with open(os.path.join(cfg.out, "contours.csv"), "w", encoding="utf-8", newline="\n") as fh:
                fh.write(contours.to_csv())
    else:
        life = model

        def run(rng):
            return simulate_cmj(life, life.m, n, rng, cap=cfg.cap)

        results = run_replicates(run, cfg.seed, cfg.reps, cfg.workers)
        table = Table(["rep", "truncated", "total_n", "individuals"])
        alive = 0
        for k, r in enumerate(results):
            alive += int(r.totals[n] > 0)
            table.add(k, int(r.truncated), int(r.totals[n]), r.individuals)
    p = alive / cfg.reps
    se = math.sqrt(p * (1 - p) / cfg.reps)
    print(f"survival frequency at n={n}: {p:.6g} (standard error {se:.3g})", file=sys.stderr)
    _emit(cfg, "simulate", table, None, "csv", stdout)
    return EXIT_OK


def cmd_limits(cfg: RunConfig, model, stdout) -> int:
    t = _triplet_required(model, "limits")
    s = spectral.classify(t)
    if not s.positive:
        raise DomainError(f"limit laws are only available for R-positive processes ({s.recurrence})")
    table = Table(["n", "survival_g", "asymptote_g"])
    lines = [f"{s.criticality}, {s.recurrence_short}, rho={_short(s.rho)}, beta={_short(s.beta)}"]
    if s.criticality == spectral.SUBCRITICAL:
        y = limits.yaglom_law(t, s)
        lines.append(f"yaglom m={_short(y.m)}")
        lines.append("yaglom h=" + " ".join(_short(x) for x in y.h))
        lines.append("yaglom g=" + " ".join(_short(x) for x in y.g))
    elif s.criticality == spectral.CRITICAL:
        lim = limits.critical_limit(s)
        lines.append(f"Z/n given survival -> exponential with mean c_w={_short(lim.c_w)} (w = 1)")
        lines.append("n * survival -> " + " ".join(_short(x) for x in lim.survival))
    else:
        lim = limits.supercritical_limit(s)
        lines.append(f"Z/rho^n given survival -> exponential with rate {_short(lim.rate)} (w = 1)")
        lines.append("survival -> " + " ".join(_short(x) for x in lim.survival))
    asym = limits.cmj_asymptotics(s)
    for sg in scaled_generations(t, s.R, cfg.n):
        exact = float(t.g @ sg.survival) if sg.n > 1 else float(t.g @ t.H.sum(axis=1))
        table.add(sg.n, exact, float(asym.survival(sg.n)))
    _emit(cfg, "limits", table, "\n".join(lines) + "\n", "text", stdout)
    return EXIT_OK


def cmd_verify(cfg: RunConfig, model, stdout) -> int:
    checks = verify_triplet(model, cfg.tol) if isinstance(model, ModelTriplet) else verify_life_law(model)
    table = Table(["check", "passed", "detail"])
    for c in checks:
        table.add(c.name, int(c.passed), c.detail)
    text = "".join(c.line() + "\n" for c in checks)
    _emit(cfg, "verify", table, text, "text", stdout)
    return EXIT_OK if all(c.passed for c in checks) else EXIT_VERIFY


COMMANDS = {
    "classify": cmd_classify,
    "iterate": cmd_iterate,
    "simulate": cmd_simulate,
    "limits": cmd_limits,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lfbgw", description="Linear-fractional branching process toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("classify", "criticality and recurrence class, R, alpha, beta, u, v"),
        ("iterate", "exact generation laws for n = 1..N"),
        ("simulate", "Monte-Carlo replicates"),
        ("limits", "limit-law parameters and survival asymptotes"),
        ("verify", "self-consistency checks for one model"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--model", required=True, help="model file")
        p.add_argument("--n", type=int, default=10, help="horizon / number of generations")
        p.add_argument("--reps", type=int, default=1000, help="number of replicates")
        p.add_argument("--seed", type=int, default=0, help="master seed (unsigned 64-bit)")
        p.add_argument("--out", default=None, help="directory for CSV output")
        p.add_argument("--tol", type=float, default=IDENTITY_TOL, help="identity tolerance for verify")
        p.add_argument("--cap", type=int, default=POPULATION_CAP, help="population cap per run")
        p.add_argument("--format", dest="fmt", choices=("csv", "text"), default=None)
        p.add_argument("--workers", type=int, default=1, help="threads for replicates")
        if name == "simulate":
            p.add_argument("--engine", choices=("particle", "population"), default="particle")
            p.add_argument("--start", type=int, default=None, help="1-based ancestor type (default: drawn from g)")
            p.add_argument("--dump-contours", action="store_true", help="write contours.csv (needs --out)")
    return parser


def main(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors; 2 is reserved for numeric failures here
        return EXIT_OK if exc.code in (0, None) else EXIT_INPUT
    try:
        cfg = RunConfig(
            command=args.command,
            model=args.model,
            n=args.n,
            reps=args.reps,
            seed=args.seed,
            out=args.out,
            tol=args.tol,
            cap=args.cap,
            fmt=args.fmt,
            workers=args.workers,
            engine=getattr(args, "engine", "particle"),
            start=None if getattr(args, "start", None) is None else args.start - 1,
            dump_contours=getattr(args, "dump_contours", False),
        )
        model = parse_model(cfg.model)
        return COMMANDS[cfg.command](cfg, model, stdout)
    except (ModelParseError, InvalidArgumentError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (PreconditionError, DomainError, SeriesDivergenceError, OverflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        diag = getattr(exc, "diagnostics", None)
        if diag:
            print(f"diagnostics: {diag}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
