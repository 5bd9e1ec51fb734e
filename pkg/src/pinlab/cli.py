"""Command-line front end: ``pinlab <subcommand>`` or ``pinlab --config exp.yaml``.

Exit codes: 0 success, 1 other runtime failure, 2 config or usage error,
3 unmet precondition, 4 a bound failed while its hypotheses hold.
"""

from __future__ import annotations

import argparse
import functools
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import (
    BoundCheck,
    a_mb_sweep,
    b_nb,
    compute_constants,
    conv_power_bound,
    theta_plus,
    xi,
    zeta_three_halves_enclosure,
)
from .config import COMMANDS, ExperimentConfig, load_config
from .environment import ChargeLaw, read_env, sample_environment, write_env
from .errors import (
    BoundViolationError,
    ConfigError,
    EmptyRenormalizationError,
    InvalidArgumentError,
    PinlabError,
    PreconditionError,
    TruncationOverflowError,
)
from .flow import iterate
from .partition import charge_partition, free_energy_estimate
from .renewal import asymptotic_cal_c, srw_first_return_law
from .renorm import apply_T, renorm_constants, renormalize, smallest_admissible_level, verify_zbound
from .report import emit_report
from .scan import scan_critical, two_atom_law

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG, EXIT_PRECONDITION, EXIT_VIOLATION = 0, 1, 2, 3, 4


@functools.lru_cache(maxsize=1)
def default_cal_c() -> float:
    return asymptotic_cal_c(srw_first_return_law())


def _law(opts: dict) -> ChargeLaw:
    beta = opts["beta"]
    if opts.get("p") is not None:
        return two_atom_law(beta, opts["p"])
    c = 0.55 if opts.get("c") is None else opts["c"]
    return two_atom_law(beta, math.exp(-c * beta))


def _c(opts: dict, key: str = "C") -> float:
    v = opts.get(key)
    return default_cal_c() if v is None else v


# --- subcommand handlers: (opts, seed, out, threads) -> {artifact: path} ---


def cmd_gen_env(opts, seed, out, threads):
    env = sample_environment(_law(opts), opts["n_charges"], seed)
    path = out / opts["file"]
    write_env(env, path)
    print(f"wrote {env.n} charges (span {env.span}) to {path}")
    return {"env": path}


def cmd_partition(opts, seed, out, threads):
    if opts.get("env"):
        env, source = read_env(opts["env"]), str(opts["env"])
    else:
        env, source = sample_environment(_law(opts), opts["n_charges"], seed), "sampled"
    n = env.n if opts.get("n") is None else opts["n"]
    c = _c(opts)
    z = charge_partition(env, n, c)
    rec = {"n": n, "C": c, "log_Z": z.logval, "t_n": int(env.t[n]), "env": source, "seed": seed}
    path = emit_report(rec, out / "partition.json")
    print(f"log Z_{n} = {z.logval:.12g}")
    return {"partition": path}


def cmd_free_energy(opts, seed, out, threads):
    est = free_energy_estimate(_law(opts), _c(opts), opts["n_charges"], opts["replicas"], seed, threads)
    path = emit_report(est.to_record(), out / "free_energy.json")
    print(f"F = {est.value:.6g} +- {est.stderr:.2g}")
    return {"free_energy": path}


def cmd_renormalize(opts, seed, out, threads):
    env = read_env(opts["env"])
    b = opts.get("b") or env.level
    if b is None:
        raise InvalidArgumentError("environment file has no level; pass --b")
    pc = compute_constants()
    cal_c = _c(opts, "cal_c")
    params = renorm_constants(b, cal_c, pc.k0, pc.big_b, c=opts.get("C"), k_b=opts.get("k_b"), l_b=opts.get("l_b"))
    res = renormalize(env, params)
    new_env = res.env
    if opts.get("drop_incomplete"):
        new_env, _ = apply_T(env, params, drop_incomplete=True)
    env_path = out / "env_renorm.txt"
    write_env(new_env, env_path)
    side = res.side_record()
    side.update(n_in=env.n, n_out=new_env.n, flags=params.flags(), admissible=params.admissible)
    side_path = emit_report(side, out / "renorm.json")
    print(f"level {b} -> {b + 1}: {env.n} charges -> {new_env.n}")
    return {"env": env_path, "side_record": side_path}


def cmd_iterate_measure(opts, seed, out, threads):
    beta = opts["beta"]
    mu = two_atom_law(beta, math.exp(-opts["c"] * beta))
    b_max = beta + 3 if opts.get("b_max") is None else opts["b_max"]
    state = iterate(
        mu, _c(opts, "cal_c"), b_max, x_max=opts.get("x_max"), tol=opts["tol"],
        k_override=None if opts["level_constants"] else opts["k"],
        l_override=None if opts["level_constants"] else opts["l"],
        max_lost=opts.get("max_lost"),
    )
    path = out / "history.csv"
    state.to_csv(path)
    steps = emit_report([vars(s) for s in state.steps], out / "steps.csv")
    print(f"{state.mode} mode: levels {beta}..{state.level}, final mu(0) = {state.law.mass0:.17g}")
    return {"history": path, "steps": steps}


def _zbound_records(n_envs: int, seed: int) -> list[BoundCheck]:
    pc = compute_constants()
    params = smallest_admissible_level(default_cal_c(), pc.k0, pc.big_b)
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n_envs):
        # densities with c L_b between 0.2 and 5 give both kinds of blocks
        c = float(np.exp(rng.uniform(math.log(0.2), math.log(5.0)))) / params.l_b
        law = ChargeLaw.from_atoms(params.b, [0.6 * c, 0.3 * c, 0.1 * c])
        env = sample_environment(law, 200, rng)
        try:
            n_new = renormalize(env, params).env.n
        except EmptyRenormalizationError:
            continue
        chk = verify_zbound(env, params, n_new)
        out.append(
            BoundCheck(
                "zbound", {"b": params.b, "k_b": params.k_b, "l_b": params.l_b, "env": i, "N": n_new},
                chk.lhs.logval, chk.rhs.logval, chk.holds, True, {"bookkeeping_ok": chk.bookkeeping_ok},
            )
        )
    return out


def bound_suite(suite: str, seed: int) -> list[BoundCheck]:
    """The lemma checks run by ``verify-bounds``."""
    full = suite == "full"
    pc = compute_constants()
    cal_c = default_cal_c()
    checks = []
    lo, hi = zeta_three_halves_enclosure(pc.tail_terms)
    checks.append(
        BoundCheck("constants", {"tail_terms": pc.tail_terms}, pc.a, pc.a_hi, pc.a_lo <= pc.a <= pc.a_hi,
                   extra={"a_lo": pc.a_lo, "zeta_lo": lo, "zeta_hi": hi, "gamma0": pc.gamma0, "k0": pc.k0, "B": pc.big_b})
    )
    n_theta = 20_000 if full else 2_000
    for c in (cal_c, 2.0 * cal_c):
        k = pc.k0 + math.log(c)
        for dk in (0.0, 1.0, 3.0):
            checks.append(theta_plus(n_theta, c, k + dk, pc))
    checks.append(conv_power_bound(50 if full else 20, 20_000 if full else 2_000, pc))
    rng = np.random.default_rng(seed)
    for b in (1, 2, 5):
        k = math.ceil(pc.k0 + math.log(2.0 * cal_c))
        thr = math.floor(math.exp(2.0 * (b + k) / 3.0))
        for _ in range(5 if full else 2):
            gaps = thr + 1 + rng.integers(0, 3 * thr, size=int(rng.integers(1, 30)))
            pts = np.concatenate(([0], np.cumsum(gaps)))
            checks.append(xi(b, 2.0 * cal_c, k, pts, pc))
    z_hi = 50_000 if full else 5_000
    for m in (2, 3, 4):
        checks.append(a_mb_sweep(m, 100, m * 100, z_hi))
    for b in ((2_500, 10_000) if full else (2_500,)):
        for x in (2 * b + 10, 3 * b):
            checks.append(b_nb(1, b, x, cal_c=cal_c, constants=pc))
    checks.extend(_zbound_records(100 if full else 10, seed))
    return checks


def is_violation(chk: BoundCheck) -> bool:
    return not chk.holds and chk.extra.get("sufficient_condition_holds", True)


def cmd_verify_bounds(opts, seed, out, threads):
    checks = bound_suite(opts["suite"], seed)
    path = emit_report([c.to_record() for c in checks], out / "bounds.json")
    bad = [c for c in checks if is_violation(c)]
    print(f"{len(checks)} checks, {sum(c.holds for c in checks)} hold, {len(bad)} violations")
    if bad:
        raise BoundViolationError(f"{len(bad)} bound(s) violated; first: {bad[0].lemma} {bad[0].params}")
    return {"bounds": path}


def cmd_scan_critical(opts, seed, out, threads):
    res = scan_critical(
        opts["betas"], opts["n_charges"], opts["replicas"], seed, _c(opts),
        epsilon=opts["epsilon"], max_depth=opts["max_depth"], threads=threads,
    )
    csv_path = emit_report([r.row() for r in res], out / "scan.csv")
    json_path = emit_report([r.to_record() for r in res], out / "scan.json")
    for r in res:
        print(f"beta={r.beta}: p_c ~ {r.p_c_est:.4g}, slope {r.slope:.4f} +- {r.slope_tolerance:.3f}")
    return {"scan": csv_path, "probes": json_path}


HANDLERS = {
    "gen-env": cmd_gen_env,
    "partition": cmd_partition,
    "free-energy": cmd_free_energy,
    "renormalize": cmd_renormalize,
    "iterate-measure": cmd_iterate_measure,
    "verify-bounds": cmd_verify_bounds,
    "scan-critical": cmd_scan_critical,
}


def defaults(command: str) -> dict:
    return {o.dest: (list(o.default) if o.multiple else o.default) for o in COMMANDS[command][1]}


def run(command: str, params: dict, seed: int = 0, out=".", threads: int = 1) -> dict:
    """Run one pipeline with ``params`` layered over the option defaults."""
    opts = defaults(command)
    opts.update(params)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    return HANDLERS[command](opts, seed, out, threads)


def run_config(path, seed=None, out=None, threads=None) -> dict:
    """Run the experiment described by a config file; flags given here win."""
    cfg: ExperimentConfig = load_config(path)
    return run(
        cfg.experiment, cfg.params,
        cfg.seed if seed is None else seed,
        cfg.output if out is None else out,
        cfg.threads if threads is None else threads,
    )


def _u64(s: str) -> int:
    v = int(s, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _positive(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _bool(s: str) -> bool:
    if s.lower() in ("1", "true", "yes"):
        return True
    if s.lower() in ("0", "false", "no"):
        return False
    raise argparse.ArgumentTypeError("expected true or false")


def _globals(parser, suppress: bool) -> None:
    kw = {"default": argparse.SUPPRESS} if suppress else {"default": None}
    parser.add_argument("--config", metavar="PATH", help="YAML experiment file", **kw)
    parser.add_argument("--seed", type=_u64, help="root seed (default 0)", **kw)
    parser.add_argument("--out", metavar="DIR", help="output directory (default .)", **kw)
    parser.add_argument("--threads", type=_positive, help="worker threads; results do not depend on it", **kw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pinlab", description="Diluted disordered pinning toolkit.")
    parser.add_argument("--version", action="version", version=f"pinlab {__version__}")
    _globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    for name, (help_text, options) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_text, description=help_text)
        _globals(sp, suppress=True)
        for o in options:
            flag = "--" + o.name
            kw = {"dest": o.dest, "help": o.help, "default": argparse.SUPPRESS}
            if o.type is bool:
                kw.update(type=_bool, nargs="?", const=True, metavar="BOOL")
            else:
                kw["type"] = o.type
            if o.multiple:
                kw["nargs"] = "+"
            if o.choices:
                kw["choices"] = o.choices
            sp.add_argument(flag, **kw)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    ns = vars(parser.parse_args(argv))
    command = ns.pop("command", None)
    config, seed, out, threads = (ns.pop(k, None) for k in ("config", "seed", "out", "threads"))
    try:
        if config is not None:
            if command is not None:
                cfg_cmd = load_config(config).experiment
                if cfg_cmd != command:
                    raise ConfigError(f"config runs {cfg_cmd!r} but the command line asks for {command!r}")
                if ns:
                    raise ConfigError("give subcommand options either in the config or on the command line")
            run_config(config, seed, out, threads)
        elif command is None:
            parser.print_help(sys.stderr)
            return EXIT_CONFIG
        else:
            missing = [o.name for o in COMMANDS[command][1] if o.required and o.dest not in ns]
            if missing:
                parser.error(f"{command} needs --{', --'.join(missing)}")
            run(command, ns, 0 if seed is None else seed, "." if out is None else out, 1 if threads is None else threads)
    except ConfigError as e:
        print(f"pinlab: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except InvalidArgumentError as e:
        print(f"pinlab: invalid argument: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (PreconditionError, TruncationOverflowError) as e:
        print(f"pinlab: precondition failed: {e}", file=sys.stderr)
        return EXIT_PRECONDITION
    except BoundViolationError as e:
        print(f"pinlab: {e}", file=sys.stderr)
        return EXIT_VIOLATION
    except PinlabError as e:
        print(f"pinlab: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as e:
        print(f"pinlab: I/O error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
