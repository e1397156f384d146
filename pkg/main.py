"""
RIS association planner - run directly from CLI (main.py)

Subcommands:
- regions   constraints and vertices of all six rate regions (CSV)
- simulate  Monte Carlo run of the three-phase protocol (JSON)
- optimize  best scheme and eta for an objective (one line; CSV with --out)
- compare   one planner row per scheme (CSV)
- sweep     planner rows over a grid of one parameter (CSV)

Exit codes: 0 success, 2 invalid input, 3 end-to-end decode failure.
Defaults come from config/config.yaml (and config/.env); flags override them.
"""

import argparse
import json
import sys
from pathlib import Path
from typing import Annotated, Literal

# Run from the project root:
#   python main.py compare --delta-n 0.8 --delta-s 0.5 --delta-d 0.3
#
# Ensure 'core' is a package (core/__init__.py present).

try:
    from pydantic import BaseModel, ConfigDict, Field, ValidationError

    from core.channel import ChannelParams
    from core.config_loader import load_config, resolve_threads
    from core.errors import ParameterError
    from core.export import (
        planner_csv,
        regions_csv,
        simulation_json,
        sweep_csv,
    )
    from core.log import setup_logging
    from core.planner import Objective, best_schedule, compare_all, sweep
    from core.protocol import ProtocolConfig, monte_carlo, optimal_eta
    from core.regions import (
        both_to_user_region,
        dynamic_achievable_region,
        neutral_region,
        no_ris_region,
        outer_region,
        polygon,
    )
except ModuleNotFoundError as e:
    print("Import error:", e, file=sys.stderr)
    print("Run from the project root and install requirements.txt first.", file=sys.stderr)
    sys.exit(1)

COMMANDS = ("regions", "simulate", "optimize", "compare", "sweep")
EXIT_OK, EXIT_INVALID, EXIT_DECODE = 0, 2, 3

Probability = Annotated[float, Field(gt=0.0, lt=1.0)]
Eta = Annotated[float, Field(gt=0.0, lt=0.5)]


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    command: Literal["regions", "simulate", "optimize", "compare", "sweep"]
    delta_n: Probability
    delta_s: Probability
    delta_d: Probability
    eta: Eta | None = None
    eta1: Eta | None = None
    eta2: Eta | None = None
    n: int = Field(ge=2)
    m: int | None = Field(default=None, ge=1)
    trials: int = Field(ge=1)
    seed: int = Field(ge=0, lt=2**64)
    payload_len: int = Field(ge=1)
    generation_size: int = Field(ge=1)
    threads: int = Field(ge=0)
    out: Path | None = None
    format: Literal["csv", "json"] | None = None
    objective: str = "sum"
    scheme: Literal["dynamic", "noris", "neutral", "user1", "user2"] = "dynamic"
    param: Literal["delta_n", "delta_s", "delta_d", "eta"] = "eta"
    from_: float = Field(alias="from")
    to: float
    steps: int = Field(ge=2)
    digits: int = Field(default=9, ge=1, le=17)

    @property
    def params(self) -> ChannelParams:
        return ChannelParams(delta_n=self.delta_n, delta_s=self.delta_s, delta_d=self.delta_d)

    @property
    def resolved_eta(self) -> float:
        return self.eta if self.eta is not None else optimal_eta(self.params)


# ---------------- Diagnostics ----------------

FLAG_NAMES = {"from_": "--from", "from": "--from", "command": "subcommand"}


def _flag(name: str) -> str:
    return FLAG_NAMES.get(name, "--" + str(name).replace("_", "-"))


def diagnose(exc: ValueError) -> str:
    """One line naming the offending flag."""
    if isinstance(exc, ValidationError):
        err = exc.errors()[0]
        original = (err.get("ctx") or {}).get("error")
        if isinstance(original, ParameterError):
            return f"{_flag(original.param)}: {original.message}"
        field = err["loc"][-1] if err["loc"] else "input"
        return f"{_flag(field)}: {err['msg']} (got {err.get('input')!r})"
    if isinstance(exc, ParameterError):
        return f"{_flag(exc.param)}: {exc.message}"
    return str(exc)


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        # One diagnostic line, exit code 2
        self.exit(EXIT_INVALID, f"error: {message}\n")


def build_parser(cfg: dict) -> argparse.ArgumentParser:
    ch, sim, sw = cfg["channel"], cfg["simulation"], cfg["sweep"]
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--delta-n", type=float, default=ch["delta_n"])
    common.add_argument("--delta-s", type=float, default=ch["delta_s"])
    common.add_argument("--delta-d", type=float, default=ch["delta_d"])
    common.add_argument("--eta", type=float, default=None, help="phase fraction (default: balanced eta*)")
    common.add_argument("--eta1", type=float, default=None, help="outer bound only")
    common.add_argument("--eta2", type=float, default=None, help="outer bound only")
    common.add_argument("--n", type=int, default=sim["n"])
    common.add_argument("--m", type=int, default=None)
    common.add_argument("--trials", type=int, default=sim["trials"])
    common.add_argument("--seed", type=int, default=sim["seed"])
    common.add_argument("--payload-len", type=int, default=sim["payload_len"])
    common.add_argument("--generation-size", type=int, default=sim["generation_size"])
    common.add_argument("--threads", type=int, default=sim["threads"], help="0 = available parallelism")
    common.add_argument("--scheme", default="dynamic", help="association for simulate")
    common.add_argument("--out", type=Path, default=None)
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--objective", default="sum", help="'sum' or 'weighted:w1,w2'")
    common.add_argument("--param", default=sw["param"])
    common.add_argument("--from", dest="from_", type=float, default=sw["from"])
    common.add_argument("--to", type=float, default=sw["to"])
    common.add_argument("--steps", type=int, default=sw["steps"])
    common.add_argument("--log-level", default=None)

    parser = _Parser(prog="main.py", description="Double-RIS erasure broadcast: regions, planner, simulator")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


# ---------------- Subcommands ----------------
# Each returns (text to write, exit code).

def cmd_regions(config: RunConfig) -> tuple[str, int]:
    params, eta = config.params, config.resolved_eta
    eta1 = config.eta1 if config.eta1 is not None else eta
    eta2 = config.eta2 if config.eta2 is not None else eta
    regions = [
        no_ris_region(params),
        neutral_region(params),
        both_to_user_region(params, 1),
        both_to_user_region(params, 2),
        outer_region(params, eta1, eta2),
        dynamic_achievable_region(params, eta),
    ]
    if config.format == "json":
        doc = [
            {"scheme": r.name, "constraints": [list(c) for c in r.constraints], "vertices": polygon(r)}
            for r in regions
        ]
        return json.dumps({"schema_version": 1, "regions": doc}, indent=2) + "\n", EXIT_OK
    return regions_csv(regions, config.digits), EXIT_OK


def _protocol_config(config: RunConfig) -> ProtocolConfig:
    return ProtocolConfig(
        params=config.params,
        n=config.n,
        eta=config.eta,
        m=config.m,
        payload_len=config.payload_len,
        seed=config.seed,
        generation_size=config.generation_size,
        scheme=config.scheme,
    )


def cmd_simulate(config: RunConfig, cfg: dict) -> tuple[str, int]:
    proto = _protocol_config(config)
    threads = config.threads if config.threads > 0 else resolve_threads(cfg)
    summary = monte_carlo(proto, config.trials, threads=threads)
    code = EXIT_DECODE if summary.decode_failures else EXIT_OK
    if config.format == "csv":
        lines = ["# schema_version=1", "trial,slots_phase1,slots_phase2,slots_phase3,total_slots,sum_rate,decode_ok"]
        for r in summary.results:
            lines.append(
                f"{r.trial},{r.slots_phase1},{r.slots_phase2},{r.slots_phase3},{r.total_slots},"
                f"{r.sum_rate:.9g},{str(r.decode_ok).lower()}"
            )
        return "\n".join(lines) + "\n", code
    return simulation_json(summary), code


def cmd_optimize(config: RunConfig) -> tuple[str, str, int]:
    """Returns (summary line, planner CSV, exit code)."""
    params = config.params
    objective = Objective.parse(config.objective)
    best = best_schedule(params, objective)
    eta = f"{best.eta:.6f}" if best.eta is not None else "none"
    key = "sum_rate" if objective.name == "sum" else "weighted_value"
    line = f"{best.scheme} eta={eta} {key}={best.value:.6f}\n"
    return line, planner_csv(compare_all(params), config.digits), EXIT_OK


def cmd_compare(config: RunConfig) -> tuple[str, int]:
    rows = compare_all(config.params, config.eta)
    return planner_csv(rows, config.digits), EXIT_OK


def cmd_sweep(config: RunConfig) -> tuple[str, int]:
    points = sweep(config.params, config.param, config.from_, config.to, config.steps, eta=config.eta)
    return sweep_csv(points, config.param, config.digits), EXIT_OK


# ---------------- Runner ----------------

def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


def main(argv: list[str] | None = None) -> int:
    cfg = load_config()
    args = build_parser(cfg).parse_args(argv)
    setup_logging(cfg, level=args.log_level)

    values = vars(args)
    values.pop("log_level", None)
    values["digits"] = cfg["output"]["digits"]
    values["from"] = values.pop("from_")
    try:
        config = RunConfig(**values)
        Objective.parse(config.objective)

        if config.command == "regions":
            text, code = cmd_regions(config)
        elif config.command == "simulate":
            text, code = cmd_simulate(config, cfg)
        elif config.command == "optimize":
            line, text, code = cmd_optimize(config)
            sys.stdout.write(line)
            if config.out is None:
                return code
        elif config.command == "compare":
            text, code = cmd_compare(config)
        else:
            text, code = cmd_sweep(config)
    except ValueError as exc:
        print(f"error: {diagnose(exc)}", file=sys.stderr)
        return EXIT_INVALID

    _emit(text, config.out)
    if code == EXIT_DECODE:
        print("error: end-to-end decode failed in at least one trial", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
