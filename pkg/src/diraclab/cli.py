"""Command-line thin client for the campaign service.

Each subcommand maps to one verification campaign. Flags override config-file
keys; the merged flat settings are posted to the service, which runs the
campaign and writes the report bundle. By default the service runs in
process; --server posts to a remote instance instead. Exit codes: 0 all
checks passed, 1 a check failed, 2 configuration error.
"""

from __future__ import annotations

import argparse
import asyncio
import sys
from typing import Dict, List, Optional

import httpx

from .config import ConfigError, Scalar, ZERO_MODE_ACTIONS, parse_config_text
from .service.app import create_app

_COMMON_FLAGS = (
    ("--config", str, "flat key = value config file"),
    ("--out", str, "output directory for reports"),
    ("--seed", int, "random seed"),
    ("--threads", int, "worker pool size"),
    ("--grid-n", int, "grid points per axis (even, >= 8)"),
    ("--grid-l", float, "grid half width"),
    ("--server", str, "base URL of a running service (default: in process)"),
)


def _add_common(parser: argparse.ArgumentParser) -> None:
    for flag, typ, help_text in _COMMON_FLAGS:
        parser.add_argument(flag, type=typ, default=None, help=help_text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diraclab",
        description="Verification campaigns for the Dirac-operator laboratory",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)

    algebra = sub.add_parser("algebra-verify", help="matrix identity sweeps")
    algebra.add_argument("--sweep-points", type=int, default=None,
                         help="random sample count per sweep")
    _add_common(algebra)

    inversion = sub.add_parser(
        "inversion-verify", help="transform identity, change of variables, weak equation"
    )
    inversion.add_argument("--r-outer", type=float, default=None,
                           help="outer radius of the exterior annulus")
    _add_common(inversion)

    norms = sub.add_parser("norms", help="functional norms of the bundled sample field")
    norms.add_argument("--p", type=float, default=None, help="Lebesgue exponent")
    norms.add_argument("--q", type=float, default=None, help="weak-norm exponent")
    norms.add_argument("--alpha", type=float, default=None,
                       help="negative smoothness of the heat norm")
    _add_common(norms)

    ineq = sub.add_parser("inequality-check", help="seeded trial batch on one variant")
    ineq.add_argument("--variant", choices=("dsineq", "cor1", "cor2"), default=None)
    ineq.add_argument("--p", type=float, default=None)
    ineq.add_argument("--q", type=float, default=None)
    ineq.add_argument("--k", type=float, default=None)
    ineq.add_argument("--trials", type=int, default=None)
    _add_common(ineq)

    extremal = sub.add_parser("extremal-search", help="best-constant lower-bound search")
    extremal.add_argument("--variant", choices=("dsineq", "cor1", "cor2"), default=None)
    extremal.add_argument("--p", type=float, default=None)
    extremal.add_argument("--q", type=float, default=None)
    extremal.add_argument("--k", type=float, default=None)
    extremal.add_argument("--budget", type=int, default=None,
                          help="total ratio evaluations (>= 100)")
    _add_common(extremal)

    zero = sub.add_parser("zero-mode", help="explicit-mode diagnostics")
    zero.add_argument("action", choices=ZERO_MODE_ACTIONS)
    zero.add_argument("--k", type=float, default=None, help="weighted-tail exponent")
    zero.add_argument("--t", type=float, default=None, help="first tail parameter")
    zero.add_argument("--s", type=float, default=None, help="second tail parameter")
    zero.add_argument("--r-outer", type=float, default=None)
    zero.add_argument("--fit-r-min", type=float, default=None)
    zero.add_argument("--fit-r-max", type=float, default=None)
    zero.add_argument("--statistic", choices=("shell_mean", "shell_max"), default=None)
    _add_common(zero)

    scan = sub.add_parser("coupling-scan", help="smallest singular value along couplings")
    scan.add_argument("--t-min", type=float, default=None)
    scan.add_argument("--t-max", type=float, default=None)
    scan.add_argument("--t-step", type=float, default=None)
    scan.add_argument("--potential", choices=("loss_yau", "free"), default=None)
    _add_common(scan)

    return parser


_SETTING_KEYS = (
    "out",
    "seed",
    "threads",
    "grid_n",
    "grid_l",
    "sweep_points",
    "r_outer",
    "p",
    "q",
    "k",
    "t",
    "s",
    "alpha",
    "variant",
    "trials",
    "budget",
    "fit_r_min",
    "fit_r_max",
    "statistic",
    "t_min",
    "t_max",
    "t_step",
    "potential",
)


def gather_settings(args: argparse.Namespace) -> Dict[str, Scalar]:
    """Config-file keys overlaid with every flag the user actually set."""
    settings: Dict[str, Scalar] = {}
    if args.config is not None:
        with open(args.config, "r", encoding="utf-8") as fh:
            settings.update(parse_config_text(fh.read()))
    for key in _SETTING_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    return settings


def _call_service(server: Optional[str], command: str, payload: dict) -> dict:
    path = f"/run/{command}"
    if server is not None:
        with httpx.Client(base_url=server, timeout=None) as client:
            response = client.post(path, json=payload)
            response.raise_for_status()
            return response.json()

    async def _post() -> dict:
        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(
            transport=transport, base_url="http://diraclab.internal", timeout=None
        ) as client:
            response = await client.post(path, json=payload)
            response.raise_for_status()
            return response.json()

    return asyncio.run(_post())


def _print_response(body: dict) -> None:
    command = body.get("command", "")
    action = body.get("action") or ""
    label = f"{command} {action}".strip()
    code = body.get("exit_code", 2)
    if code == 2:
        print(f"{label}: CONFIG ERROR - {body.get('message', '')}")
        return
    verdict = "PASS" if body.get("passed") else "FAIL"
    checks = body.get("checks", [])
    print(f"{label}: {verdict} ({len(checks)} checks)")
    for check in checks:
        mark = "PASS" if check["passed"] else "FAIL"
        value = check.get("value")
        bound = check.get("bound")
        value_text = "n/a" if value is None else f"{value:.6g}"
        bound_text = "n/a" if bound is None else f"{bound:.6g}"
        print(
            f"  [{mark}] {check['name']}: value={value_text} "
            f"{check['comparison']} bound={bound_text}"
        )
    outputs = body.get("outputs", [])
    if outputs:
        print(f"reports in {body.get('out_dir')}: {', '.join(outputs)}")


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command == "serve":
        import uvicorn

        uvicorn.run(create_app(), host=args.host, port=args.port)
        return 0

    try:
        settings = gather_settings(args)
    except ConfigError as err:
        print(f"{args.command}: CONFIG ERROR - {err}")
        return 2
    except OSError as err:
        print(f"{args.command}: CONFIG ERROR - cannot read config file: {err}")
        return 2

    payload = {"action": getattr(args, "action", None), "settings": settings}
    body = _call_service(args.server, args.command, payload)
    _print_response(body)
    return int(body.get("exit_code", 2))


if __name__ == "__main__":
    sys.exit(main())
