"""Batch front door: a thin client over the service.

By default the service app is mounted in-process (no socket); point
``--server`` at a running instance to talk to a remote one.

Exit codes: 0 ok/match, 1 input error, 2 not regular, 3 unsupported
measure, 4 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import httpx


def _parse_annuli(text):
    try:
        lo, hi = text.split("..")
        return [int(lo), int(hi)]
    except Exception as exc:
        raise argparse.ArgumentTypeError(
            f"--annuli expects 'first..last', got {text!r}") from exc


def build_parser():
    ap = argparse.ArgumentParser(
        prog="spectrace",
        description="Eigenvalues, regularized traces and trace-formula "
                    "coefficients for high-order boundary value problems "
                    "with measure potentials.")
    ap.add_argument("--server", default=None,
                    help="base URL of a running service (default: in-process)")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="problem config (TOML)")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--annuli", type=_parse_annuli, default=None,
                       help="annulus range first..last")
        p.add_argument("--tolerance", type=float, default=None)
        p.add_argument("--oracle", default=None,
                       choices=["closed-form", "lemma51", "green",
                                "eigensum", "all"])
        p.add_argument("--seed-check", action="store_true",
                       help="run the invariant suite for this config instead")

    for name in ("analyze", "spectrum", "trace", "green"):
        common(sub.add_parser(name))

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8787)
    return ap


def _load_config_payload(args):
    from spectrace.config import ProblemConfig

    cfg = ProblemConfig.from_toml(args.config)
    payload = cfg.to_dict()
    run = payload["run"]
    if args.annuli is not None:
        run["annuli"] = args.annuli
    if args.tolerance is not None:
        run["tolerance"] = args.tolerance
    if args.oracle is not None:
        run["oracle"] = args.oracle
    if args.out is not None:
        run["out"] = args.out
    return payload


def _client(args):
    if args.server:
        return httpx.Client(base_url=args.server, timeout=None)
    # mount the service in-process: same request/response path, no socket
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from starlette.testclient import TestClient

    from spectrace.service import create_app

    return TestClient(create_app(), base_url="http://spectrace.internal")


def _write(outdir, name, text):
    path = Path(outdir) / name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def main(argv=None):
    args = build_parser().parse_args(argv)

    if args.command == "serve":
        import uvicorn

        from spectrace.service import create_app

        uvicorn.run(create_app(), host=args.host, port=args.port)
        return 0

    try:
        payload = _load_config_payload(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    outdir = payload["run"]["out"]
    endpoint = "/seed-check" if args.seed_check else f"/{args.command}"
    with _client(args) as client:
        resp = client.post(endpoint, json=payload)
    if resp.status_code == 422:
        print(f"error: invalid config: {resp.text}", file=sys.stderr)
        return 1
    resp.raise_for_status()
    body = resp.json()
    code = int(body.get("exit_code", 4))

    if args.seed_check:
        for c in body.get("checks", []):
            mark = "pass" if c["passed"] else "FAIL"
            detail = f"  ({c['detail']})" if c["detail"] else ""
            print(f"[{mark}] {c['name']}{detail}")
        return code

    if body.get("status") != "ok":
        print(f"{body.get('status')}: {body.get('detail', '')}",
              file=sys.stderr)

    if args.command == "analyze" and body.get("report") is not None:
        path = _write(outdir, "report.json",
                      json.dumps(body["report"], indent=2))
        rep = body["report"]
        print(f"classification: {rep['classification']}  kappa: {rep['kappa']}"
              f"  shape: {rep.get('shape')}")
        if rep.get("frak_C") is not None:
            print(f"frak_C: {rep['frak_C'][0]:+.9f} {rep['frak_C'][1]:+.9f}i")
        print(f"wrote {path}")
    elif args.command == "spectrum" and body.get("csv"):
        path = _write(outdir, "eigenvalues.csv", body["csv"])
        print(f"{body['count']} eigenvalues; wrote {path}")
    elif args.command == "trace" and body.get("estimate") is not None:
        est = body["estimate"]
        _write(outdir, "trace.csv", body["csv"])
        path = _write(outdir, "trace.json", json.dumps(est, indent=2))
        lim = est["limit_estimate"]
        print(f"limit: {lim[0]:+.6f} {lim[1]:+.6f}i  "
              f"error_bar: {est['error_bar']:.2e}  verdict: {est['verdict']}")
        print(f"wrote {path}")
    elif args.command == "green" and body.get("csv"):
        path = _write(outdir, "green.csv", body["csv"])
        _write(outdir, "green.json", json.dumps(
            {k: body[k] for k in ("limit", "error_bar", "target", "verdict",
                                  "oracles")}, indent=2))
        if body.get("limit") is not None:
            print(f"cesaro limit: {body['limit'][0]:+.6f} "
                  f"{body['limit'][1]:+.6f}i  verdict: {body['verdict']}")
        print(f"wrote {path}")
    return code


if __name__ == "__main__":
    sys.exit(main())
