"""Command-line client for the experiment service.

The CLI is a thin HTTP client. By default it mounts the service
in-process (no server required); pass ``--server URL`` to talk to a
running instance instead. ``serve`` starts that instance.

Exit codes: 0 success, 1 runtime failure (aborted run, unreachable
server, unwritable output), 2 bad input (config problems, malformed
summaries).
"""

import argparse
import asyncio
import json
import sys
from pathlib import Path

import httpx


def _post(server: str | None, path: str, payload: dict) -> httpx.Response:
    async def go():
        if server:
            async with httpx.AsyncClient(base_url=server, timeout=600.0) as client:
                return await client.post(path, json=payload)
        from .service import create_app

        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(
            transport=transport, base_url="http://conflictmask.local", timeout=600.0
        ) as client:
            return await client.post(path, json=payload)

    return asyncio.run(go())


def _print_detail(response: httpx.Response) -> None:
    try:
        detail = response.json().get("detail")
    except ValueError:
        detail = response.text
    if isinstance(detail, dict) and "errors" in detail:
        for line in detail["errors"]:
            print(f"error: {line}", file=sys.stderr)
    else:
        print(f"error: {detail}", file=sys.stderr)


def cmd_run(args) -> int:
    config_text = ""
    if args.config:
        try:
            config_text = Path(args.config).read_text()
        except OSError as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return 2
    overrides = list(args.overrides)
    if args.strategy:
        overrides.append(f"strategy={args.strategy}")
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.out:
        overrides.append(f"out_dir={args.out}")

    try:
        response = _post(args.server, "/runs", {"config_text": config_text, "overrides": overrides})
    except httpx.HTTPError as exc:
        print(f"error: request failed: {exc}", file=sys.stderr)
        return 1

    if response.status_code in (400, 422):
        _print_detail(response)
        return 2
    if response.status_code != 200:
        _print_detail(response)
        return 1

    data = response.json()
    out_dir = Path(data["out_dir"])
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, text in (
            ("metrics.csv", data["metrics_csv"]),
            ("summary.json", data["summary_json"]),
            ("suite.manifest", data["manifest"]),
        ):
            (out_dir / name).write_text(text, newline="\n")
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out_dir / 'metrics.csv'}")
    print(f"wrote {out_dir / 'summary.json'}")
    print(f"wrote {out_dir / 'suite.manifest'}")
    return 0


def cmd_compare(args) -> int:
    if len(args.summaries) < 2:
        print("error: compare needs at least 2 summary files", file=sys.stderr)
        return 2
    summaries = []
    for path in args.summaries:
        try:
            summaries.append(json.loads(Path(path).read_text()))
        except (OSError, ValueError) as exc:
            print(f"error: cannot load summary '{path}': {exc}", file=sys.stderr)
            return 2

    try:
        response = _post(args.server, "/compare", {"summaries": summaries})
    except httpx.HTTPError as exc:
        print(f"error: request failed: {exc}", file=sys.stderr)
        return 1

    if response.status_code in (400, 422):
        _print_detail(response)
        return 2
    if response.status_code != 200:
        _print_detail(response)
        return 1

    data = response.json()
    for warning in data.get("warnings", []):
        print(f"warning: {warning}", file=sys.stderr)
    sys.stdout.write(data["table"])
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="conflictmask",
                                     description="Multi-task soft-mask experiment runner")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment and write its artifacts")
    run.add_argument("--config", help="path to a key=value config file")
    run.add_argument("--strategy", help="strategy or comma list: soco,hard,none")
    run.add_argument("--seed", type=int, help="run seed")
    run.add_argument("--out", help="output directory (overrides out_dir)")
    run.add_argument("--server", help="remote service URL; default runs in-process")
    run.add_argument("overrides", nargs="*", metavar="KEY=VALUE",
                     help="additional config overrides")
    run.set_defaults(func=cmd_run)

    compare = sub.add_parser("compare", help="tabulate two or more summary.json files")
    compare.add_argument("summaries", nargs="+", metavar="SUMMARY",
                         help="paths to summary.json files")
    compare.add_argument("--server", help="remote service URL; default runs in-process")
    compare.set_defaults(func=cmd_compare)

    serve = sub.add_parser("serve", help="start the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
