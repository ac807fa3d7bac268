"""Thin command-line client for the lab service.

Every subcommand talks to the HTTP endpoints. By default the requests run
against an in-process instance of the app (no server needed); pass
--server or set TWOWAY_SERVER to point at a running instance instead.
"""

from __future__ import annotations

import json
import sys

import click
import httpx


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=600.0)
    from .service.app import app
    return httpx.Client(transport=httpx.ASGITransport(app=app),
                        base_url="http://lab.local", timeout=None)


def _post(ctx, path: str, payload: dict) -> dict:
    with _client(ctx.obj.get("server")) as client:
        response = client.post(path, json=payload)
    if response.status_code != 200:
        try:
            detail = response.json().get("detail", response.text)
        except ValueError:
            detail = response.text
        click.echo(f"error: {detail}", err=True)
        sys.exit(1)
    return response.json()


def _write_out(text: str, out_path: str | None):
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
        click.echo(f"wrote {out_path}", err=True)
    else:
        click.echo(text)


def _parse_ns(value: str) -> list[int]:
    try:
        return [int(part) for part in value.split(",") if part]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got {value!r}")


@click.group()
@click.option("--server", envvar="TWOWAY_SERVER", default=None,
              help="Base URL of a running lab service (default: in-process).")
@click.pass_context
def main(ctx, server):
    """Two-way automata lab: build machines, run tapes, account resources."""
    ctx.ensure_object(dict)
    ctx.obj["server"] = server


@main.command()
@click.argument("builder")
@click.option("--n", type=int, default=None, help="Input length parameter.")
@click.option("--prime-range", type=click.Choice(["le-n2", "open-interval"]),
              default=None, help="Prime pool of the fingerprint machine.")
@click.option("--repeats", type=int, default=None, help="Search ladder repetitions.")
@click.option("--shape", type=click.Choice(["pair", "plain"]), default=None,
              help="Form-checker tape shape.")
@click.option("--exact-arithmetic", is_flag=True, default=False,
              help="Rational branch weights (exact probabilities).")
@click.option("-o", "--out", default=None, help="Write the machine document here.")
@click.pass_context
def build(ctx, builder, n, prime_range, repeats, shape, exact_arithmetic, out):
    """Build a named machine and emit its serialized document.

    BUILDER is one of the registered names, e.g. eq_fingerprint, grover_and,
    grover_compiled, parity2_compiled, parity2_and, form_checker.
    """
    params = {}
    if n is not None:
        params["n"] = n
    if prime_range is not None:
        params["prime_range"] = prime_range
    if repeats is not None:
        params["repeats"] = repeats
    if shape is not None:
        params["shape"] = shape
    if exact_arithmetic:
        params["exact_arithmetic"] = True
    data = _post(ctx, "/build", {"builder": builder, "params": params})
    click.echo(f"# kind={data['kind']} classical={data['classical_state_count']} "
               f"quantum={data['quantum_dim']} space_bits={data['space_bits']:.3f}",
               err=True)
    _write_out(json.dumps(data["doc"], indent=2), out)


@main.command()
@click.option("-m", "--machine", "machine_path", required=True,
              help="Machine document file (from `build`).")
@click.option("--tape", required=True, help="Interior tape symbols over 0/1/#.")
@click.option("--mode", type=click.Choice(["exact", "monte-carlo"]), default="exact")
@click.option("--step-cap", type=int, default=None)
@click.option("--trials", type=int, default=10000)
@click.option("--seed", type=int, default=0)
@click.pass_context
def run(ctx, machine_path, tape, mode, step_cap, trials, seed):
    """Run a machine on a tape and print the result document."""
    with open(machine_path) as fh:
        doc = json.load(fh)
    data = _post(ctx, "/run", {"machine": doc, "tape": tape, "mode": mode,
                               "step_cap": step_cap, "trials": trials, "seed": seed})
    click.echo(json.dumps(data, indent=2))


@main.command()
@click.option("-m", "--machine", "machine_path", required=True)
@click.option("--x", "x", required=True, help="First party's bit string.")
@click.option("--y", "y", required=True, help="Second party's bit string.")
@click.option("--mode", type=click.Choice(["exact", "sample"]), default="exact")
@click.option("--seed", type=int, default=0)
@click.option("--step-cap", type=int, default=None)
@click.pass_context
def comm(ctx, machine_path, x, y, mode, seed, step_cap):
    """Crossing-protocol transcript of a machine on a pair input."""
    with open(machine_path) as fh:
        doc = json.load(fh)
    data = _post(ctx, "/comm", {"machine": doc, "x": x, "y": y, "mode": mode,
                                "seed": seed, "step_cap": step_cap})
    click.echo(json.dumps(data, indent=2))


@main.command()
@click.argument("experiment")
@click.option("--n", "ns", required=True, help="Comma-separated sizes, e.g. 4,8,16.")
@click.option("--seed", type=int, default=0)
@click.option("--mode", type=click.Choice(["exact", "monte-carlo"]), default="exact")
@click.option("--trials", type=int, default=10000)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv")
@click.option("--step-cap", type=int, default=None)
@click.option("--prime-range", type=click.Choice(["le-n2", "open-interval"]),
              default="le-n2")
@click.option("--sample-pairs", type=int, default=64)
@click.option("-o", "--out", default=None, help="Write the table here.")
@click.pass_context
def sweep(ctx, experiment, ns, seed, mode, trials, fmt, step_cap, prime_range,
          sample_pairs, out):
    """Run an experiment over sizes and emit its table.

    EXPERIMENT is one of: eq-tradeoff, int-tradeoff, comm-eq, comm-int,
    compiler-check, gadget-check.
    """
    payload = {
        "experiment": experiment,
        "ns": _parse_ns(ns),
        "seed": seed,
        "mode": mode,
        "trials": trials,
        "step_cap": step_cap,
        "prime_range": prime_range,
        "sample_pairs": sample_pairs,
        "format": fmt,
    }
    data = _post(ctx, "/sweep", payload)
    _write_out(data["document"], out)


@main.command()
@click.argument("names", nargs=-1)
@click.pass_context
def check(ctx, names):
    """Run the invariant suites; exit nonzero if any fails."""
    data = _post(ctx, "/check", {"names": list(names) or None})
    for result in data["results"]:
        status = "PASS" if result["passed"] else "FAIL"
        click.echo(f"{status}  {result['name']}: {result['detail']}")
    if not data["all_passed"]:
        sys.exit(1)


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve(host, port):
    """Start the lab service."""
    import uvicorn
    uvicorn.run("twoway.service.app:app", host=host, port=port)


if __name__ == "__main__":
    main()
