"""Command-line client for the fiducial engine service.

By default commands run against an in-process instance of the FastAPI
app, so no server needs to be running; ``--server URL`` targets a remote
instance instead.  Exit codes: 0 success, 2 invalid configuration,
3 statistical failure (degeneracy or an invalid experiment).
"""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click
import httpx
import numpy as np

from .inference import write_summary_json
from .models import DataSubset, load_csv, save_csv

EXIT_INVALID_CONFIG = 2
EXIT_STATISTICAL_FAILURE = 3


def _client(server: str | None):
    if server:
        return httpx.Client(base_url=server, timeout=None)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DeprecationWarning)
        from fastapi.testclient import TestClient

    from .service import app

    return TestClient(app)


def _post(server: str | None, path: str, payload: dict) -> dict:
    with _client(server) as client:
        resp = client.post(path, json=payload)
    if resp.status_code in (400, 422):
        body = _safe_json(resp)
        click.echo(f"invalid configuration: {body.get('message', body)}", err=True)
        sys.exit(EXIT_INVALID_CONFIG)
    if resp.status_code == 409:
        body = _safe_json(resp)
        click.echo(f"statistical failure: {body.get('message', body)}", err=True)
        sys.exit(EXIT_STATISTICAL_FAILURE)
    resp.raise_for_status()
    return resp.json()


def _safe_json(resp) -> dict:
    try:
        return resp.json()
    except Exception:
        return {"message": resp.text}


def _parse_theta(value: str) -> list[float]:
    try:
        return [float(v) for v in value.split(",") if v.strip() != ""]
    except ValueError:
        click.echo(f"invalid --theta value: {value!r}", err=True)
        sys.exit(EXIT_INVALID_CONFIG)


@click.group()
def main():
    """Distributed generalized fiducial inference."""


@main.command()
@click.option("--model", required=True)
@click.option("--theta", required=True, help="comma-separated true parameter values")
@click.option("--n", required=True, type=int)
@click.option("--seed", default=0, type=int)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--rho", default=0.1, type=float)
@click.option("--threshold", default=None, type=float)
@click.option("--server", default=None)
def simulate(model, theta, n, seed, out, rho, threshold, server):
    """Simulate observations and write them as CSV."""
    payload = {
        "model": model,
        "theta": _parse_theta(theta),
        "n": n,
        "seed": seed,
        "rho": rho,
        "threshold": threshold,
    }
    body = _post(server, "/simulate", payload)
    obs = body["observations"]
    x = np.asarray(obs["x"]) if obs.get("x") is not None else None
    save_csv(out, DataSubset(y=np.asarray(obs["y"]), x=x))
    click.echo(f"wrote {len(obs['y'])} observations to {out}")


@main.command()
@click.option("--model", required=True)
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--k", default=1, type=int)
@click.option("--t", default=10_000, type=int)
@click.option("--burn-in", default=None, type=int)
@click.option("--thin", default=1, type=int)
@click.option(
    "--algorithm",
    type=click.Choice(["direct", "method-g"]),
    default="method-g",
)
@click.option("--norm", type=click.Choice(["d2", "dinf"]), default="d2")
@click.option("--seed", default=0, type=int)
@click.option("--alphas", default="0.05,0.1", help="comma-separated CI alphas")
@click.option("--max-workers", default=1, type=int)
@click.option("--threshold", default=None, type=float)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--dump-chains", default=None, type=click.Path(file_okay=False))
@click.option("--trace", default=None, type=click.Path(dir_okay=False))
@click.option("--server", default=None)
def fit(
    model, data_path, k, t, burn_in, thin, algorithm, norm, seed, alphas,
    max_workers, threshold, out, dump_chains, trace, server,
):
    """Run the full pipeline on a CSV dataset and write summary JSON."""
    data = load_csv(data_path)
    payload = {
        "model": model,
        "data": {
            "y": data.y.tolist(),
            "x": None if data.x is None else data.x.tolist(),
        },
        "k": k,
        "t": t,
        "burn_in": burn_in,
        "thin": thin,
        "algorithm": algorithm.replace("-", "_"),
        "norm": norm,
        "seed": seed,
        "alphas": _parse_theta(alphas),
        "max_workers": max_workers,
        "threshold": threshold,
        "include_chains": dump_chains is not None,
        "include_trace": trace is not None,
    }
    body = _post(server, "/fit", payload)
    write_summary_json(out, body["summary"])
    if dump_chains is not None:
        out_dir = Path(dump_chains)
        out_dir.mkdir(parents=True, exist_ok=True)
        for chain in body.get("chains") or []:
            _write_chain_csv(out_dir / f"chain_{chain['subset_id']}.csv", chain)
    if trace is not None:
        with open(trace, "w") as fh:
            for line in body.get("trace") or []:
                fh.write(line + "\n")
    click.echo(f"wrote summary to {out}")


def _write_chain_csv(path: Path, chain: dict) -> None:
    particles = chain["particles"]
    p = len(particles[0]) if particles else 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"theta_{j+1}" for j in range(p)] + ["log_density"])
        for i, row in enumerate(particles):
            writer.writerow([i] + [repr(float(v)) for v in row]
                            + [repr(float(chain["log_density"][i]))])


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        click.echo(f"cannot read config {path}: {exc}", err=True)
        sys.exit(EXIT_INVALID_CONFIG)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--server", default=None)
def coverage(config_path, out, server):
    """Run a coverage experiment from a JSON config; write a CSV report."""
    spec = _load_config(config_path)
    body = _post(server, "/coverage", spec)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["parameter", "alpha", "coverage", "band_low", "band_high", "in_band"]
        )
        for c in body["cells"]:
            writer.writerow(
                [
                    c["parameter"],
                    c["alpha"],
                    repr(c["coverage"]),
                    repr(c["band_low"]),
                    repr(c["band_high"]),
                    int(c["in_band"]),
                ]
            )
    click.echo(
        f"coverage report: {len(body['cells'])} cells, "
        f"{body['failures']} failed replications, valid={body['valid']}"
    )
    if not body["valid"]:
        click.echo("experiment invalid: more than 5% of replications failed", err=True)
        sys.exit(EXIT_STATISTICAL_FAILURE)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--server", default=None)
def timing(config_path, out, server):
    """Run a timing grid from a JSON config; write a CSV table."""
    req = _load_config(config_path)
    body = _post(server, "/timing", req)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "total", "sampling", "weighting", "merging", "inference"])
        for r in body["rows"]:
            writer.writerow(
                [r["k"]] + [repr(r[c]) for c in
                            ("total", "sampling", "weighting", "merging", "inference")]
            )
    click.echo(f"wrote {len(body['rows'])} timing rows to {out}")


if __name__ == "__main__":
    main()
