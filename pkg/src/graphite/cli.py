"""Command-line interface: ingest, layout, sample, serve, simulate."""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .community import detect_communities
from .graph import (degree_distribution, graph_to_document, load_graph,
                    serialize_annotated)
from .layout import LayoutParams, run_layout
from .netsim import (NetworkModel, grab_and_hold_script, idle_script,
                     run_scenario)
from .sampling import SampleSpec, apply_sample


@click.group()
def main():
    """Collaborative 3D network-visualization backend."""


@main.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
def ingest(file: Path):
    """Validate an interchange document and report what ingestion cleaned up."""
    g, report = load_graph(file.read_bytes())
    hist = degree_distribution(g)
    click.echo(f"vertices: {g.n}")
    click.echo(f"edges: {g.m}")
    click.echo(f"self-loops dropped: {report.self_loops_dropped}")
    click.echo(f"duplicates merged: {report.duplicates_merged}")
    if hist.counts:
        click.echo(f"degree range: {min(hist.counts)}..{max(hist.counts)}")


@main.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--iters", default=2000, show_default=True, help="Annealing iterations.")
@click.option("--cooling", default=1.5, show_default=True, help="Cooling exponent.")
@click.option("--seed", default=0, show_default=True, help="Layout RNG seed.")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path),
              help="Write the annotated document here instead of stdout.")
def layout(file: Path, iters: int, cooling: float, seed: int, out: Path | None):
    """Lay out a graph, cluster it, and emit the annotated document."""
    g, _ = load_graph(file.read_bytes())
    params = LayoutParams(max_iterations=iters, cooling_exponent=cooling,
                          rng_seed=seed)
    positions = run_layout(g, params)
    partition = detect_communities(g, seed=seed)
    data = serialize_annotated(g, positions.tolist(), partition.assignment)
    if out:
        out.write_bytes(data)
        click.echo(f"wrote {len(data)} bytes to {out}", err=True)
    else:
        sys.stdout.buffer.write(data)


@main.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--scheme", type=click.Choice(["rn", "re", "rw"]), required=True)
@click.option("--p", "prob", default=0.5, show_default=True,
              help="Inclusion probability (rn/re) or restart probability (rw).")
@click.option("--fraction", default=0.5, show_default=True,
              help="Target visited fraction (rw only).")
@click.option("--seed", default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path))
def sample(file: Path, scheme: str, prob: float, fraction: float, seed: int,
           out: Path | None):
    """Down-sample a graph and emit the sampled interchange document."""
    g, _ = load_graph(file.read_bytes())
    spec = SampleSpec(scheme=scheme, p=prob, target_fraction=fraction, rng_seed=seed)
    sampled = apply_sample(g, spec)
    data = graph_to_document(sampled)
    if out:
        out.write_bytes(data)
        click.echo(f"kept {sampled.n}/{g.n} vertices, {sampled.m}/{g.m} edges",
                   err=True)
    else:
        sys.stdout.buffer.write(data)


@main.command()
@click.option("--http-port", default=None, type=int,
              help="HTTP port (default env GRAPHITE_HTTP_PORT or 8707).")
@click.option("--udp-port", default=None, type=int,
              help="UDP port (default env GRAPHITE_UDP_PORT or 8708).")
@click.option("--data-dir", default=None, type=click.Path(file_okay=False),
              help="Job/blob directory (default env GRAPHITE_DATA_DIR or ./graphite-data).")
@click.option("--master-mode", is_flag=True, default=False,
              help="Only the first-joined client's transforms are shared.")
def serve(http_port: int | None, udp_port: int | None, data_dir: str | None,
          master_mode: bool):
    """Run the analysis server and live session bridge."""
    import os

    from .server import DEFAULT_HTTP_PORT, DEFAULT_UDP_PORT
    from .server import serve as run_server

    run_server(
        data_dir=data_dir or os.environ.get("GRAPHITE_DATA_DIR", "graphite-data"),
        http_port=http_port if http_port is not None else DEFAULT_HTTP_PORT,
        udp_port=udp_port if udp_port is not None else DEFAULT_UDP_PORT,
        master_mode=master_mode,
    )


@main.command()
@click.option("--clients", default=2, show_default=True)
@click.option("--loss", default=0.0, show_default=True)
@click.option("--latency", default="0:0", show_default=True,
              help="Uniform latency range in ms, min:max.")
@click.option("--reorder", default=0.0, show_default=True)
@click.option("--duplicate", default=0.0, show_default=True)
@click.option("--ticks", default=60, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path),
              help="Write the metrics JSON here instead of stdout.")
def simulate(clients: int, loss: float, latency: str, reorder: float,
             duplicate: float, ticks: int, seed: int, out: Path | None):
    """Exercise the sync protocol over a simulated lossy network."""
    try:
        lo, hi = (float(x) for x in latency.split(":"))
    except ValueError:
        raise click.BadParameter("latency must look like '5:30'", param_hint="--latency")
    model = NetworkModel(loss_rate=loss, latency_ms=(lo, hi),
                         reorder_rate=reorder, duplicate_rate=duplicate,
                         rng_seed=seed)
    scripts = {1: grab_and_hold_script(ticks)}
    for cid in range(2, clients + 1):
        scripts[cid] = idle_script(ticks)
    metrics = run_scenario(clients, model, scripts, ticks)
    text = metrics.to_json()
    if out:
        out.write_text(text + "\n")
        click.echo(f"wrote metrics to {out}", err=True)
    else:
        click.echo(text)


if __name__ == "__main__":
    main()
