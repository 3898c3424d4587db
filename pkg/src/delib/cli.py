"""Command-line entry points: serve, simulate, evaluate, replay, export."""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .deliberation import read_event_log, replay as replay_events, write_event_log
from .evalharness import (
    default_method_registry,
    load_fixture,
    make_synthetic_fixtures,
    run_comparison,
)
from .evalharness.harness import export_results
from .service import ServiceConfig, create_app
from .simulate import run_simulation


@click.group()
def main():
    """Deliberation platform engine."""


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8400, show_default=True, type=int)
@click.option("--storage", type=click.Path(path_type=Path), default=None,
              help="Directory for append-only event logs.")
@click.option("--aggregator", default="schulze",
              type=click.Choice(["schulze", "bradley_terry"]), show_default=True)
@click.option("--mock/--no-mock", default=True, show_default=True,
              help="Use the deterministic mock generator and judges.")
@click.option("--admin-token", default=None, help="Static admin bearer token.")
def serve(host, port, storage, aggregator, mock, admin_token):
    """Run the HTTP platform service."""
    import uvicorn

    config = ServiceConfig(
        storage_path=storage,
        aggregator=aggregator,
        mock_mode=mock,
        admin_token=admin_token,
    )
    app = create_app(config)
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command()
@click.option("--agents", "n_agents", default=20, show_default=True, type=int)
@click.option("--deliberations", "n_deliberations", default=5, show_default=True,
              type=int)
@click.option("--seed", default=1, show_default=True, type=int)
@click.option("--ticks", default=10, show_default=True, type=int)
def simulate(n_agents, n_deliberations, seed, ticks):
    """Drive mock agents end-to-end and print final winners."""
    result = run_simulation(n_agents, n_deliberations, seed, ticks)
    for deliberation_id, winner in sorted(result.winners.items()):
        click.echo(f"{deliberation_id}: winner={winner}")
    if not result.all_have_winner:
        click.echo("warning: some deliberations have no winner", err=True)
        sys.exit(1)


@main.command()
@click.option("--fixtures", "fixtures_dir", type=click.Path(path_type=Path),
              default=None, help="Directory of fixture JSON documents.")
@click.option("--mock-judges", is_flag=True, default=True,
              help="Score with the deterministic mock judges.")
@click.option("--seed", default=1, show_default=True, type=int,
              help="Seed for synthetic fixtures when --fixtures is omitted.")
@click.option("--out", "out_dir", type=click.Path(path_type=Path),
              default=Path("eval-results"), show_default=True)
def evaluate(fixtures_dir, mock_judges, seed, out_dir):
    """Run the architecture comparison and write CSV/JSON results."""
    if fixtures_dir is not None:
        fixtures = [
            load_fixture(json.loads(p.read_text()))
            for p in sorted(Path(fixtures_dir).glob("*.json"))
        ]
    else:
        fixtures = make_synthetic_fixtures(seed=seed, n=3)
    result = run_comparison(fixtures, default_method_registry())
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    export_results(result, out_dir / "scores.csv", out_dir / "scores.json")
    click.echo(result.to_csv())
    for judge, members in result.frontiers.items():
        names = ", ".join(s.method for s in members)
        click.echo(f"frontier[{judge}]: {names}")


@main.command("replay")
@click.option("--log", "log_path", type=click.Path(path_type=Path), required=True)
def replay_cmd(log_path):
    """Replay an event log twice and verify determinism."""
    d = read_event_log(Path(log_path).read_text())
    again = replay_events(d.log, d.id, d.question, d.aggregator)
    if d.state_bytes() != again.state_bytes():
        click.echo("REPLAY MISMATCH", err=True)
        sys.exit(1)
    click.echo(f"ok: {d.id} events={d.event_seq} winner={d.winner}")


@main.command()
@click.option("--deliberation", "deliberation_id", required=True)
@click.option("--storage", type=click.Path(path_type=Path), required=True)
def export(deliberation_id, storage):
    """Dump one deliberation's event log to stdout."""
    path = Path(storage) / f"{deliberation_id}.log"
    if not path.exists():
        click.echo(f"no log for {deliberation_id}", err=True)
        sys.exit(1)
    d = read_event_log(path.read_text())
    click.echo(write_event_log(d), nl=False)


if __name__ == "__main__":
    main()
