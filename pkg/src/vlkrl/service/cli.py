"""Command-line front door: train, eval, serve, world validate."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from vlkrl.env.world import load_world, default_world, validate_world


@click.group()
def main():
    """Verified language-model knowledge for RL dialogue policies."""


def _resolve_worlds(world_spec: str):
    worlds = {"default": default_world()}
    if world_spec and world_spec != "default":
        loaded = load_world(world_spec)
        worlds[loaded.name] = loaded
        worlds[world_spec] = loaded
        return worlds, loaded
    return worlds, worlds["default"]


def _seed_tuple(count: int, base: int = 11) -> tuple[int, ...]:
    return tuple(base + i for i in range(count))


@main.command()
@click.option("--world", default="default", help="world name or JSON path")
@click.option("--mode", default="full",
              type=click.Choice(["full", "no_crossexam", "no_t2s", "rl_only"]))
@click.option("--backbone", default="ppo", type=click.Choice(["ppo", "dqn", "pg"]))
@click.option("--respondent", default="oracle",
              type=click.Choice(["oracle", "noisy", "live"]))
@click.option("--gating", default="cross_exam",
              type=click.Choice(["cross_exam", "fixed", "dynamic", "none"]))
@click.option("--seed", default=11, type=int)
@click.option("--epochs", default=300, type=int)
@click.option("--batch-size", default=100, type=int)
@click.option("--low-resource", is_flag=True,
              help="from-scratch regime: one dialogue per epoch, no warm start")
@click.option("--out", default="vlkrl-train", type=click.Path())
def train(world, mode, backbone, respondent, gating, seed, epochs, batch_size,
          low_resource, out):
    """Train a policy against the synthetic world and save a checkpoint."""
    from vlkrl.evalharness.experiment import (
        ExperimentConfig, GatewayUnavailableError, low_resource_config,
        train_policy, _make_pipeline, _encoder,
    )
    from vlkrl.evalharness.figures import save_training_curves
    from vlkrl.policy.checkpoint import save_checkpoint

    _, world_obj = _resolve_worlds(world)
    config = ExperimentConfig(
        world=world, mode=mode, backbone=backbone, respondent=respondent,
        gating=gating, epochs=epochs, batch_size=batch_size, seeds=(seed,),
    )
    if low_resource:
        config = low_resource_config(config)
    try:
        pipeline, _, _ = _make_pipeline(world_obj, config, seed)
    except GatewayUnavailableError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    policy, critic, curves = train_policy(world_obj, config, seed, pipeline)

    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    encoder = _encoder(world_obj, config)
    meta = {
        "sizes": list(policy.sizes),
        "critic_sizes": list(critic.sizes),
        "world": world_obj.name,
        "mode": mode,
        "backbone": backbone,
        "seed": seed,
        "encoder_dim": encoder.dim,
    }
    save_checkpoint(out_dir / "policy.ckpt", meta,
                    [policy.get_flat(), critic.get_flat()])
    with open(out_dir / "curves.jsonl", "w", encoding="utf-8") as fh:
        for row in curves:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    save_training_curves({f"seed_{seed}": curves}, out_dir / "training_curves.png")
    click.echo(f"checkpoint and curves written to {out_dir}")


@main.command("eval")
@click.option("--world", default="default")
@click.option("--mode", default="full",
              type=click.Choice(["full", "no_crossexam", "no_t2s", "llm_only", "rl_only"]))
@click.option("--backbone", default="ppo", type=click.Choice(["ppo", "dqn", "pg"]))
@click.option("--respondent", default="oracle",
              type=click.Choice(["oracle", "noisy", "live"]))
@click.option("--gating", default="cross_exam",
              type=click.Choice(["cross_exam", "fixed", "dynamic", "none"]))
@click.option("--seeds", default=5, type=int, help="number of seeds (11, 12, ...)")
@click.option("--episodes", default=250, type=int)
@click.option("--epochs", default=300, type=int)
@click.option("--batch-size", default=100, type=int)
@click.option("--retry-budget", default=0, type=int)
@click.option("--low-resource", is_flag=True)
@click.option("--out", default="report", type=click.Path())
def eval_command(world, mode, backbone, respondent, gating, seeds, episodes,
                 epochs, batch_size, retry_budget, low_resource, out):
    """Train per seed, evaluate, and write the report (json/csv/table/figures)."""
    from vlkrl.evalharness.experiment import (
        ExperimentConfig, GatewayUnavailableError, low_resource_config,
        run_experiment,
    )
    from vlkrl.evalharness.report import write_report

    config = ExperimentConfig(
        world=world, mode=mode, backbone=backbone, respondent=respondent,
        gating=gating, seeds=_seed_tuple(seeds), episodes=episodes,
        epochs=epochs, batch_size=batch_size, retry_budget=retry_budget,
    )
    if low_resource:
        config = low_resource_config(config)
    try:
        report = run_experiment(config)
    except GatewayUnavailableError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    out_dir = write_report(report, out, label=mode)
    click.echo((out_dir / "table.txt").read_text(), nl=False)
    click.echo(f"report written to {out_dir}")


@main.command()
@click.option("--world", default="default")
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8080, type=int)
@click.option("--data-dir", default="vlkrl-data", type=click.Path())
@click.option("--provider", default="oracle", type=click.Choice(["oracle", "http"]))
@click.option("--checkpoint", default="", type=click.Path())
@click.option("--ui-dir", default="", type=click.Path())
@click.option("--anonymize-agents", is_flag=True)
def serve(world, host, port, data_dir, provider, checkpoint, ui_dir,
          anonymize_agents):
    """Host the session API (and the chat UI when --ui-dir is given)."""
    import uvicorn

    from vlkrl.service.app import (
        ServeSettings, create_app, http_provider_factory, oracle_provider_factory,
    )

    worlds, _ = _resolve_worlds(world)
    factory = oracle_provider_factory if provider == "oracle" else http_provider_factory
    settings = ServeSettings(
        worlds=worlds, data_dir=data_dir, provider_factory=factory,
        checkpoint=checkpoint, anonymize_agents=anonymize_agents, ui_dir=ui_dir,
    )
    uvicorn.run(create_app(settings), host=host, port=port)


@main.group()
def world():
    """World-definition utilities."""


@world.command()
@click.option("--world", "world_spec", default="default")
@click.option("--seeds", default=20, type=int)
@click.option("--out", default="goals.json", type=click.Path())
def goals(world_spec, seeds, out):
    """Dump seeded goals as JSON for inspection and replay."""
    from dataclasses import asdict

    from vlkrl.env.goals import generate_goal

    _, world_obj = _resolve_worlds(world_spec)
    dump = []
    for seed in range(seeds):
        goal = generate_goal(world_obj, seed)
        payload = asdict(goal)
        payload["requests"] = {d: list(v) for d, v in goal.requests.items()}
        dump.append(payload)
    Path(out).write_text(json.dumps(dump, indent=1, sort_keys=True),
                         encoding="utf-8")
    click.echo(f"{seeds} goals written to {out}")


@world.command()
@click.argument("path")
def validate(path):
    """Check a world file (or 'default') against every invariant."""
    from vlkrl.core.ontology import SchemaError

    try:
        if path == "default":
            world_obj = default_world()
        else:
            world_obj = load_world(path)
        validate_world(world_obj)
    except (SchemaError, OSError, json.JSONDecodeError, KeyError) as exc:
        click.echo(f"invalid world: {exc}", err=True)
        sys.exit(1)
    ontology = world_obj.ontology
    entities = sum(len(v) for v in world_obj.database.entities_by_domain.values())
    click.echo(
        f"world '{world_obj.name}' ok: {len(ontology.domains)} domains, "
        f"{len(ontology.slot_pairs())} slots, {entities} entities, "
        f"{len(world_obj.rules)} rules"
    )


if __name__ == "__main__":
    main()
