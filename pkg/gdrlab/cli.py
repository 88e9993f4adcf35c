"""
Командная строка лаборатории.

    gdrlab gen-data --preset desk --num 2000 --image --out data/desk_train
    gdrlab pretrain --data data/desk_train --val-data data/desk_val --groups 4 --out runs/g4
    gdrlab train --data data/desk_train --val-data data/desk_val --stage1-checkpoint runs/g4/stage1/best.pt --out runs/g4
    gdrlab eval --checkpoint runs/g4/stage2/best.pt --data data/desk_test --out runs/g4/eval
    gdrlab visualize index-map --checkpoint runs/g4/stage2/best.pt --data data/desk_test --out runs/g4/vis
"""
import functools
import sys
from pathlib import Path
from typing import Optional

import click

from gdrlab.core.config import dump_config, load_config
from gdrlab.core.context import LabContext
from gdrlab.core.exceptions import LabError
from gdrlab.core.logger import logger
from gdrlab.models.config_models import GlobalConfig, QueryMode, Variant
from gdrlab.resources.presets import Artifacts, Presets
from gdrlab.tools.trainer_tools import load_checkpoint
from gdrlab.utils.generators import Generates
from gdrlab.utils.serializer import write_summary

CLI_SCALE_FACTOR = 0.1


def training_options(func):
    """Флаги, общие для pretrain и train"""
    options = [
        click.option("--variant", type=click.Choice([v.value for v in Variant]), default=None),
        click.option("--groups", type=click.Choice(["1", "2", "4", "8"]), default=None,
                     help="number of attribute groups, 1 is the non-grouped baseline"),
        click.option("--query", type=click.Choice([q.value for q in QueryMode]), default=None),
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None),
        click.option("--seed", type=int, default=None),
        click.option("--scale-factor", type=float, default=CLI_SCALE_FACTOR, show_default=True),
        click.option("--device", default=None),
        click.option("--single-threaded", is_flag=True, help="bit-reproducible runs"),
        click.option("--out", type=click.Path(file_okay=False), required=True),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def abort_on_lab_error(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except LabError as e:
            logger.error(str(e))
            sys.exit(2)

    return wrapper


def build_config(config_path, variant, groups, query, seed, scale_factor, device) -> GlobalConfig:
    return load_config(config_path, overrides={
        "variant": variant,
        "num_groups": int(groups) if groups is not None else None,
        "query_mode": query,
        "seed": seed,
        "scale_factor": scale_factor,
        "device": device,
    })


def open_context(config: GlobalConfig, out, single_threaded: bool = False) -> LabContext:
    Generates.seed_everything(config.seed, single_threaded=single_threaded)
    context = LabContext(config, run_dir=out, log_to_file=True)
    dump_config(config, Path(out) / "config.ini")
    return context


def checkpoint_context(checkpoint, out, device: Optional[str]):
    model, _ = load_checkpoint(checkpoint, map_location=device or "cpu")
    if device is not None:
        model.config.device = device
    Generates.seed_everything(model.config.seed)
    context = LabContext(model.config, run_dir=out, log_to_file=True)
    return context, model.to(model.config.device)


@click.group()
def cli():
    """Grouped discrete representation lab for object-centric learning."""


@cli.command("gen-data")
@click.option("--preset", type=click.Choice(list(Presets.ALL)), required=True)
@click.option("--num", type=int, required=True)
@click.option("--video/--image", default=False)
@click.option("--frames", type=int, default=12, show_default=True)
@click.option("--resolution", type=int, default=None)
@click.option("--single-object", is_flag=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--overwrite", is_flag=True)
@click.option("--out", type=click.Path(file_okay=False), required=True)
@abort_on_lab_error
def gen_data(preset, num, video, frames, resolution, single_object, seed, overwrite, out):
    """Render a synthetic dataset and pack it into a store."""
    config = load_config(overrides={"input_resolution": resolution, "seed": seed})
    with LabContext(config, run_dir=Path(out).parent) as context:
        context.tools_manager.data.generate_dataset(preset, num, out, video=video, frames=frames, seed=seed,
                                                    overwrite=overwrite, single_object=single_object)


@cli.command()
@click.option("--data", type=click.Path(exists=True), required=True)
@click.option("--val-data", type=click.Path(exists=True), default=None)
@training_options
@abort_on_lab_error
def pretrain(data, val_data, variant, groups, query, config_path, seed, scale_factor, device, single_threaded, out):
    """Stage 1: dVAE with its codebook."""
    config = build_config(config_path, variant, groups, query, seed, scale_factor, device)
    with open_context(config, out, single_threaded) as context:
        tm = context.tools_manager
        info = tm.data.dataset_info(data)
        model = tm.trainer.build(dataset_info=info)
        report = tm.trainer.run_stage1(model, tm.data.open_dataset(data, training=True),
                                       tm.data.open_dataset(val_data or data, training=False))
        write_summary(Path(out) / Artifacts.STAGE1_DIR / Artifacts.SUMMARY, f"Stage 1 {model.variant.label()}", [
            ["steps", str(report.steps)],
            ["final tau", f"{report.final_tau:.4f}"],
            ["best step", str(report.best_step)],
            ["best val recon", f"{report.best_val_loss:.6f}"],
            ["never-used codes", str(report.never_used_codes)],
        ])


@cli.command()
@click.option("--data", type=click.Path(exists=True), required=True)
@click.option("--val-data", type=click.Path(exists=True), default=None)
@click.option("--stage1-checkpoint", type=click.Path(exists=True, dir_okay=False), default=None,
              help="without it stage 1 runs first")
@training_options
@abort_on_lab_error
def train(data, val_data, stage1_checkpoint, variant, groups, query, config_path, seed, scale_factor, device,
          single_threaded, out):
    """Stage 2: slots and token decoder on top of a frozen dVAE."""
    config = build_config(config_path, variant, groups, query, seed, scale_factor, device)
    with open_context(config, out, single_threaded) as context:
        tm = context.tools_manager
        model = tm.trainer.build(dataset_info=tm.data.dataset_info(data))
        train_set = tm.data.open_dataset(data, training=True)
        val_set = tm.data.open_dataset(val_data or data, training=False)
        if stage1_checkpoint is None:
            tm.trainer.run_stage1(model, train_set, val_set)
        report = tm.trainer.run_stage2(model, train_set, val_set, stage1_checkpoint=stage1_checkpoint)
        metrics = tm.trainer.evaluate(model, val_set)
        tm.metrics.write_summary(metrics, Path(out) / Artifacts.STAGE2_DIR,
                                 title=f"Stage 2 {model.variant.label()}, best step {report.best_step}")


@cli.command("eval")
@click.option("--checkpoint", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--data", type=click.Path(exists=True), required=True)
@click.option("--device", default=None)
@click.option("--out", type=click.Path(file_okay=False), required=True)
@abort_on_lab_error
def evaluate(checkpoint, data, device, out):
    """Segmentation metrics of a trained model."""
    context, model = checkpoint_context(checkpoint, out, device)
    with context:
        tm = context.tools_manager
        with tm.metrics.sample_writer(out) as writer:
            record = tm.trainer.evaluate(model, tm.data.open_dataset(data, training=False), sample_writer=writer)
        tm.metrics.write_summary(record, out, title=f"Evaluation {model.variant.label()} on {data}")


@cli.command("transfer-eval")
@click.option("--checkpoint", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--source", type=click.Path(exists=True), required=True)
@click.option("--target", type=click.Path(exists=True), required=True)
@click.option("--device", default=None)
@click.option("--out", type=click.Path(file_okay=False), required=True)
@abort_on_lab_error
def transfer_eval(checkpoint, source, target, device, out):
    """Combined-metric drop from source to target."""
    context, model = checkpoint_context(checkpoint, out, device)
    with context:
        tm = context.tools_manager
        record = tm.trainer.transfer_evaluate(model, tm.data.open_dataset(source, training=False),
                                              tm.data.open_dataset(target, training=False))
        tm.metrics.write_records([{"metric": "source_combined", "value": record.source_combined},
                                  {"metric": "target_combined", "value": record.target_combined},
                                  {"metric": "delta", "value": record.delta}], out)
        tm.metrics.write_transfer_summary(record, out, Path(source).name, Path(target).name)


@cli.group()
def visualize():
    """Interpretability artifacts."""


def visual_options(func):
    options = [
        click.option("--checkpoint", type=click.Path(exists=True, dir_okay=False), required=True),
        click.option("--data", type=click.Path(exists=True), required=True),
        click.option("--device", default=None),
        click.option("--seed", type=int, default=0, show_default=True),
        click.option("--out", type=click.Path(file_okay=False), required=True),
    ]
    for option in reversed(options):
        func = option(func)
    return func


@visualize.command("index-map")
@visual_options
@click.option("--num-samples", type=int, default=4, show_default=True)
@click.option("--permute", is_flag=True, help="random hue permutation per group")
@abort_on_lab_error
def index_map(checkpoint, data, device, seed, out, num_samples, permute):
    context, model = checkpoint_context(checkpoint, out, device)
    with context:
        tm = context.tools_manager
        tm.analysis.index_map(model, tm.data.open_dataset(data, training=False), out,
                              num_samples=num_samples, permute=permute, seed=seed)


@visualize.command()
@visual_options
@click.option("--group", "group_index", type=int, required=True)
@click.option("--value", "new_value", type=int, default=None, help="random when omitted")
@click.option("--slot", type=int, default=None)
@click.option("--random-region", is_flag=True)
@click.option("--sample", type=int, default=0, show_default=True)
@abort_on_lab_error
def swap(checkpoint, data, device, seed, out, group_index, new_value, slot, random_region, sample):
    if (slot is None) == (not random_region):
        raise click.UsageError("pass exactly one of --slot N or --random-region")
    context, model = checkpoint_context(checkpoint, out, device)
    with context:
        tm = context.tools_manager
        tm.analysis.swap(model, tm.data.open_dataset(data, training=False), out, group_index,
                         new_value=new_value, slot=slot, sample=sample, seed=seed)


@visualize.command()
@click.option("--checkpoint", type=click.Path(exists=True, dir_okay=False), multiple=True, required=True,
              help="repeat to overlay curves, e.g. with and without the utilization loss")
@click.option("--label", multiple=True)
@click.option("--data", type=click.Path(exists=True), required=True)
@click.option("--device", default=None)
@click.option("--sigma", type=float, default=50.0, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), required=True)
@abort_on_lab_error
def utilization(checkpoint, label, data, device, sigma, out):
    if label and len(label) != len(checkpoint):
        raise click.UsageError("--label must be given once per --checkpoint")
    models = {}
    for i, path in enumerate(checkpoint):
        model, _ = load_checkpoint(path, map_location=device or "cpu")
        models[label[i] if label else Path(path).parent.parent.name or f"model{i}"] = model
    config = next(iter(models.values())).config
    if device is not None:
        config.device = device
    with LabContext(config, run_dir=out, log_to_file=True) as context:
        tm = context.tools_manager
        tm.analysis.utilization({name: m.to(config.device) for name, m in models.items()},
                                tm.data.open_dataset(data, training=False), out, sigma=sigma)


@visualize.command()
@visual_options
@click.option("--permutations", type=int, default=20, show_default=True)
@abort_on_lab_error
def alignment(checkpoint, data, device, seed, out, permutations):
    context, model = checkpoint_context(checkpoint, out, device)
    with context:
        tm = context.tools_manager
        tm.analysis.alignment(model, tm.data.open_dataset(data, training=False), out,
                              num_permutations=permutations, seed=seed)


if __name__ == "__main__":
    cli()
