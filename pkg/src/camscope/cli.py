"""Command-line entry points: dataset preparation, training, map export, serving.

Exit codes are a stable scripting contract: 0 success, 1 runtime/environment
failures (e.g. port in use), 2 invalid input (parse/format/shape errors).
Logs go to stderr; data goes to files or stdout.
"""

from __future__ import annotations

import json
import signal
import sys
from pathlib import Path

import click
import numpy as np

from . import dataset as ds
from .aggregate import (
    AGGREGATION_METHODS,
    VARIABILITY_METHODS,
    build_aggregated_cam,
    collect_cams,
)
from .errors import (
    CamscopeError,
    EmptyClassError,
    MalformedFrameError,
    PacketSkipped,
    UnsupportedFormatError,
)
from .glyph import DEFAULT_CELL_SIZE, DEFAULT_WRAP, render_svg
from .model import CamNet, ModelConfig, init_weights, load_weights, save_weights, train
from .service import build_state, create_app


def _fail(message, code=2):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


# config keys use the flag spelling; map them onto click parameter names
_CONFIG_KEY_ALIASES = {"class": "class_spec"}


def _normalize_config(doc):
    out = {}
    for command, options in doc.items():
        if not isinstance(options, dict):
            raise ValueError(f"section {command!r} must be an object of options")
        normalized = {}
        for key, value in options.items():
            key = key.replace("-", "_")
            normalized[_CONFIG_KEY_ALIASES.get(key, key)] = value
        out[command] = normalized
    return out


@click.group()
@click.option(
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="JSON config file with per-subcommand option defaults; flags win.",
)
@click.pass_context
def main(ctx, config_path):
    """Train a GAP-CNN on byte vectors and explore aggregated activation maps."""
    if config_path:
        with open(config_path, "r", encoding="utf-8") as fh:
            try:
                ctx.default_map = _normalize_config(json.load(fh))
            except (json.JSONDecodeError, ValueError) as exc:
                _fail(f"config file {config_path}: {exc}")


@main.command()
@click.option("--pcap-dir", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--manifest", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--per-class", type=int, default=5000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def prepare(pcap_dir, manifest, out, per_class, seed):
    """Parse labeled pcap files into a balanced dataset bundle."""
    with open(manifest, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            _fail(f"manifest {manifest}: {exc}")
    files = doc.get("files")
    if not isinstance(files, dict):
        _fail(f'manifest {manifest} must contain a "files" object')
    class_names = sorted(set(files.values()))
    class_index = {name: i for i, name in enumerate(class_names)}
    samples = []
    skip_counts = {}
    for fname in sorted(files):
        path = Path(pcap_dir) / fname
        if not path.is_file():
            _fail(f"manifest lists {fname} but {path} does not exist")
        try:
            capture = ds.parse_pcap(path.read_bytes())
        except UnsupportedFormatError as exc:
            _fail(f"{fname}: {exc}")
        for note in capture.warnings:
            click.echo(f"{fname}: warning: {note}", err=True)
        label = class_index[files[fname]]
        for idx, packet in enumerate(capture.packets):
            try:
                samples.append(
                    ds.preprocess_packet(packet, sample_id=f"{fname}:{idx}", label=label)
                )
            except PacketSkipped as exc:
                skip_counts[exc.reason] = skip_counts.get(exc.reason, 0) + 1
            except MalformedFrameError as exc:
                _fail(f"{fname} record {idx}: {exc}")
    if not samples:
        _fail("no samples found in the capture files")
    kept, summary = ds.undersample(samples, per_class, seed)
    ds.write_bundle(out, kept, class_names)
    report = {
        "classes": class_names,
        "counts_before": {class_names[k]: v for k, v in sorted(summary.counts_before.items())},
        "counts_after": {class_names[k]: v for k, v in sorted(summary.counts_after.items())},
        "skipped": dict(sorted(skip_counts.items())),
        "seed": seed,
        "n_samples": len(kept),
        "out": str(out),
    }
    click.echo(json.dumps(report, indent=2))


def _parse_channels(spec):
    try:
        channels = tuple(int(part) for part in spec.split(",") if part.strip())
    except ValueError:
        _fail(f"bad --channels value {spec!r}; expected comma-separated integers")
    if not channels:
        _fail("--channels must name at least one layer")
    return channels


def _load_bundle(path):
    try:
        return ds.read_bundle(path)
    except (UnsupportedFormatError, CamscopeError, json.JSONDecodeError, KeyError) as exc:
        _fail(f"bundle {path}: {exc}")


def _load_net(path, bundle=None):
    try:
        net = load_weights(path)
    except CamscopeError as exc:
        _fail(f"weights {path}: {exc}")
    if bundle is not None and net.config.input_length != bundle.input_length:
        _fail(
            f"weights expect input length {net.config.input_length}, "
            f"bundle has {bundle.input_length}"
        )
    return net


@main.command("train")
@click.option("--data", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--epochs", type=int, default=10, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--batch-size", type=int, default=64, show_default=True)
@click.option("--lr", type=float, default=1e-3, show_default=True)
@click.option("--channels", default="16,32,64,128,128,128", show_default=True)
@click.option("--kernel-size", type=int, default=5, show_default=True)
@click.option(
    "--metrics",
    type=click.Path(dir_okay=False),
    default=None,
    help="Write the per-epoch metrics CSV here instead of stdout.",
)
def train_cmd(data, out, epochs, seed, batch_size, lr, channels, kernel_size, metrics):
    """Train on a bundle and write a weight file plus per-epoch metrics."""
    bundle = _load_bundle(data)
    if np.any(bundle.labels < 0):
        _fail(f"bundle {data} contains unlabeled samples; training needs labels")
    num_classes = len(bundle.class_names)
    if num_classes < 2:
        _fail(f"bundle {data} has {num_classes} class(es); need at least 2")
    if int(bundle.labels.max()) >= num_classes:
        _fail(f"bundle {data} has labels outside [0, {num_classes})")
    try:
        config = ModelConfig(
            input_length=bundle.input_length,
            conv_channels=_parse_channels(channels),
            kernel_size=kernel_size,
            num_classes=num_classes,
        )
        if epochs > 0:
            weights, history = train(
                config, bundle.x, bundle.labels, epochs=epochs,
                batch_size=batch_size, lr=lr, seed=seed,
            )
        else:
            weights = init_weights(config, np.random.default_rng(seed))
            history = []
    except (CamscopeError, IndexError) as exc:
        _fail(str(exc))
    save_weights(CamNet(config, weights), out)
    header = ["epoch", "loss", "accuracy"]
    for name in bundle.class_names:
        header += [f"precision_{name}", f"recall_{name}", f"f1_{name}"]
    lines = [",".join(header)]
    for entry in history:
        row = [str(entry.epoch), f"{entry.loss:.6f}", f"{entry.accuracy:.6f}"]
        for m in entry.per_class:
            row += [f"{m.precision:.6f}", f"{m.recall:.6f}", f"{m.f1:.6f}"]
        lines.append(",".join(row))
        click.echo(
            f"epoch {entry.epoch}: loss={entry.loss:.4f} accuracy={entry.accuracy:.4f}",
            err=True,
        )
    text = "\n".join(lines) + "\n"
    if metrics:
        Path(metrics).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


@main.command("export-cam")
@click.option("--data", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--weights", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--class", "class_spec", required=True, help="Class index or class name.")
@click.option("--agg", type=click.Choice(AGGREGATION_METHODS), default="mean", show_default=True)
@click.option("--var", type=click.Choice(VARIABILITY_METHODS), default="entropy", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--svg", type=click.Path(dir_okay=False), default=None)
@click.option("--wrap", type=int, default=DEFAULT_WRAP, show_default=True)
@click.option("--cell-size", type=float, default=DEFAULT_CELL_SIZE, show_default=True)
def export_cam(data, weights, class_spec, agg, var, out, svg, wrap, cell_size):
    """Aggregate one class's maps into JSON and, optionally, a static SVG grid."""
    bundle = _load_bundle(data)
    net = _load_net(weights, bundle)
    if class_spec in bundle.class_names:
        class_index = bundle.class_names.index(class_spec)
    else:
        try:
            class_index = int(class_spec)
        except ValueError:
            _fail(f"unknown class {class_spec!r}; bundle classes: {bundle.class_names}")
        if not 0 <= class_index < net.config.num_classes:
            _fail(f"class index {class_index} out of range [0, {net.config.num_classes})")
    try:
        matrix = collect_cams(net, bundle.x, class_index, bundle.sample_ids)
    except EmptyClassError as exc:
        _fail(str(exc))
    aggregated = build_aggregated_cam(matrix, agg, var)
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(aggregated.to_dict(), fh)
    click.echo(
        f"class {class_index}: aggregated {matrix.n_samples} maps -> {out}", err=True
    )
    if svg:
        svg_text = render_svg(aggregated.impact, aggregated.variability, wrap=wrap, cell_size=cell_size)
        Path(svg).write_text(svg_text, encoding="utf-8")
        click.echo(f"wrote glyph grid -> {svg}", err=True)


@main.command()
@click.option("--data", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--weights", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--listen", default="127.0.0.1:8000", show_default=True, help="ADDR:PORT to bind.")
@click.option("--ui-dir", type=click.Path(exists=True, file_okay=False), default=None)
def serve(data, weights, listen, ui_dir):
    """Serve the HTTP API (and, optionally, static UI assets)."""
    import uvicorn

    host, sep, port_text = listen.rpartition(":")
    if not sep or not host:
        _fail(f"bad --listen value {listen!r}; expected ADDR:PORT")
    try:
        port = int(port_text)
    except ValueError:
        _fail(f"bad port {port_text!r} in --listen")
    bundle = _load_bundle(data)
    net = _load_net(weights, bundle)
    click.echo(f"computing activation maps for {bundle.n_samples} samples...", err=True)
    state = build_state(net, bundle)
    app = create_app(state, ui_dir=ui_dir)

    # uvicorn re-raises a captured SIGTERM after its graceful shutdown, which
    # would kill the process with a signal status; exit 0 instead.
    signal.signal(signal.SIGTERM, lambda signum, frame: sys.exit(0))
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except (OSError, SystemExit) as exc:
        if isinstance(exc, SystemExit) and not exc.code:
            return
        _fail(f"server failed to start on {listen} (port in use?): {exc}", code=1)


if __name__ == "__main__":
    main()
