"""Command-line entry point.

Subcommands:
    train      fit the network on IDX data and write a model JSON
    decompose  map a model's weights onto photonic meshes
    exp1       global-uncertainty Monte Carlo sweep (CSV output)
    exp2       zonal perturbation heatmaps (JSON + long-format CSV)
    rvd        per-MZI sensitivity of seeded random unitaries (CSV)

Dataset paths fall back to $PHOTONIC_DATA_DIR (default ./data).  Exit
codes: 0 success, 2 configuration/input error, 3 numerical contract
violation.  Result files embed the tool version, the resolved
configuration, the seed and a git-style content hash of the input
model/network file; no partial files are left behind on failure.
"""

import argparse
import json
import os
import pathlib
import sys

import numpy as np

from . import __version__, experiments, mesh, mnist, network
from .fileio import atomic_write_text, git_blob_sha1
from .linalg import haar_random_unitary
from .uncertainty import MODES

TRAIN_ACCURACY_FLOOR = 0.85
LAYER_ROUND_TRIP_TOL = 1e-8

DESK_SIGMAS = (0.005, 0.025, 0.05, 0.075, 0.1)
FULL_SIGMAS = (0.005, 0.01, 0.025, 0.05, 0.075, 0.1, 0.125, 0.15)

NETWORK_VERSION = 1


class ConfigError(Exception):
    """Bad configuration or missing input; exit code 2."""


class ContractError(Exception):
    """A numerical contract was violated; exit code 3."""


def _data_fallback(value, name):
    if value is not None:
        return value
    root = os.environ.get("PHOTONIC_DATA_DIR", "data")
    return os.path.join(root, name)


def _require_file(path, what):
    if not pathlib.Path(path).is_file():
        raise ConfigError(f"{what} not found: {path}")
    return path


def _ensure_out_dir(out_dir):
    path = pathlib.Path(out_dir)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out_dir}: {exc}")
    return path


def _load_dataset(images, labels, what):
    try:
        imgs, labs = mnist.load_idx(images, labels)
    except mnist.IdxFormatError as exc:
        raise ConfigError(f"{what} dataset: {exc}")
    return mnist.preprocess_dataset(imgs), labs.astype(int)


def _parse_sigma_list(text):
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"bad --sigma-list value: {text!r}")
    if not values or any(v < 0 for v in values):
        raise ConfigError("--sigma-list needs nonnegative comma-separated numbers")
    return values


def _parse_modes(text):
    modes = [m.strip() for m in text.split(",") if m.strip()]
    for m in modes:
        if m not in MODES:
            raise ConfigError(f"unknown mode {m!r}; choose from {', '.join(MODES)}")
    if not modes:
        raise ConfigError("--modes must name at least one mode")
    return modes


def _file_hash(path):
    return git_blob_sha1(pathlib.Path(path).read_bytes())


def _json_text(doc):
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def _result_meta(args, command, input_hash):
    # The echo covers result-affecting parameters only; worker count and
    # output location are execution details, and leaving them out keeps
    # result files byte-identical across worker counts.
    skip = {"func", "workers", "out_dir"}
    config = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    return {
        "tool_version": __version__,
        "command": command,
        "config": config,
        "seed": getattr(args, "seed", None),
        "input_hash": input_hash,
    }


def _network_to_doc(pnn, model_hash, layer_dims):
    return {
        "version": NETWORK_VERSION,
        "layer_dims": list(layer_dims),
        "model_hash": model_hash,
        "layers": [mesh.layer_to_dict(layer) for layer in pnn.layers],
    }


def _network_from_doc(doc):
    if doc.get("version") != NETWORK_VERSION:
        raise ConfigError(
            f"network version {doc.get('version')!r} unsupported "
            f"(expected {NETWORK_VERSION})")
    try:
        layers = [mesh.layer_from_dict(entry) for entry in doc["layers"]]
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"malformed network file: {exc}")
    return network.PhotonicSPNN(layers=layers)


def _load_network(path):
    _require_file(path, "network file")
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"network file is not valid JSON: {exc}")
    return _network_from_doc(doc)


def cmd_train(args):
    train_images = _require_file(
        _data_fallback(args.train_images, "train-images-idx3-ubyte.gz"),
        "training images")
    train_labels = _require_file(
        _data_fallback(args.train_labels, "train-labels-idx1-ubyte.gz"),
        "training labels")
    test_images = _require_file(
        _data_fallback(args.test_images, "test-images-idx3-ubyte.gz"),
        "test images")
    test_labels = _require_file(
        _data_fallback(args.test_labels, "test-labels-idx1-ubyte.gz"),
        "test labels")
    if args.model is None:
        raise ConfigError("--model (output path) is required for train")
    model_dir = pathlib.Path(args.model).parent
    if str(model_dir):
        _ensure_out_dir(model_dir)

    features, labels = _load_dataset(train_images, train_labels, "training")
    test_features, test_labs = _load_dataset(test_images, test_labels, "test")

    config = network.TrainConfig(seed=args.seed, epochs=args.epochs)
    model = network.train(features, labels, config)
    test_acc = network.accuracy(
        lambda x: network.forward_batch(model.weights, x),
        (test_features, test_labs))
    train_acc = network.accuracy(
        lambda x: network.forward_batch(model.weights, x), (features, labels))
    print(f"train accuracy {train_acc:.4f}  test accuracy {test_acc:.4f}")
    if test_acc < TRAIN_ACCURACY_FLOOR:
        raise ContractError(
            f"test accuracy {test_acc:.4f} below the {TRAIN_ACCURACY_FLOOR} floor")

    network.save_model(model, args.model)
    model_hash = _file_hash(args.model)
    report = _result_meta(args, "train", model_hash)
    report["train_accuracy"] = train_acc
    report["test_accuracy"] = test_acc
    report["model_hash"] = model_hash
    report_path = pathlib.Path(args.model).with_suffix(".report.json")
    atomic_write_text(report_path, _json_text(report))
    print(f"model written to {args.model} (hash {model_hash})")
    return 0


def cmd_decompose(args):
    if args.model is None or args.network is None:
        raise ConfigError("decompose needs --model (input) and --network (output)")
    _require_file(args.model, "model file")
    net_dir = pathlib.Path(args.network).parent
    if str(net_dir):
        _ensure_out_dir(net_dir)
    try:
        model = network.load_model(args.model)
    except ValueError as exc:
        raise ConfigError(f"model file: {exc}")

    pnn = network.PhotonicSPNN.from_model(model)
    for i, (layer, w) in enumerate(zip(pnn.layers, model.weights)):
        realized = mesh.layer_transfer(layer)
        rel = np.linalg.norm(realized - w) / np.linalg.norm(w)
        if rel > LAYER_ROUND_TRIP_TOL:
            raise ContractError(
                f"layer {i} round-trip residual {rel:.3e} exceeds "
                f"{LAYER_ROUND_TRIP_TOL:.1e}")

    counts = [layer.mzi_count() for layer in pnn.layers]
    total = pnn.mzi_count()
    print("per-layer MZI counts: " + "/".join(str(c) for c in counts))
    print(f"total MZIs {total}, phase shifters {pnn.phase_shifter_count()}")

    model_hash = _file_hash(args.model)
    doc = _network_to_doc(pnn, model_hash, model.layer_dims)
    doc["meta"] = _result_meta(args, "decompose", model_hash)
    atomic_write_text(args.network, _json_text(doc))
    print(f"network written to {args.network}")
    return 0


def _test_set_for(args):
    test_images = _require_file(
        _data_fallback(args.test_images, "test-images-idx3-ubyte.gz"),
        "test images")
    test_labels = _require_file(
        _data_fallback(args.test_labels, "test-labels-idx1-ubyte.gz"),
        "test labels")
    features, labels = _load_dataset(test_images, test_labels, "test")
    subset = None if args.full else args.subset
    if subset is not None:
        if subset < 1:
            raise ConfigError("--subset must be positive")
        features = features[:subset]
        labels = labels[:subset]
    return features, labels


def cmd_exp1(args):
    if args.network is None:
        raise ConfigError("exp1 needs --network")
    out_dir = _ensure_out_dir(args.out_dir)
    pnn = _load_network(args.network)
    dataset = _test_set_for(args)
    sigmas = (_parse_sigma_list(args.sigma_list) if args.sigma_list
              else list(FULL_SIGMAS if args.full else DESK_SIGMAS))
    modes = _parse_modes(args.modes)
    n_iter = args.iters if args.iters is not None else (1000 if args.full else 100)

    records, meta = experiments.run_exp1(
        pnn, dataset, sigmas, modes=modes, n_iter=n_iter, seed=args.seed,
        workers=args.workers)

    print(f"{'sigma':>8} {'mode':>8} {'mean':>8} {'ci95':>8}")
    for r in records:
        print(f"{r.sigma:8.4f} {r.mode:>8} {r.mean_accuracy:8.4f} "
              f"{r.ci95_margin:8.4f}")

    doc = _result_meta(args, "exp1", _file_hash(args.network))
    doc.update(meta)
    atomic_write_text(out_dir / "exp1.csv", experiments.exp1_records_to_csv(records))
    atomic_write_text(out_dir / "exp1_meta.json", _json_text(doc))
    print(f"results written to {out_dir}/exp1.csv")
    return 0


def cmd_exp2(args):
    if args.network is None:
        raise ConfigError("exp2 needs --network")
    out_dir = _ensure_out_dir(args.out_dir)
    pnn = _load_network(args.network)
    dataset = _test_set_for(args)
    n_iter = args.iters if args.iters is not None else (1000 if args.full else 25)

    heatmaps, meta = experiments.run_exp2(
        pnn, dataset, base_sigma=args.base_sigma, zonal_sigma=args.zonal_sigma,
        n_iter=n_iter, seed=args.seed, workers=args.workers)

    for h in heatmaps:
        print(f"{h.mesh_id}: loss {h.grid.min():.2f}..{h.grid.max():.2f} pp "
              f"over {h.grid.size} zones")

    doc = experiments.exp2_to_dict(heatmaps, meta)
    doc["meta"].update(_result_meta(args, "exp2", _file_hash(args.network)))
    lines = ["mesh_id,row,col,loss_pp,ci95_pp,iterations"]
    for h in heatmaps:
        for r in range(h.grid.shape[0]):
            for c in range(h.grid.shape[1]):
                lines.append(f"{h.mesh_id},{r},{c},{float(h.grid[r, c])!r},"
                             f"{float(h.ci_grid[r, c])!r},{h.iterations}")
    atomic_write_text(out_dir / "exp2.json", _json_text(doc))
    atomic_write_text(out_dir / "exp2_cells.csv", "\n".join(lines) + "\n")
    print(f"results written to {out_dir}/exp2.json")
    return 0


def cmd_rvd(args):
    out_dir = _ensure_out_dir(args.out_dir)
    if args.size < 2 or args.count < 1:
        raise ConfigError("--size must be >= 2 and --count >= 1")
    rng = np.random.default_rng(args.seed)
    unitaries = [haar_random_unitary(args.size, rng) for _ in range(args.count)]
    n_iter = args.iters if args.iters is not None else 1000
    tables = experiments.run_rvd_study(unitaries, sigma=args.sigma, n_iter=n_iter,
                                       seed=args.seed)

    lines = ["matrix_index,mzi_id,avg_rvd"]
    for mi, table in enumerate(tables):
        print(f"matrix {mi}: avg RVD {table.min():.4f}..{table.max():.4f} "
              f"(ratio {table.max() / table.min():.2f})")
        for k, val in enumerate(table):
            lines.append(f"{mi},{k},{float(val)!r}")
    meta = _result_meta(args, "rvd", None)
    meta["sigma"] = args.sigma
    meta["iterations"] = n_iter
    atomic_write_text(out_dir / "rvd.csv", "\n".join(lines) + "\n")
    atomic_write_text(out_dir / "rvd_meta.json", _json_text(meta))
    print(f"results written to {out_dir}/rvd.csv")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="spnn",
        description="photonic neural network variation-analysis toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--out-dir", default="results")
        p.add_argument("--full", action="store_true",
                       help="full experiment scale instead of desk scale")

    p_train = sub.add_parser("train", help="train the network on IDX data")
    p_train.add_argument("--train-images")
    p_train.add_argument("--train-labels")
    p_train.add_argument("--test-images")
    p_train.add_argument("--test-labels")
    p_train.add_argument("--model", help="output model JSON path")
    p_train.add_argument("--epochs", type=int, default=300)
    p_train.add_argument("--seed", type=int, default=0)
    p_train.set_defaults(func=cmd_train)

    p_dec = sub.add_parser("decompose", help="map model weights onto meshes")
    p_dec.add_argument("--model", help="input model JSON path")
    p_dec.add_argument("--network", help="output network JSON path")
    p_dec.set_defaults(func=cmd_decompose)

    p_e1 = sub.add_parser("exp1", help="global-uncertainty accuracy sweep")
    p_e1.add_argument("--network")
    p_e1.add_argument("--test-images")
    p_e1.add_argument("--test-labels")
    p_e1.add_argument("--sigma-list", help="comma-separated sigma values")
    p_e1.add_argument("--modes", default=",".join(MODES))
    p_e1.add_argument("--iters", type=int)
    p_e1.add_argument("--subset", type=int, default=2000)
    add_common(p_e1)
    p_e1.set_defaults(func=cmd_exp1)

    p_e2 = sub.add_parser("exp2", help="zonal perturbation heatmaps")
    p_e2.add_argument("--network")
    p_e2.add_argument("--test-images")
    p_e2.add_argument("--test-labels")
    p_e2.add_argument("--base-sigma", type=float, default=0.05)
    p_e2.add_argument("--zonal-sigma", type=float, default=0.1)
    p_e2.add_argument("--iters", type=int)
    p_e2.add_argument("--subset", type=int, default=2000)
    add_common(p_e2)
    p_e2.set_defaults(func=cmd_exp2)

    p_rvd = sub.add_parser("rvd", help="per-MZI sensitivity of random unitaries")
    p_rvd.add_argument("--sigma", type=float, default=0.05)
    p_rvd.add_argument("--iters", type=int)
    p_rvd.add_argument("--size", type=int, default=5)
    p_rvd.add_argument("--count", type=int, default=4)
    add_common(p_rvd)
    p_rvd.set_defaults(func=cmd_rvd)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ContractError as exc:
        print(f"numerical contract violation: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
