"""``qattention`` command line.

Subcommands: ``gen``, ``train``, ``eval``, ``attention``, ``analyze``,
``phase-diagram`` and ``accuracy-curve``. Every artifact carries the
SHA-256 digest of the run config. Manifests and checkpoints also carry a
digest of the dataset-defining settings (N, J, seed, thresholds, grid);
loading one produced under different settings is a compatibility error.

Exit codes: 0 ok, 1 other, 2 usage, 3 I/O or compatibility,
4 solver convergence, 5 numerical health (NaN loss, bad fits).
"""

from __future__ import annotations

import argparse
import logging
import shutil
import sys
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import analysis
from .ansatz import apply_ansatz
from .attention import attention_circuit
from .checkpoint import load_checkpoint, save_checkpoint
from .classifier import attention_of, predict_proba_array, train
from .config import dump_config, load_config
from .dataset import default_jobs, digest_bytes, generate_dataset, load_dataset
from .errors import CompatibilityError, QAttentionError, UsageError
from .hamiltonian import HamiltonianSpec, PhaseLabel, ground_state, label_point, nn_xx, string_order
from .statevec import StateVector

logger = logging.getLogger("qattention")

EXIT_USAGE = 2
EXIT_IO = 3


@contextmanager
def output_files(out_dir):
    """Collect files written by a command; remove them all if the command fails."""
    out = Path(out_dir)
    created_dir = not out.exists()
    written = []
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc

    def track(name):
        path = out / name
        written.append(path)
        return path

    try:
        yield track
    except BaseException:
        for path in written:
            path.unlink(missing_ok=True)
        if created_dir:
            shutil.rmtree(out, ignore_errors=True)
        raise


def _config(args):
    cfg = load_config(args.config)
    cfg = cfg.with_overrides(seed=args.seed)
    if getattr(args, "size", None) is not None:
        cfg = cfg.with_overrides(train_size=args.size)
    jobs = args.jobs if args.jobs is not None else default_jobs()
    return cfg.with_overrides(jobs=jobs, out_dir=args.out or cfg.out_dir)


def _manifest_digest(path):
    path = Path(path)
    if path.is_dir():
        path = path / "manifest.json"
    if not path.exists():
        raise FileNotFoundError(f"manifest not found: {path}")
    return digest_bytes(path.read_bytes())


def _check_digest(kind, found, expected):
    if found is not None and found != expected:
        raise CompatibilityError(f"{kind} was produced from dataset settings {found[:12]}..., "
                                 f"current config gives {expected[:12]}...")


def _load_manifest(args, cfg, load_states=True):
    ds = load_dataset(args.manifest, load_states=load_states)
    _check_digest("manifest", ds.data_digest, cfg.data_digest())
    return ds


def _load_checkpoint(args, cfg, manifest_digest=None):
    ckpt, doc = load_checkpoint(args.checkpoint)
    _check_digest("checkpoint", ckpt.metadata.get("data_digest"), cfg.data_digest())
    if manifest_digest is not None and doc.get("manifest_digest") not in (None, manifest_digest):
        raise CompatibilityError(f"checkpoint {args.checkpoint} was trained on a different manifest")
    return ckpt


def train_split(n_records, size, seed):
    """Seeded ``(train, held_out)`` index split used by ``train`` and ``eval``."""
    if not 1 <= size < n_records:
        raise UsageError(f"training size must be in [1, {n_records - 1}], got {size}")
    perm = np.random.default_rng(seed).permutation(n_records)
    return np.sort(perm[:size]), np.sort(perm[size:])


def _states(ds, indices):
    return ds.states_array(indices)


# ---------------------------------------------------------------------------
# commands


def cmd_gen(args):
    cfg = _config(args)
    g = cfg.grid
    t0 = time.perf_counter()
    ds = generate_dataset(N=cfg.N, h1_range=g.h1_range, h2_range=g.h2_range, shape=g.shape, seed=cfg.seed,
                          J=cfg.J, tau_s=cfg.tau_s, tau_a=cfg.tau_a, keep_states=cfg.caches_states,
                          jobs=cfg.jobs, config_digest=cfg.digest(), data_digest=cfg.data_digest())
    with output_files(cfg.out_dir) as track:
        track("manifest.json")
        if cfg.caches_states:
            track("states.bin")
        path = ds.write(cfg.out_dir, shards=cfg.caches_states)
        dump_config(cfg, track("config.yaml"), portable=True)
    counts = {p.name: int(np.sum(ds.labels == p)) for p in PhaseLabel}
    print(f"wrote {path} ({len(ds)} records, {time.perf_counter() - t0:.1f} s)")
    print("labels: " + ", ".join(f"{k}={v}" for k, v in counts.items()))
    i1 = int(np.argmin(np.abs(ds.h1_values - cfg.analysis.sweep_h1)))
    if ds.shape[1] >= 5:
        b = analysis.second_derivative_boundaries(ds.row_values(i1), ds.h2_values)
        print(f"boundaries at h1={ds.h1_values[i1]:.4f}: " + ", ".join(f"h2={x:.4f}" for x in b))
    print(f"config_digest={cfg.digest()}")
    return 0


def cmd_train(args):
    cfg = _config(args)
    mdigest = _manifest_digest(args.manifest)
    ds = _load_manifest(args, cfg)
    tr, te = train_split(len(ds), cfg.train_size, cfg.seed)
    ckpt, history = train(_states(ds, tr), ds.labels[tr], cfg.train, layers=cfg.layers)
    ckpt.metadata["config_digest"] = cfg.digest()
    ckpt.metadata["data_digest"] = cfg.data_digest()
    ckpt.metadata["train_indices"] = tr.tolist()
    with output_files(cfg.out_dir) as track:
        save_checkpoint(ckpt, track("checkpoint.json"), cfg.digest(), mdigest)
        analysis.write_csv(track("loss_history.csv"), ["epoch", "loss"], list(enumerate(history)), cfg.digest())
    print(f"trained on {tr.size} samples: loss {history[0]:.6f} -> {ckpt.metadata['final_loss']:.6f}")
    print(f"wrote {Path(cfg.out_dir) / 'checkpoint.json'}")
    return 0


def cmd_eval(args):
    cfg = _config(args)
    mdigest = _manifest_digest(args.manifest)
    ds = _load_manifest(args, cfg)
    ckpt = _load_checkpoint(args, cfg, mdigest)
    tr = np.asarray(ckpt.metadata.get("train_indices", []), dtype=int)
    held = np.setdiff1d(np.arange(len(ds)), tr)
    probs = predict_proba_array(_states(ds, held), ckpt)
    pred = probs.argmax(axis=1)
    truth = ds.labels[held]
    rows = []
    for k, p, pr in zip(held, pred, probs):
        r = ds.records[k]
        rows.append((int(k), r.h1, r.h2, r.label.name, PhaseLabel(int(p)).name, *pr))
    acc = float(np.mean(pred == truth))
    header = ["index", "h1", "h2", "label", "predicted", "p_AFM", "p_SPT", "p_PM"]
    with output_files(cfg.out_dir) as track:
        analysis.write_csv(track("predictions.csv"), header, rows, cfg.digest())
    print(f"held-out accuracy {acc:.4f} on {held.size} states")
    return 0


def cmd_attention(args):
    cfg = _config(args)
    ckpt = _load_checkpoint(args, cfg)
    energy, state, _ = ground_state(HamiltonianSpec(ckpt.n_qubits, args.h1, args.h2, cfg.J), seed=cfg.seed)
    label = label_point(string_order(state, ckpt.n_qubits), nn_xx(state, ckpt.n_qubits), cfg.tau_s, cfg.tau_a)
    if args.shots is None and not args.circuit:
        m = attention_of(state, ckpt)
    else:
        phi = apply_ansatz(StateVector(state.amplitudes.copy()), ckpt.ansatz)
        m = attention_circuit(phi, shots=args.shots, seed=cfg.seed)
    stem = f"attention_h1_{args.h1:g}_h2_{args.h2:g}"
    with output_files(cfg.out_dir) as track:
        m.to_csv(track(stem + ".csv"))
        m.to_json(track(stem + ".json"), h1=args.h1, h2=args.h2, label=label.name)
    off = m.q[~np.eye(m.n, dtype=bool)]
    print(f"{label.name} state, E={energy:.8f}; off-diagonal attention in [{off.min():.4f}, {off.max():.4f}]")
    return 0


def cmd_analyze(args):
    cfg = _config(args)
    ckpt = _load_checkpoint(args, cfg)
    a = cfg.analysis
    h1 = a.sweep_h1
    if args.manifest:
        ds = _load_manifest(args, cfg, load_states=False)
        h1 = analysis.nearest_grid_value(ds.h1_values, a.sweep_h1)
    h2_values = analysis.sweep_h2_values(a.sweep_h2_range[0], a.sweep_h2_range[1], a.sweep_h2_step)
    points = analysis.attention_sweep(ckpt, h1, h2_values, seed=cfg.seed, tau_s=cfg.tau_s, tau_a=cfg.tau_a)
    bounds = analysis.sweep_boundaries(points)
    cvals = [p.contrast.C if p.contrast else np.nan for p in points]
    crossings = analysis.sign_crossings(h2_values, cvals)
    with output_files(cfg.out_dir) as track:
        analysis.write_csv(track("contrast.csv"), analysis.CONTRAST_HEADER, analysis.contrast_rows(points),
                           cfg.digest())
        analysis.write_csv(track("xi.csv"), analysis.XI_HEADER, analysis.xi_rows(points), cfg.digest())
        rows = [("boundary", h1, b) for b in bounds] + [("contrast_sign_change", h1, c) for c in crossings]
        analysis.write_csv(track("sweep_markers.csv"), ["kind", "h1", "h2"], rows, cfg.digest())
    print(f"h1={h1:.4f}: energy-curvature boundaries {np.round(bounds, 4).tolist()}, "
          f"contrast sign changes {np.round(crossings, 4).tolist()}")
    for target in a.representative_h2:
        p = points[int(np.argmin(np.abs(h2_values - target)))]
        if p.profile is not None:
            flag = " (non-decaying)" if p.profile.non_decaying else ""
            print(f"  h2={p.h2:+.2f} {p.label.name}: xi={p.profile.xi:.4g}{flag}")
    return 0


def cmd_phase_diagram(args):
    cfg = _config(args)
    ds = _load_manifest(args, cfg, load_states=False)
    grid, bounds = analysis.phase_diagram(ds)
    with output_files(cfg.out_dir) as track:
        analysis.write_csv(track("phase_diagram.csv"), ["h1", "h2", "string_order", "label"], grid, cfg.digest())
        analysis.write_csv(track("boundaries.csv"), ["h1", "h2", "branch"], bounds, cfg.digest())
    print(f"wrote {len(grid)} grid rows and {len(bounds)} boundary points")
    return 0


def cmd_accuracy_curve(args):
    cfg = _config(args)
    ds = _load_manifest(args, cfg)
    a = cfg.analysis
    sizes = [args.size] if args.size is not None else list(a.accuracy_sizes)
    rows = analysis.accuracy_experiment(ds, sizes, repeats=a.accuracy_repeats, seed=cfg.seed, config=cfg.train,
                                        layers=cfg.layers)
    with output_files(cfg.out_dir) as track:
        analysis.write_csv(track("accuracy.csv"), analysis.ACCURACY_HEADER, analysis.accuracy_rows(rows),
                           cfg.digest())
    for r in rows:
        print(f"size {r.size:4d}: {r.mean:.4f} +/- {r.ci_half_width:.4f} (std {r.std:.4f}, "
              f"{len(r.accuracies)} ok, {r.failures} failed)")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser():
    parser = argparse.ArgumentParser(prog="qattention", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_, manifest=False, checkpoint=False, size=False):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="YAML run config (defaults built in)")
        p.add_argument("--seed", type=int, help="override the run seed")
        p.add_argument("--out", help="output directory (default: config out_dir)")
        p.add_argument("--jobs", type=int, help="worker processes (default: $QATTENTION_JOBS or 1)")
        if manifest is not None:
            p.add_argument("--manifest", required=manifest is True, help="dataset directory or manifest.json")
        if checkpoint:
            p.add_argument("--checkpoint", required=True, help="checkpoint.json from `train`")
        if size:
            p.add_argument("--size", type=int, help="training-set size")
        p.set_defaults(func=func)
        return p

    add("gen", cmd_gen, "generate the labelled ground-state dataset", manifest=None)
    add("train", cmd_train, "train the swap-attention classifier", manifest=True, size=True)
    add("eval", cmd_eval, "score a checkpoint on the held-out records", manifest=True, checkpoint=True)
    p = add("attention", cmd_attention, "attention heatmap of one ground state", manifest=None, checkpoint=True)
    p.add_argument("--h1", type=float, required=True)
    p.add_argument("--h2", type=float, required=True)
    p.add_argument("--shots", type=int, help="sample each swap test with this many shots")
    p.add_argument("--circuit", action="store_true", help="use the ancilla circuit even without shots")
    add("analyze", cmd_analyze, "contrast and correlation-length sweep at fixed h1", manifest=False,
        checkpoint=True)
    add("phase-diagram", cmd_phase_diagram, "string-order grid and boundary polylines", manifest=True)
    add("accuracy-curve", cmd_accuracy_curve, "accuracy versus training-set size", manifest=True, size=True)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "shots", None) is not None and args.shots < 1:
        parser.error("--shots must be positive")
    try:
        return args.func(args)
    except QAttentionError as exc:
        print(f"qattention: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (FileNotFoundError, PermissionError, IsADirectoryError) as exc:
        print(f"qattention: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"qattention: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"qattention: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
