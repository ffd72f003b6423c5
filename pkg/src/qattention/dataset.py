"""Labelled ground-state datasets over an (h1, h2) grid, with manifest and shard I/O.

Manifest: one JSON document describing the grid and every record.
Shards: one binary file of little-endian float64 ``(real, imag)`` pairs,
``2**N`` complex amplitudes per record, located by ``shard_offset`` (bytes)
and validated against the squared norm stored in the manifest.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CompatibilityError, ConvergenceError, GridError, NumericalHealthError, StorageError
from .hamiltonian import HamiltonianSpec, PhaseLabel, ground_state, label_point, nn_xx, string_order
from .statevec import StateVector

SCHEMA_VERSION = 1
MANIFEST_KIND = "qattention.manifest"
SHARD_DTYPE = np.dtype("<c16")


@dataclass
class GroundStateRecord:
    index: int
    h1: float
    h2: float
    energy: float
    gap: float
    string_order: float
    nn_xx: float
    label: PhaseLabel
    seed: int
    state: StateVector | None = field(default=None, repr=False)
    norm: float | None = None
    shard_offset: int | None = None

    def spec(self, N, J=1.0):
        return HamiltonianSpec(N, self.h1, self.h2, J)

    def row(self):
        return {
            "index": self.index,
            "h1": self.h1,
            "h2": self.h2,
            "label": self.label.name,
            "string_order": self.string_order,
            "nn_xx": self.nn_xx,
            "energy": self.energy,
            "gap": self.gap,
            "seed": self.seed,
            "norm": self.norm,
            "shard_offset": self.shard_offset,
        }


def record_seed(seed, index):
    return int(np.random.SeedSequence([seed, index]).generate_state(1, dtype=np.uint32)[0])


def solve_point(N, h1, h2, seed, J=1.0, tau_s=0.5, tau_a=0.3, index=0):
    """Ground state and observables for one grid point."""
    spec = HamiltonianSpec(N, float(h1), float(h2), J)
    try:
        energy, state, gap = ground_state(spec, seed=seed)
    except ConvergenceError as exc:
        raise ConvergenceError(f"ground state failed at h1={h1!r}, h2={h2!r}: {exc}", exc.residual) from exc
    s_val = string_order(state, N)
    x_val = nn_xx(state, N)
    return GroundStateRecord(
        index=index,
        h1=float(h1),
        h2=float(h2),
        energy=energy,
        gap=gap,
        string_order=s_val,
        nn_xx=x_val,
        label=label_point(s_val, x_val, tau_s, tau_a),
        seed=seed,
        state=state,
        norm=float(np.sum(np.abs(state.amplitudes) ** 2)),
    )


def _solve_task(args):
    return solve_point(*args)


@dataclass
class Dataset:
    N: int
    h1_values: np.ndarray
    h2_values: np.ndarray
    seed: int
    records: list
    J: float = 1.0
    tau_s: float = 0.5
    tau_a: float = 0.3
    config_digest: str | None = None
    grid: dict | None = None
    data_digest: str | None = None

    def __len__(self):
        return len(self.records)

    @property
    def labels(self):
        return np.array([int(r.label) for r in self.records], dtype=np.int64)

    @property
    def shape(self):
        return (len(self.h1_values), len(self.h2_values))

    def state(self, k):
        """StateVector of record ``k``; regenerated from (spec, seed) when not cached."""
        rec = self.records[k]
        if rec.state is None:
            _, state, _ = ground_state(rec.spec(self.N, self.J), seed=rec.seed)
            return state
        return rec.state

    def states_array(self, indices=None):
        indices = range(len(self.records)) if indices is None else indices
        return np.stack([self.state(int(k)).amplitudes for k in indices])

    def row_values(self, h1_index, key="energy"):
        n2 = len(self.h2_values)
        return np.array([getattr(r, key) for r in self.records[h1_index * n2 : (h1_index + 1) * n2]])

    def manifest(self, shard_file=None):
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": MANIFEST_KIND,
            "config_digest": self.config_digest,
            "data_digest": self.data_digest,
            "N": self.N,
            "J": self.J,
            "grid": self.grid or grid_spec_from_values(self.h1_values, self.h2_values),
            "seed": self.seed,
            "thresholds": {"tau_s": self.tau_s, "tau_a": self.tau_a},
            "shard_file": shard_file,
            "records": [r.row() for r in self.records],
        }

    def write(self, out_dir, shards=False, name="manifest.json"):
        """Write the manifest (and optional shard file); returns the manifest path."""
        out = Path(out_dir)
        try:
            out.mkdir(parents=True, exist_ok=True)
            shard_file = None
            if shards:
                shard_file = "states.bin"
                offset = 0
                with open(out / shard_file, "wb") as fh:
                    for k, rec in enumerate(self.records):
                        data = self.state(k).amplitudes.astype(SHARD_DTYPE).tobytes()
                        fh.write(data)
                        rec.shard_offset = offset
                        offset += len(data)
            path = out / name
            with open(path, "w") as fh:
                fh.write(manifest_text(self.manifest(shard_file)))
        except OSError as exc:
            raise StorageError(f"cannot write dataset to {out}: {exc}") from exc
        return path


def manifest_text(doc):
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def digest_bytes(data):
    return hashlib.sha256(data).hexdigest()


def grid_spec_from_values(h1_values, h2_values):
    return {
        "h1": [float(h1_values[0]), float(h1_values[-1]), len(h1_values)],
        "h2": [float(h2_values[0]), float(h2_values[-1]), len(h2_values)],
    }


def generate_dataset(N=9, h1_range=(0.0, 1.6), h2_range=(-1.6, 1.6), shape=(50, 50), seed=0,
                     n_samples=None, J=1.0, tau_s=0.5, tau_a=0.3, keep_states=True, jobs=1,
                     config_digest=None, data_digest=None):
    """Solve and label every point of an ``shape[0] x shape[1]`` grid.

    Records are ordered h1-major (``index = i1 * shape[1] + i2``); each
    carries a seed derived from ``(seed, index)`` so any single record can
    be regenerated alone. Statevectors are kept in memory only when
    ``keep_states``.
    """
    n1, n2 = shape
    if n1 < 1 or n2 < 1:
        raise GridError(f"grid shape must be positive, got {shape}")
    if n_samples is not None and n1 * n2 != n_samples:
        raise GridError(f"grid {n1}x{n2} gives {n1 * n2} points, requested {n_samples}")
    h1_values = np.linspace(h1_range[0], h1_range[1], n1)
    h2_values = np.linspace(h2_range[0], h2_range[1], n2)
    tasks = []
    for i1, h1 in enumerate(h1_values):
        for i2, h2 in enumerate(h2_values):
            k = i1 * n2 + i2
            tasks.append((N, float(h1), float(h2), record_seed(seed, k), J, tau_s, tau_a, k))

    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_solve_task, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        records = [_solve_task(t) for t in tasks]
    if not keep_states:
        for r in records:
            r.state = None
    return Dataset(N=N, h1_values=h1_values, h2_values=h2_values, seed=seed, records=records, J=J,
                   tau_s=tau_s, tau_a=tau_a, config_digest=config_digest, data_digest=data_digest,
                   grid={"h1": [float(h1_range[0]), float(h1_range[1]), n1],
                         "h2": [float(h2_range[0]), float(h2_range[1]), n2]})


def load_dataset(path, load_states=True):
    """Read a manifest (and its shard file, if any) back into a Dataset."""
    path = Path(path)
    if path.is_dir():
        path = path / "manifest.json"
    if not path.exists():
        raise FileNotFoundError(f"manifest not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise StorageError(f"cannot read manifest {path}: {exc}") from exc
    if doc.get("kind") != MANIFEST_KIND or doc.get("schema_version") != SCHEMA_VERSION:
        raise CompatibilityError(
            f"{path} is not a schema-{SCHEMA_VERSION} manifest (found {doc.get('kind')}, "
            f"version {doc.get('schema_version')})"
        )
    N = int(doc["N"])
    g1, g2 = doc["grid"]["h1"], doc["grid"]["h2"]
    shard = doc.get("shard_file")
    blob = None
    if shard and load_states:
        blob = np.fromfile(path.parent / shard, dtype=SHARD_DTYPE)
    dim = 1 << N
    records = []
    for row in doc["records"]:
        state = None
        if blob is not None:
            start = row["shard_offset"] // SHARD_DTYPE.itemsize
            amps = blob[start : start + dim].astype(np.complex128)
            if amps.size != dim:
                raise StorageError(f"shard truncated at record {row['index']}")
            norm = float(np.sum(np.abs(amps) ** 2))
            if abs(norm - row["norm"]) > 1e-12:
                raise NumericalHealthError(f"shard checksum mismatch at record {row['index']}")
            state = StateVector(amps)
        records.append(GroundStateRecord(
            index=row["index"], h1=row["h1"], h2=row["h2"], energy=row["energy"], gap=row["gap"],
            string_order=row["string_order"], nn_xx=row["nn_xx"], label=PhaseLabel[row["label"]],
            seed=row["seed"], state=state, norm=row["norm"], shard_offset=row["shard_offset"],
        ))
    return Dataset(
        N=N, h1_values=np.linspace(g1[0], g1[1], g1[2]), h2_values=np.linspace(g2[0], g2[1], g2[2]),
        seed=doc["seed"], records=records, J=doc["J"], tau_s=doc["thresholds"]["tau_s"],
        tau_a=doc["thresholds"]["tau_a"], config_digest=doc.get("config_digest"),
        grid=doc["grid"], data_digest=doc.get("data_digest"),
    )


def default_jobs():
    try:
        return max(1, int(os.environ.get("QATTENTION_JOBS", "1")))
    except ValueError:
        return 1
