"""Time-series output for wave-packet runs."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Optional

import numpy as np

from .. import __version__
from ..channelspace import channel_labels
from ..timedep import (
    configuration_probabilities,
    discretize_hamiltonian,
    energy,
    initial_state,
    trajectory,
)
from . import config as cfgmod

MAX_CHANNEL_COLUMNS = 6


def run_propagation(cfg: dict):
    """Run the wave-packet simulation described by ``cfg``.

    Yields ``(state, record)`` per sample, where ``record`` maps the
    time-series column names to values.
    """
    det = cfgmod.detector(cfg, required=False)
    grid = cfgmod.grid(cfg)
    pkt = cfgmod.packet(cfg)
    prop = cfgmod.propagation(cfg)
    n_spins = det.n_spins if det is not None else 0
    H = discretize_hamiltonian(det, grid)
    state = initial_state(pkt, grid, n_spins)
    n_samples = prop["steps"] // prop["sample_every"]
    show_channels = n_spins <= MAX_CHANNEL_COLUMNS
    for st in trajectory(state, H, prop["dt"], n_samples, prop["sample_every"],
                         prop["tol"], prop["method"]):
        probs = configuration_probabilities(st)
        record = {"t": st.t, "norm": st.norm(), "energy": energy(st, H)}
        if show_channels:
            record.update(zip((f"P_{b}" for b in channel_labels(n_spins)), probs.P_c))
        record.update((f"P_w{w}", p) for w, p in enumerate(probs.P_w))
        yield st, record


def write_series(cfg: dict, out: Optional[Path]) -> list[dict]:
    """Run and write the time series (and optional snapshots) next to ``out``."""
    prop = cfgmod.propagation(cfg)
    snap_every = prop["snapshot_every"]
    records = []
    handle = open(out, "w", newline="") if out is not None else None
    try:
        writer = None
        for i, (st, rec) in enumerate(run_propagation(cfg)):
            records.append(rec)
            if handle is None:
                continue
            if writer is None:
                handle.write(f"# cloudchamber {__version__} propagate\n")
                writer = csv.writer(handle, lineterminator="\n")
                writer.writerow(list(rec))
            writer.writerow([repr(float(v)) for v in rec.values()])
            if snap_every and i % snap_every == 0:
                write_snapshot(st, Path(out), i)
    finally:
        if handle is not None:
            handle.close()
    return records


def write_snapshot(state, out: Path, index: int) -> Path:
    """Columnar |psi_c(x)|^2 dump: x then one column per channel."""
    path = out.with_name(f"{out.stem}_snap{index:05d}.dat")
    labels = channel_labels(state.n_spins)
    data = np.column_stack([state.grid.x, (np.abs(state.psi) ** 2).T])
    header = f"t = {state.t!r}\nx " + " ".join(f"|psi_{b}|^2" for b in labels)
    np.savetxt(path, data, header=header, fmt="%.10e")
    return path
