"""Separation and orientation sweeps, CSV/image emission and plots."""

from __future__ import annotations

import csv
import io
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .classical import MODALITIES, fisher_for_modalities
from .config import DipoleOrientation, OpticalConfig
from .imaging import (
    CHANNELS,
    channel_powers,
    image_filename,
    source_images,
    write_csv_matrix,
    write_pfm,
)
from .quantum import quantum_fisher

log = logging.getLogger(__name__)

WORKERS_ENV = "DIPOLEBOUNDS_WORKERS"
ALL_MODALITIES = tuple(MODALITIES)
POLAR_STEP = math.pi / 12


def snap_separation(separation: float, pitch: float) -> float:
    """Round ``separation`` to the nearest multiple of the image pixel pitch."""
    return float(round(separation / pitch) * pitch)


def polar_orientations(step: float = POLAR_STEP) -> list[DipoleOrientation]:
    n = int(round((math.pi / 2) / step))
    angles = [k * step for k in range(n + 1)]
    return [DipoleOrientation(t, p) for t in angles for p in angles]


@dataclass
class SweepSpec:
    cfg: OpticalConfig
    separations: tuple = ()
    modalities: tuple = ALL_MODALITIES
    orientations: tuple = ()
    isotropic: bool = False
    snap: bool = False
    output_dir: Path | None = None
    workers: int | None = None
    png: bool = False

    def validate(self) -> None:
        if not self.modalities:
            raise ValueError("at least one modality is required")
        bad = [m for m in self.modalities if m not in MODALITIES]
        if bad:
            raise ValueError(f"unknown modalities: {', '.join(bad)}")
        if not self.separations:
            raise ValueError("separation list is empty")
        if any(not math.isfinite(l) or l < 0 for l in self.separations):
            raise ValueError("separations must be finite and nonnegative")
        if not self.orientations and not self.isotropic:
            raise ValueError("no orientation selected")

    def sources(self) -> list:
        out = list(self.orientations)
        if self.isotropic:
            out.append("isotropic")
        return out

    def effective_separations(self) -> list[float]:
        if not self.snap:
            return [float(l) for l in self.separations]
        out = []
        for l in self.separations:
            s = snap_separation(l, self.cfg.image_pixel_object_nm)
            if s != l:
                log.info("separation %g nm snapped to %g nm", l, s)
            out.append(s)
        return out


@dataclass
class BoundCurve:
    """Bound rows for one source; sigma values are per-photon (sigma * sqrt(N), nm)."""

    source: object
    modalities: tuple
    rows: list = field(default_factory=list)

    def channels(self) -> list[str]:
        seen = []
        for m in self.modalities:
            for c in MODALITIES[m][1]:
                if c not in seen:
                    seen.append(c)
        return seen

    def header(self) -> list[str]:
        return (
            ["l_nm", "qcrb_sigma_sqrtN_nm"]
            + [f"crb_sigma_sqrtN_nm_{m}" for m in self.modalities]
            + [f"fi_per_photon_nm2_{c}" for c in self.channels()]
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header())
        for row in self.rows:
            w.writerow([_fmt(row[h]) for h in self.header()])
        return buf.getvalue()


def _fmt(v: float) -> str:
    if math.isinf(v):
        return "inf"
    return f"{v:.12g}"


def _sigma(info: float) -> float:
    return math.inf if info <= 0 else 1.0 / math.sqrt(info)


def evaluate_point(cfg: OpticalConfig, source, separation: float, modalities) -> dict:
    """QFI and classical FI breakdown at one (source, l); pure function."""
    qfi = quantum_fisher(cfg, source, separation)
    fis = fisher_for_modalities(cfg, source, separation, modalities)
    row = {"l_nm": separation, "qfi": qfi, "qcrb_sigma_sqrtN_nm": _sigma(qfi)}
    for m, fb in fis.items():
        row[f"fi_{m}"] = fb.total
        row[f"crb_sigma_sqrtN_nm_{m}"] = _sigma(fb.total)
        for c, v in fb.per_channel.items():
            row[f"fi_per_photon_nm2_{c}"] = v
    return row


def _eval_star(args):
    return evaluate_point(*args)


def worker_count(requested: int | None = None) -> int:
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get(WORKERS_ENV)
    return max(1, int(env)) if env else 1


def _map(tasks, workers: int) -> list:
    """Evaluate tasks in input order, optionally in a process pool."""
    if workers <= 1 or len(tasks) <= 1:
        return [_eval_star(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_eval_star, tasks))


def compute_curves(spec: SweepSpec) -> list[BoundCurve]:
    spec.validate()
    seps = spec.effective_separations()
    mods = tuple(spec.modalities)
    tasks = [(spec.cfg, s, l, mods) for s in spec.sources() for l in seps]
    results = _map(tasks, worker_count(spec.workers))
    curves = []
    for i, s in enumerate(spec.sources()):
        curves.append(BoundCurve(s, mods, results[i * len(seps) : (i + 1) * len(seps)]))
    return curves


def source_tag(source) -> str:
    if isinstance(source, DipoleOrientation):
        return f"theta{source.theta:.6f}_phi{source.phi:.6f}"
    return str(source)


class _Outputs:
    """Tracks files written by a command so a failure leaves nothing behind."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.written: list[Path] = []

    def __enter__(self):
        self.root.mkdir(parents=True, exist_ok=True)
        return self

    def path(self, name: str) -> Path:
        p = self.root / name
        self.written.append(p)
        return p

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None:
            for p in self.written:
                try:
                    p.unlink()
                except FileNotFoundError:
                    pass
        return False


def run_sweep(spec: SweepSpec) -> list[Path]:
    """Compute bound curves and write one CSV and one SVG per source."""
    if spec.output_dir is None:
        raise ValueError("output_dir is required")
    curves = compute_curves(spec)
    with _Outputs(spec.output_dir) as out:
        for curve in curves:
            tag = source_tag(curve.source)
            out.path(f"bounds_{tag}.csv").write_text(curve.to_csv())
            plot_bound_curve(curve, out.path(f"bounds_{tag}.svg"))
        return list(out.written)


# -- polar maps -------------------------------------------------------------


def polar_ratio_table(spec: SweepSpec, separation: float = 10.0) -> list[dict]:
    """sigma_CRB / sigma_QCRB over the orientation grid at one separation."""
    l = snap_separation(separation, spec.cfg.image_pixel_object_nm) if spec.snap else separation
    orients = list(spec.orientations) or polar_orientations()
    unique = list(dict.fromkeys(orients))
    mods = tuple(spec.modalities)
    results = _map([(spec.cfg, o, l, mods) for o in unique], worker_count(spec.workers))
    by_orient = dict(zip(unique, results))
    table = []
    for o in orients:
        row = by_orient[o]
        entry = {"theta": o.theta, "phi": o.phi, "l_nm": l}
        for m in mods:
            fi = row[f"fi_{m}"]
            entry[m] = math.inf if fi <= 0 else math.sqrt(row["qfi"] / fi)
        table.append(entry)
    return table


def run_polar_map(spec: SweepSpec, separation: float = 10.0) -> list[Path]:
    if spec.output_dir is None:
        raise ValueError("output_dir is required")
    if not spec.modalities:
        raise ValueError("at least one modality is required")
    table = polar_ratio_table(spec, separation)
    mods = list(spec.modalities)
    with _Outputs(spec.output_dir) as out:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["theta_rad", "phi_rad", "l_nm"] + [f"ratio_{m}" for m in mods])
        for e in table:
            w.writerow([_fmt(e["theta"]), _fmt(e["phi"]), _fmt(e["l_nm"])] + [_fmt(e[m]) for m in mods])
        out.path("polar_ratios.csv").write_text(buf.getvalue())
        for m in mods:
            plot_polar_map(table, m, out.path(f"polar_{m}.svg"))
        return list(out.written)


# -- images -----------------------------------------------------------------


def render_images(spec: SweepSpec) -> list[Path]:
    """Write every channel image (PFM, CSV, optional PNG) at one (source, l)."""
    spec.validate()
    sources = spec.sources()
    seps = spec.effective_separations()
    if len(sources) != 1 or len(seps) != 1:
        raise ValueError("images needs exactly one source and one separation")
    if spec.output_dir is None:
        raise ValueError("output_dir is required")
    source, l = sources[0], seps[0]
    image_mods = list(dict.fromkeys(MODALITIES[m][0] for m in spec.modalities))
    with _Outputs(spec.output_dir) as out:
        summary = io.StringIO()
        w = csv.writer(summary, lineterminator="\n")
        w.writerow(["modality", "channel", "power_fraction"])
        for mod in image_mods:
            pairs = source_images(spec.cfg, source, l, mod)
            for label, power in channel_powers(pairs).items():
                w.writerow([mod, label, _fmt(power)])
            for p in pairs:
                write_pfm(out.path(image_filename(mod, p.label, source, l, "pfm")), p.density)
                write_csv_matrix(out.path(image_filename(mod, p.label, source, l, "csv")), p.density)
                if spec.png:
                    save_png_preview(p.density, out.path(image_filename(mod, p.label, source, l, "png")))
        out.path(f"channel_powers_{source_tag(source)}_l{l:.4f}nm.csv").write_text(summary.getvalue())
        return list(out.written)


# -- plotting ---------------------------------------------------------------


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "dipolebounds"
    return plt


def plot_bound_curve(curve: BoundCurve, path) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 4))
    l = np.array([r["l_nm"] for r in curve.rows])
    q = np.array([r["qcrb_sigma_sqrtN_nm"] for r in curve.rows])
    ax.fill_between(l, 0, q, color="0.85", label="QCRB")
    for m in curve.modalities:
        ax.plot(l, [r[f"crb_sigma_sqrtN_nm_{m}"] for r in curve.rows], label=m)
    ax.set_xlabel("separation l (nm)")
    ax.set_ylabel(r"$\sigma\sqrt{N}$ (nm)")
    ax.set_yscale("log")
    ax.legend(fontsize=7)
    ax.set_title(source_tag(curve.source), fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_polar_map(table, modality: str, path) -> None:
    """Polar heat map: radius = theta, angle = phi, colour = log10 ratio."""
    plt = _pyplot()
    fig = plt.figure(figsize=(4, 4))
    ax = fig.add_subplot(projection="polar")
    th = np.array([e["theta"] for e in table])
    ph = np.array([e["phi"] for e in table])
    val = np.log10(np.clip([e[modality] for e in table], 1e-3, 1e6))
    sc = ax.scatter(ph, th, c=val, cmap="viridis", s=60, vmin=0, vmax=2)
    ax.set_thetamin(0)
    ax.set_thetamax(90)
    ax.set_rmax(math.pi / 2)
    fig.colorbar(sc, ax=ax, label=r"log$_{10}$ $\sigma_{CRB}/\sigma_{QCRB}$", shrink=0.7)
    ax.set_title(modality, fontsize=9)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def save_png_preview(density, path) -> None:
    """Linear grey-scale preview: 0 maps to black, the image maximum to white."""
    plt = _pyplot()
    d = np.asarray(density, dtype=float)
    top = d.max()
    scaled = d / top if top > 0 else d
    plt.imsave(path, scaled, cmap="gray", vmin=0.0, vmax=1.0, origin="lower")
