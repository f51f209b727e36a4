"""Command-line entry point: ``dipolebounds {sweep,polar-map,images,validate}``."""

from __future__ import annotations

import argparse
import logging
import math
import re
import sys
from pathlib import Path

from .config import DipoleOrientation, make_config, read_config_file
from .sweep import ALL_MODALITIES, SweepSpec, render_images, run_polar_map, run_sweep
from .validation import run_validation

_PI_RE = re.compile(r"^\s*(?:([0-9.]+)\s*\*?\s*)?pi\s*(?:/\s*([0-9.]+))?\s*$")


def parse_angle(text: str) -> float:
    """Radians from ``"1.2"``, ``"pi/3"``, ``"2*pi/3"`` or ``"pi"``."""
    m = _PI_RE.match(text)
    if m:
        num = float(m.group(1)) if m.group(1) else 1.0
        den = float(m.group(2)) if m.group(2) else 1.0
        return num * math.pi / den
    return float(text)


def parse_orientation(text: str) -> DipoleOrientation:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("orientation must be THETA,PHI")
    return DipoleOrientation(parse_angle(parts[0]), parse_angle(parts[1]))


def parse_separations(text: str) -> list[float]:
    """Comma list of values or inclusive ``start:stop:step`` ranges."""
    out = []
    for item in filter(None, (s.strip() for s in text.split(","))):
        if ":" in item:
            start, stop, step = (float(v) for v in item.split(":"))
            if step <= 0:
                raise argparse.ArgumentTypeError("range step must be positive")
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            out.extend(start + k * step for k in range(n))
        else:
            out.append(float(item))
    return out


def parse_modalities(text: str) -> list[str]:
    mods = [m.strip() for m in text.split(",") if m.strip()]
    bad = [m for m in mods if m not in ALL_MODALITIES]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown modality {bad[0]!r}; choose from {', '.join(ALL_MODALITIES)}")
    return mods


def _optics_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("optics")
    g.add_argument("--profile", choices=["full", "desk"], default=None, help="base parameter set (default desk)")
    g.add_argument("--config", type=Path, help="key = value file of OpticalConfig fields")
    g.add_argument("--na", dest="numerical_aperture", type=float)
    g.add_argument("--index", dest="immersion_index", type=float)
    g.add_argument("--wavelength", dest="vacuum_wavelength", type=float, help="vacuum wavelength, nm")
    g.add_argument("--magnification", type=float)
    g.add_argument("--grid", dest="pupil_grid_side", type=int, help="odd pupil samples per side")
    g.add_argument("--fill", dest="support_fill", type=float)
    g.add_argument("--pixel", dest="image_pixel_object_nm", type=float, help="image pixel in object space, nm")
    g.add_argument("--fov", dest="image_fov_nm", type=float, help="image field of view, nm")
    g.add_argument("--zernike-order", type=int)


def _source_args(p: argparse.ArgumentParser, required=True) -> None:
    p.add_argument("--orientation", action="append", type=parse_orientation, default=[],
                   metavar="THETA,PHI", help="dipole angles in rad, e.g. pi/2,0 (repeatable)")
    p.add_argument("--isotropic", action="store_true", help="include an isotropic emitter pair")


def _common(p: argparse.ArgumentParser, snap_default: bool) -> None:
    p.add_argument("--modalities", type=parse_modalities, default=list(ALL_MODALITIES))
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.add_argument("--workers", type=int, default=None, help="worker processes (else $DIPOLEBOUNDS_WORKERS)")
    p.add_argument("--snap", action=argparse.BooleanOptionalAction, default=snap_default,
                   help="round separations to the image pixel lattice")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dipolebounds",
        description="Quantum and classical separation bounds for two dipole emitters.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="bounds versus separation")
    _optics_args(p)
    _source_args(p)
    _common(p, snap_default=False)
    p.add_argument("--separations", type=parse_separations, required=True,
                   help="nm; comma list and/or start:stop:step")

    p = sub.add_parser("polar-map", help="CRB/QCRB ratio over orientation space")
    _optics_args(p)
    p.add_argument("--orientation", action="append", type=parse_orientation, default=[],
                   metavar="THETA,PHI", help="explicit orientations (default: pi/12 polar grid)")
    _common(p, snap_default=True)
    p.add_argument("--separation", type=float, default=10.0, help="nm (default 10)")

    p = sub.add_parser("images", help="write detector images for one point")
    _optics_args(p)
    _source_args(p)
    _common(p, snap_default=True)
    p.add_argument("--separation", type=float, default=10.0, help="nm (default 10)")
    p.add_argument("--png", action="store_true", help="also write linear-scaled PNG previews")

    p = sub.add_parser("validate", help="run the oracle and invariant checks")
    _optics_args(p)
    return parser


def config_from_args(args):
    from_file = read_config_file(args.config) if getattr(args, "config", None) else {}
    profile = args.profile or from_file.pop("profile", None) or "desk"
    from_file.pop("profile", None)
    keys = (
        "numerical_aperture", "immersion_index", "vacuum_wavelength", "magnification",
        "pupil_grid_side", "support_fill", "image_pixel_object_nm", "image_fov_nm", "zernike_order",
    )
    overrides = dict(from_file)
    overrides.update({k: getattr(args, k) for k in keys if getattr(args, k, None) is not None})
    return make_config(profile, **overrides)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "validate":
            if args.profile is None and args.pupil_grid_side is None and args.config is None:
                from .validation import SMALL

                cfg = SMALL
            else:
                cfg = config_from_args(args)
            failed = 0
            for name, ok, detail in run_validation(cfg):
                print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
                failed += not ok
            return 1 if failed else 0

        cfg = config_from_args(args)
        if args.command == "sweep":
            spec = SweepSpec(cfg, tuple(args.separations), tuple(args.modalities), tuple(args.orientation),
                             args.isotropic, args.snap, args.out, args.workers)
            written = run_sweep(spec)
        elif args.command == "polar-map":
            spec = SweepSpec(cfg, (args.separation,), tuple(args.modalities), tuple(args.orientation),
                             False, args.snap, args.out, args.workers)
            written = run_polar_map(spec, args.separation)
        else:
            spec = SweepSpec(cfg, (args.separation,), tuple(args.modalities), tuple(args.orientation),
                             args.isotropic, args.snap, args.out, args.workers, png=args.png)
            written = render_images(spec)
    except (ValueError, OSError) as exc:
        print(f"dipolebounds: error: {exc}", file=sys.stderr)
        return 2
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
