import argparse
import csv
import math

import pytest

from dipolebounds import cli, sweep
from dipolebounds.config import X_DIPOLE, Z_DIPOLE, DipoleOrientation
from dipolebounds.imaging import read_pfm
from dipolebounds.sweep import (
    SweepSpec,
    compute_curves,
    polar_orientations,
    polar_ratio_table,
    run_sweep,
    snap_separation,
    worker_count,
)

FAST = ["--grid", "65", "--fov", "2000"]


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_parse_angle():
    assert cli.parse_angle("pi/3") == pytest.approx(math.pi / 3)
    assert cli.parse_angle("2*pi/3") == pytest.approx(2 * math.pi / 3)
    assert cli.parse_angle("pi") == pytest.approx(math.pi)
    assert cli.parse_angle("0.25") == 0.25


def test_parse_orientation_and_separations():
    assert cli.parse_orientation("pi/2,0") == X_DIPOLE
    assert cli.parse_orientation("0,1.0") == Z_DIPOLE
    with pytest.raises(argparse.ArgumentTypeError):
        cli.parse_orientation("1,2,3")
    assert cli.parse_separations("1,2:4:1,10") == [1.0, 2.0, 3.0, 4.0, 10.0]
    assert cli.parse_separations("0:1:0.25") == [0.0, 0.25, 0.5, 0.75, 1.0]
    with pytest.raises(argparse.ArgumentTypeError):
        cli.parse_separations("0:5:0")
    with pytest.raises(argparse.ArgumentTypeError):
        cli.parse_modalities("iii,confocal")


def test_snapping():
    assert snap_separation(10.0, 5.0) == 10.0
    assert snap_separation(8.99, 5.0) == 10.0
    assert snap_separation(12.4, 5.0) == 10.0
    assert snap_separation(1.0, 5.0) == 0.0


def test_polar_grid():
    o = polar_orientations()
    assert len(o) == 49
    assert len(set(o)) == 43  # the Theta = 0 row collapses to one orientation


def test_worker_count(monkeypatch):
    monkeypatch.delenv(sweep.WORKERS_ENV, raising=False)
    assert worker_count() == 1
    monkeypatch.setenv(sweep.WORKERS_ENV, "3")
    assert worker_count() == 3
    assert worker_count(2) == 2


def test_spec_validation(tiny, tmp_path):
    with pytest.raises(ValueError, match="empty"):
        SweepSpec(tiny, (), orientations=(X_DIPOLE,), output_dir=tmp_path).validate()
    with pytest.raises(ValueError):
        SweepSpec(tiny, (5.0,), modalities=(), orientations=(X_DIPOLE,)).validate()
    with pytest.raises(ValueError):
        SweepSpec(tiny, (-1.0,), orientations=(X_DIPOLE,)).validate()
    with pytest.raises(ValueError):
        SweepSpec(tiny, (5.0,)).validate()


def test_cli_empty_separations_exit_code(tmp_path, capsys):
    code = cli.main(["sweep", *FAST, "--orientation", "pi/2,0", "--separations", "", "--out", str(tmp_path)])
    assert code == 2
    assert "separation" in capsys.readouterr().err
    assert list(tmp_path.iterdir()) == []


def test_sweep_csv_schema_and_ordering(tmp_path, capsys):
    args = ["sweep", *FAST, "--orientation", "pi/2,0", "--separations", "20,5,10",
            "--modalities", "direct,iii", "--out", str(tmp_path)]
    assert cli.main(args) == 0
    csv_path = tmp_path / "bounds_theta1.570796_phi0.000000.csv"
    assert csv_path.exists() and csv_path.with_suffix(".svg").exists()
    rows = _rows(csv_path)
    assert list(rows[0]) == [
        "l_nm", "qcrb_sigma_sqrtN_nm", "crb_sigma_sqrtN_nm_direct", "crb_sigma_sqrtN_nm_iii",
        "fi_per_photon_nm2_direct", "fi_per_photon_nm2_iii_out1", "fi_per_photon_nm2_iii_out2",
    ]
    assert [float(r["l_nm"]) for r in rows] == [20.0, 5.0, 10.0]
    for r in rows:
        q = float(r["qcrb_sigma_sqrtN_nm"])
        assert float(r["crb_sigma_sqrtN_nm_direct"]) >= q * 0.995
        assert float(r["crb_sigma_sqrtN_nm_iii"]) >= q * 0.995
    assert str(csv_path) in capsys.readouterr().out


def test_reruns_are_byte_identical(tmp_path):
    outs = []
    for name in ("a", "b"):
        d = tmp_path / name
        args = ["sweep", *FAST, "--orientation", "pi/3,pi/3", "--separations", "7",
                "--modalities", "iii", "--out", str(d)]
        assert cli.main(args) == 0
        outs.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
    assert outs[0] == outs[1]


def test_parallel_matches_serial(tiny):
    base = dict(separations=(3.0, 12.0), modalities=("iii", "rphi_iii"), orientations=(X_DIPOLE,), isotropic=True)
    serial = compute_curves(SweepSpec(tiny, workers=1, **base))
    parallel = compute_curves(SweepSpec(tiny, workers=2, **base))
    assert [c.to_csv() for c in serial] == [c.to_csv() for c in parallel]


def test_axial_dipole_has_infinite_azimuthal_bound(tmp_path):
    args = ["sweep", *FAST, "--orientation", "0,0", "--separations", "10",
            "--modalities", "phi_iii,rphi_iii", "--out", str(tmp_path)]
    assert cli.main(args) == 0
    (row,) = _rows(tmp_path / "bounds_theta0.000000_phi0.000000.csv")
    assert row["crb_sigma_sqrtN_nm_phi_iii"] == "inf"
    assert float(row["fi_per_photon_nm2_phi_iii_out1"]) == 0.0
    assert math.isfinite(float(row["crb_sigma_sqrtN_nm_rphi_iii"]))


def test_partial_outputs_removed_on_failure(tiny, tmp_path, monkeypatch):
    def boom(curve, path):
        raise OSError("disk full")

    monkeypatch.setattr(sweep, "plot_bound_curve", boom)
    spec = SweepSpec(tiny, (5.0,), ("iii",), (X_DIPOLE,), output_dir=tmp_path)
    with pytest.raises(OSError):
        run_sweep(spec)
    assert list(tmp_path.iterdir()) == []


def test_images_command(tmp_path):
    args = ["images", *FAST, "--orientation", "pi/2,0", "--separation", "9", "--modalities", "iii",
            "--png", "--out", str(tmp_path)]
    assert cli.main(args) == 0
    names = sorted(p.name for p in tmp_path.iterdir())
    pfm = [n for n in names if n.endswith(".pfm")]
    assert len(pfm) == 2 and all("l10.0000nm" in n for n in pfm)  # 9 nm snapped to the 5 nm lattice
    assert len([n for n in names if n.endswith(".png")]) == 2
    (summary,) = [n for n in names if n.startswith("channel_powers")]
    powers = {r["channel"]: float(r["power_fraction"]) for r in _rows(tmp_path / summary)}
    assert powers["iii_out1"] < 0.01 * powers["iii_out2"]
    img = read_pfm(tmp_path / pfm[0])
    assert img.shape == (401, 401) and img.min() >= 0


def test_images_needs_one_source(tmp_path):
    code = cli.main(["images", *FAST, "--orientation", "pi/2,0", "--isotropic", "--out", str(tmp_path)])
    assert code == 2


def test_polar_map_command(tmp_path):
    args = ["polar-map", *FAST, "--orientation", "pi/2,0", "--orientation", "0,0",
            "--orientation", "pi/3,pi/3", "--modalities", "direct,rphi_iii", "--out", str(tmp_path)]
    assert cli.main(args) == 0
    rows = _rows(tmp_path / "polar_ratios.csv")
    assert len(rows) == 3
    assert (tmp_path / "polar_direct.svg").exists() and (tmp_path / "polar_rphi_iii.svg").exists()
    for r in rows:
        assert float(r["l_nm"]) == 10.0
        assert float(r["ratio_direct"]) > 3
        assert 0.995 <= float(r["ratio_rphi_iii"]) < 2.5


def test_polar_table_deduplicates_axial_orientations(tiny):
    spec = SweepSpec(tiny, (10.0,), ("iii",), (Z_DIPOLE, DipoleOrientation(0.0, 1.0)), snap=True)
    a, b = polar_ratio_table(spec)
    assert a["iii"] == b["iii"]


def test_config_file(tmp_path):
    cfg_file = tmp_path / "optics.cfg"
    cfg_file.write_text("# test optics\nprofile = desk\npupil_grid_side = 65\nimage_fov_nm = 2000\n")
    args = cli.build_parser().parse_args(["sweep", "--config", str(cfg_file), "--na", "1.4",
                                          "--orientation", "pi/2,0", "--separations", "5"])
    cfg = cli.config_from_args(args)
    assert cfg.pupil_grid_side == 65 and cfg.image_fov_nm == 2000 and cfg.numerical_aperture == 1.4
    full = cli.config_from_args(cli.build_parser().parse_args(["validate", "--profile", "full"]))
    assert full.pupil_grid_side == 2049
    bad = tmp_path / "bad.cfg"
    bad.write_text("pupil_grid_side = 64\n")
    code = cli.main(["sweep", "--config", str(bad), "--orientation", "pi/2,0", "--separations", "5",
                     "--out", str(tmp_path / "o")])
    assert code == 2


def test_validate_command(capsys):
    assert cli.main(["validate"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 10 and all(line.startswith("PASS") for line in out)
