import json
import math

import numpy as np
import pytest

from dsisd import BPSK, QPSK
from dsisd.harness import (BerPoint, ConfigError, ExtentTooSmallError, TrialError, ber,
                           ber_sweep, bit_errors, complexity_report, derive_seed,
                           half_power_width, make_instance, mainlobe_widths, parse_config, psf,
                           snr_at_ber)
from dsisd.harness import experiments
from dsisd.harness.cli import run_cli
from dsisd.harness.complexity import centralized_counts, dsisd_counts
from dsisd.harness.config import default_config_path
from dsisd.harness.csvout import fmt

STAR3_TEXT = default_config_path().read_text()


def small_text(**overrides):
    """Bundled config with a short frame and a coarse sweep for fast tests."""
    base = {"t": "24", "trials": "4", "cells": "21", "iterations": "10", "alternations": "5"}
    base.update(overrides)
    lines = []
    for line in STAR3_TEXT.splitlines():
        key = line.split("=")[0].strip()
        if key in base and "=" in line:
            line = f"{key} = {base[key]}"
        lines.append(line)
    return "\n".join(lines)


@pytest.fixture(scope="module")
def small_cfg():
    return parse_config(small_text())


@pytest.fixture
def cfg_file(tmp_path):
    p = tmp_path / "small.cfg"
    p.write_text(small_text())
    return p


# -- configuration ---------------------------------------------------------

def test_bundled_config_parses(star3_cfg):
    assert star3_cfg.n_base == 3
    assert star3_cfg.frame.k_tx == 4 and star3_cfg.frame.t == 100
    assert star3_cfg.solver.updates == "exact"
    assert star3_cfg.seed == 7


@pytest.mark.parametrize("text,field", [
    ("[frame]\nt1 = 2\n", "frame.t1"),
    ("[frame]\nk_tx = two\n", "frame.k_tx"),
    ("[solver]\nrho_f = -1\n", "solver.rho_f"),
    ("[bogus]\nx = 1\n", "bogus"),
    ("[solver]\nspeed = 3\n", "solver.speed"),
    ("[psf]\ncells = 20\n", "psf.cells"),
    ("[graph]\ntopology = ring\n", "graph.topology"),
    ("[graph]\ntopology = explicit\nedges = 0-1\n", "graph"),
])
def test_config_errors_name_the_field(text, field):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert exc.value.path == field


def test_config_hash_stable_and_seed_independent(star3_cfg, small_cfg):
    assert star3_cfg.config_hash() == parse_config(STAR3_TEXT).config_hash()
    assert star3_cfg.with_seed(99).config_hash() == star3_cfg.config_hash()
    assert small_cfg.config_hash() != star3_cfg.config_hash()
    assert len(star3_cfg.config_hash()) == 16


def test_derive_seed_streams_distinct():
    seeds = {derive_seed(7, 2, t) for t in range(50)}
    assert len(seeds) == 50
    assert derive_seed(7, 0) == derive_seed(7, 0) != derive_seed(8, 0)


# -- BER metric ------------------------------------------------------------

def test_bit_errors_bpsk():
    assert bit_errors(np.array([1, -1, 1]), np.array([1, 1, -1]), BPSK) == (2, 3)


def test_bit_errors_qpsk_gray():
    p = QPSK.points
    assert bit_errors(p[[0]], p[[1]], QPSK) == (1, 2)   # neighbours
    assert bit_errors(p[[0]], p[[2]], QPSK) == (2, 2)   # opposite
    assert ber(p, p, QPSK) == 0.0


def test_ber_errors():
    with pytest.raises(ValueError):
        bit_errors(np.ones(2), np.ones(3), BPSK)
    with pytest.raises(ValueError):
        ber(np.ones(0), np.ones(0), BPSK)
    with pytest.raises(ValueError):
        bit_errors(np.array([0.5]), np.array([1.0]), BPSK)


def test_snr_at_ber_log_interpolation():
    pts = [BerPoint(0.0, 1, 1000, 100), BerPoint(10.0, 1, 1000, 1)]
    assert snr_at_ber(pts) == pytest.approx(5.0)
    assert snr_at_ber(list(reversed(pts)), target=1e-1) == pytest.approx(0.0)


def test_snr_at_ber_zero_error_floor_and_no_crossing():
    # zero errors in 1000 bits sits at 1e-4: log-midpoint of 1e-0 and 1e-4 is 1e-2
    pts = [BerPoint(0.0, 1, 1000, 1000), BerPoint(4.0, 1, 1000, 0)]
    assert snr_at_ber(pts) == pytest.approx(2.0)
    assert math.isnan(snr_at_ber([BerPoint(0.0, 1, 100, 50), BerPoint(5.0, 1, 100, 40)]))


# -- PSF widths ------------------------------------------------------------

def test_half_power_width_triangle_is_exact():
    x = np.linspace(-1, 1, 41)
    assert half_power_width(1 - np.abs(x), x) == pytest.approx(2 * (1 - 1 / math.sqrt(2)),
                                                              rel=1e-12)


def test_half_power_width_gaussian():
    sigma = 0.3
    x = np.linspace(-2, 2, 2001)
    cut = np.exp(-x ** 2 / (2 * sigma ** 2))
    assert half_power_width(cut, x) == pytest.approx(2 * sigma * math.sqrt(math.log(2)),
                                                     rel=1e-5)


def test_half_power_width_boundary():
    x = np.linspace(0, 1, 11)
    with pytest.raises(ExtentTooSmallError):
        half_power_width(np.exp(-x), x)
    with pytest.raises(ExtentTooSmallError):
        half_power_width(np.ones(11) - 0.01 * np.abs(x - 0.5), x)


def test_mainlobe_widths_separable():
    x = np.linspace(-1, 1, 41)
    y = np.linspace(-1, 1, 41)
    grid = np.outer(1 - np.abs(x) / 0.5, 1 - np.abs(y)).clip(min=0)
    wx, wy = mainlobe_widths(grid, x, y)
    assert wx == pytest.approx(0.5 * 2 * (1 - 1 / math.sqrt(2)), rel=1e-12)
    assert wy == pytest.approx(2 * (1 - 1 / math.sqrt(2)), rel=1e-12)


def test_small_psf_peaks_at_source(small_cfg):
    for scheme in ("centralized", "dsisd"):
        g = psf(small_cfg, scheme)
        assert g.peak_index == (10, 10)
        assert g.grid.shape == (21, 21)
    with pytest.raises(ValueError):
        psf(small_cfg, "local")


# -- complexity --------------------------------------------------------------

def test_complexity_unit_examples():
    d = dsisd_counts(1, 1, 1, 1, 1, 1, 0, 1)
    assert (d.flops, d.comm_reals) == (32, 8)
    c = centralized_counts(1, 1, 1, 1, 1)
    assert (c.flops, c.comm_reals) == (16, 2)


def test_complexity_star3_counts(star3_cfg):
    d = complexity_report(star3_cfg, "dsisd")
    per_node = 96 * 800 ** 2 + 96 ** 2 * 800 + 8 * 16 + 4 * 64
    assert d.flops == 8 * 3 * per_node * 30
    assert d.comm_reals == 2 * 2 * 3 * (96 + 4 * 96) * 30
    c = complexity_report(star3_cfg, "centralized")
    assert c.flops == 8 * 8 * 3 * 100 * 96 * (96 + 2400) * 30
    assert c.comm_reals == 2 * 3 * 8 * 100
    with pytest.raises(ValueError):
        complexity_report(star3_cfg, "other")


# -- BER sweeps --------------------------------------------------------------

def test_ber_noiseless_is_zero(small_cfg):
    for scheme in ("centralized", "dsisd"):
        (pt,) = ber_sweep(small_cfg, scheme, [math.inf], trials=2)
        assert pt.bit_errors == 0
        assert pt.bits_total == 2 * 4 * 20


def test_ber_decreases_with_snr(small_cfg):
    pts = ber_sweep(small_cfg, "centralized", [-5.0, 5.0, 15.0], trials=6)
    bers = [p.ber for p in pts]
    assert bers[0] > bers[1] > bers[2]


def test_ber_trial_doubling_consistent(small_cfg):
    (a,) = ber_sweep(small_cfg, "centralized", [0.0], trials=10)
    (b,) = ber_sweep(small_cfg, "centralized", [0.0], trials=20)
    p = b.ber
    se = math.sqrt(p * (1 - p) / a.bits_total)
    assert abs(a.ber - b.ber) <= 3 * se


def test_instances_reproducible(small_cfg):
    a = make_instance(small_cfg, 10.0, 5)
    b = make_instance(small_cfg, 10.0, 5)
    for ya, yb in zip(a.problem.y, b.problem.y):
        if ya is not None:
            np.testing.assert_array_equal(ya, yb)


def test_trial_error_propagates(small_cfg, monkeypatch):
    def boom(*args, **kwargs):
        raise FloatingPointError("bad")

    monkeypatch.setattr(experiments, "solve", boom)
    with pytest.raises(TrialError) as exc:
        ber_sweep(small_cfg, "dsisd", [3.0], trials=2)
    assert (exc.value.snr_db, exc.value.trial) == (3.0, 0)
    assert isinstance(exc.value.cause, FloatingPointError)


# -- CSV and CLI -------------------------------------------------------------

def test_fmt():
    assert fmt(0.1) == "0.10000000000000001"
    assert fmt(float("nan")) == "nan" and fmt(math.inf) == "inf"
    assert fmt(np.int64(3)) == "3" and fmt("x") == "x"


def test_cli_run_is_byte_identical(cfg_file, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run_cli(["run", "--config", str(cfg_file), "--out", str(a)]) == 0
    assert run_cli(["run", "--config", str(cfg_file), "--out", str(b)]) == 0
    assert (a / "trace.csv").read_bytes() == (b / "trace.csv").read_bytes()
    lines = (a / "trace.csv").read_text().splitlines()
    assert lines[0].startswith("# dsisd run config_hash=")
    assert "seed=7" in lines[0]
    assert lines[1] == "iter,objective,aug_lagrangian,consensus_f,consensus_x,Q,wall_ms"
    assert len(lines) == 2 + 10
    assert lines[2].endswith(",nan")


def test_cli_seed_override_changes_output(cfg_file, tmp_path):
    run_cli(["run", "--config", str(cfg_file), "--out", str(tmp_path / "a")])
    run_cli(["run", "--config", str(cfg_file), "--seed", "8", "--out", str(tmp_path / "b")])
    a = (tmp_path / "a" / "trace.csv").read_text().splitlines()
    b = (tmp_path / "b" / "trace.csv").read_text().splitlines()
    assert a[0].split()[3] == b[0].split()[3]  # same config hash
    assert a[2:] != b[2:]


def test_cli_ber_and_complexity(cfg_file, tmp_path):
    assert run_cli(["ber", "--config", str(cfg_file), "--scheme", "centralized",
                    "--snr-db", "0,inf", "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "ber_centralized.csv").read_text().splitlines()
    assert rows[1] == "snr_db,trials,bits,bit_errors,ber"
    assert rows[3].startswith("inf,4,320,0,")
    assert run_cli(["complexity", "--config", str(cfg_file), "--out", str(tmp_path)]) == 0
    comp = (tmp_path / "complexity.csv").read_text().splitlines()
    assert [r.split(",")[0] for r in comp[2:]] == ["dsisd", "centralized"]


def test_cli_missing_config(tmp_path, capsys):
    code = run_cli(["run", "--config", str(tmp_path / "nope.cfg"), "--out", str(tmp_path)])
    assert code == 2
    err = json.loads(capsys.readouterr().err.strip())
    assert err["error"] == "ConfigError" and err["field"] == "--config"


def test_cli_bad_field(tmp_path, capsys):
    p = tmp_path / "bad.cfg"
    p.write_text(small_text(t1="2"))
    assert run_cli(["run", "--config", str(p), "--out", str(tmp_path)]) == 2
    err = json.loads(capsys.readouterr().err.strip())
    assert err["field"] == "frame.t1"


def test_cli_bad_snr_list(cfg_file, tmp_path, capsys):
    assert run_cli(["run", "--config", str(cfg_file), "--snr-db", "abc",
                    "--out", str(tmp_path)]) == 2
    assert json.loads(capsys.readouterr().err)["field"] == "--snr-db"


def test_cli_runtime_error_is_json(cfg_file, tmp_path, capsys, monkeypatch):
    def boom(*args, **kwargs):
        raise RuntimeError("solver exploded")

    monkeypatch.setattr(experiments, "solve", boom)
    assert run_cli(["ber", "--config", str(cfg_file), "--scheme", "dsisd",
                    "--out", str(tmp_path)]) == 1
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "TrialError" and "solver exploded" in err["message"]
