"""Experiment harness: configuration, metrics, complexity accounting and CLI."""
from .complexity import ComplexityReport, complexity_report
from .config import ConfigError, ExperimentConfig, default_config_path, load_config, parse_config
from .experiments import (TrialError, ber_sweep, build_geometry, build_graph, convergence,
                          derive_seed, make_instance, psf, run_single, solve)
from .metrics import (BerPoint, ExtentTooSmallError, PsfGrid, ber, bit_errors,
                      half_power_width, mainlobe_widths, snr_at_ber)
