"""Distributed simultaneous imaging and symbol detection via consensus ADMM."""
from ._accel import backend
from .admm import (IterationTrace, NodeState, PenaltyParams, SolveResult, StackedIterate,
                   dsisd_imaging,
                   augmented_lagrangian, frozen_dual_descent_check, objective_g,
                   optimality_gap, run_dsisd)
from .centralized import run_decode_and_image
from .consensus_ls import ConsensusLeastSquares
from .geometry import (ArrayGeometry, Position2D, SceneModel, Wavelength,
                       build_path_delay_matrix, make_ula, path_delay_entry)
from .graph import (BackhaulGraph, NodeRole, complete_graph, consensus_residual,
                    fiedler_value, laplacian, path_graph, star_with_fusion)
from .problem import Instance, Problem, synthesize
from .signals import (BPSK, QPSK, Constellation, NoiseSpec, SymbolFrame, add_noise,
                      forward_model, generate_data, generate_pilots, make_frame,
                      project_constellation)

__version__ = "0.1.0"
