"""One-shot communication-constrained distributed convex optimization:
simulator, estimators, and experiment harness."""

from ._backend import kernel_backend
from .baselines import avgm, naive_1d, one_bit
from .codec import (EncodedSignal, QuantizerSpec, Signal, decode, dequantize,
                    encode, quantize, quantizer_for_level)
from .functions import (FunctionDistribution, GradientEstimate, SampleFunction,
                        evaluate, expected_gradient, gradient,
                        make_distribution)
from .harness import (ExperimentConfig, SweepRow, emit_report, fit_slope,
                      load_config, run_sweep)
from .multigrid import (GridAddress, GridParams, address_to_point,
                        compute_params, nearest_coarse_point, parent,
                        sample_level, sample_point)
from .multires import (MachineOutput, machine_encode, run_multires,
                       server_estimate)
from .results import EstimateResult
from .solver import SolverConfig, SolveResult, minimize_empirical

__version__ = "0.1.0"

__all__ = [
    "EncodedSignal", "EstimateResult", "ExperimentConfig",
    "FunctionDistribution", "GradientEstimate", "GridAddress", "GridParams",
    "MachineOutput", "QuantizerSpec", "SampleFunction", "Signal",
    "SolveResult", "SolverConfig", "SweepRow", "address_to_point", "avgm",
    "compute_params", "decode", "dequantize", "emit_report", "encode",
    "evaluate", "expected_gradient", "fit_slope", "gradient",
    "kernel_backend", "load_config", "machine_encode", "make_distribution",
    "minimize_empirical", "naive_1d", "nearest_coarse_point", "one_bit",
    "parent", "quantize", "quantizer_for_level", "run_multires", "run_sweep",
    "sample_level", "sample_point", "server_estimate",
]
