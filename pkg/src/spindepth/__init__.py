"""Entanglement-depth certification for collective-spin states.

Library layout:

* :mod:`spindepth.spin_algebra` -- operators, ground states, rotations and
  moments in a single symmetric spin-j sector.
* :mod:`spindepth.producibility` -- k-producibility boundaries, the F_j
  function, certification criteria, and the depth scan.
* :mod:`spindepth.estimation` -- unbiased moment statistics (including the
  variance of the variance estimator) and confidence-ellipse depth.
* :mod:`spindepth.simulation` -- seeded Monte Carlo shot generation and
  random state families.
* :mod:`spindepth.metrics` -- squeezing figures of merit.
* :mod:`spindepth.io_cli` -- shot files, configuration, reports.
* :mod:`spindepth.cli` -- the ``spindepth`` command line tool.
"""

__version__ = "0.1.0"

from .errors import ConfigError, DataError, NumericalError, SpinDepthError
from .spin_algebra import (
    CollectiveMoments,
    SpinSector,
    StateVector,
    TridiagonalOperator,
    build_operator,
    coherent_moments,
    dicke_moments,
    ground_state,
    moments_of_state,
    rotated_dicke_distribution,
)
from .producibility import (
    BoundaryCurve,
    DepthVerdict,
    GroupMoments,
    aggregate_product,
    boundary_curve,
    criterion_closed_form,
    criterion_sorensen_molmer,
    depth_bound,
    f_function,
    tangent_criterion,
)
from .estimation import (
    EllipsePoint,
    MomentEstimate,
    SampleMoments,
    depth_with_confidence,
    estimate_jeff_sq,
    estimate_jz_variance,
    sample_moments,
    smve,
    to_decibels,
    unbiased_second_moment,
)
from .metrics import SqueezingReport, number_squeezing_db, squeezing_report, xi_gen, xi_squared
from .simulation import (
    NoiseModel,
    ShotRecord,
    SweepResult,
    compare_criteria_sweep,
    noisy_squeezed_moments,
    random_producible_moments,
    sample_coherent_shots,
    sample_dicke_shots,
)
from .io_cli import (
    AnalysisConfig,
    Report,
    emit_boundary_csv,
    emit_report,
    load_report,
    parse_shots,
    run_analysis,
    write_shots,
)

__all__ = [name for name in dir() if not name.startswith("_")]
