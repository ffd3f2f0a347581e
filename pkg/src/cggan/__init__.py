"""Linear inverse problems with a compound-Gaussian/generative-network prior.

Library layout:

- ``linalg``: SVD-backed ridge solves, soft thresholding, ball projections
- ``operators``: Gaussian/Radon sensing, DCT basis, SNR noise injection
- ``generator``: dense generator runtime (forward/VJP/JVP, weight files)
- ``solver``: the four-block ADMM solver over the compound prior
- ``baselines``: latent-space MAP and single-constraint ADMM comparisons
- ``theory``: numerical certification of the convergence analysis
- ``metrics``/``images``/``experiments``: SSIM, PGM I/O, sweep harness
- ``cli``: the ``cggan`` command
"""

from .baselines import BaselineConfig, BaselineSolution, bora_solve, latorre_solve
from .errors import (
    DivergenceError,
    InvalidInputError,
    NumericalFailureError,
    WeightFormatError,
)
from .generator import (
    GeneratorAssumptionEstimate,
    GeneratorNetwork,
    Layer,
    ScaleBasisGenerator,
    estimate_assumption_constants,
    load_weights,
    random_generator,
    save_weights,
    wrap,
)
from .linalg import SvdFactorization, project_ball, ridge_solve, soft_threshold, svd
from .metrics import confidence_interval_99, mse, psnr, ssim
from .operators import (
    MeasurementSetup,
    Sinogram,
    add_noise_snr,
    dct_basis,
    gaussian_measurement,
    measurement_setup,
    radon_operator,
)
from .solver import (
    CgGanSolution,
    RunTrace,
    RxSpec,
    SolverConfig,
    SolverState,
    augmented_lagrangian,
    cost_F,
    dual_ascent,
    feasibility_gap,
    initialize,
    solve,
    stopping_check,
    stopping_statistic,
    update_c,
    update_u,
    update_x,
    update_z_fista,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
