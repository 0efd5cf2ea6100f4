"""Compressive sensing recovery with generative priors and structured latents."""

from .errors import (ConfigError, DimensionError, NumericError, ParameterError,
                     PreconditionError, SingularMatrixError, WeightFormatError)
from .linalg import (RidgeSolver, Rng, SensingMatrix, gaussian_matrix,
                     pseudo_inverse_lsq, ridge_solve, sample_sensing_matrix,
                     spectral_norm)
from .mlp import (Activation, DenseLayer, MlpNetwork, OutputBlockSpec,
                  TrainConfig, forward, forward_batch, grad_input, grad_params,
                  init_network, lipschitz_upper_bound, train_supervised)
from .latent import (Generator, LatentLayout, LatentVector, estimate_beta,
                     estimate_lipschitz_lower, generate, generate_batch,
                     identity_generator, linear_generator,
                     make_synthetic_generator, sample_latent)
from .projector import (NoiseModel, Projector, build_projector_net, project,
                        train_denoiser, train_projector_method1,
                        train_projector_method2)
from .recovery import (AdmmState, Measurement, RecoveryResult, SolverConfig,
                       codeword_accuracy, csgm_gd_recover, fcsrg_recover,
                       measure, pinv_recover, pnp_dae_recover,
                       reconstruction_error)
from .theory import (BoundCheck, IsometryConfig, IsometryReport,
                     check_generator_isometry, check_jl, check_operator_norm,
                     check_recovery_bound, check_structured_isometry,
                     required_m_jl, required_m_range)
from .weights_io import load_weights, save_weights
from .bundle import ModelBundle, load_bundle, read_image_archive

__version__ = "0.1.0"
