"""Twin-beam correlation spectra of an above-threshold NOPO with pump phase noise."""
from ._kernels import BACKEND
from .errors import (ConfigurationError, DomainError, InsufficientDataError,
                     ParameterError, TwinBeamError)
from .spectra import (EXPERIMENT_CAVITY, EXPERIMENT_CHAIN, EXPERIMENT_EXCESS,
                      EXPERIMENT_SIGMA, DetectionChain, FrequencyGrid, NoiseSpectrumTrace, OpoCavity,
                      PumpDrive, apply_loss, critical_excess_noise, from_decibels,
                      intensity_diff_spectrum, lossless_spectrum, phase_sum_spectrum,
                      sigma_from_powers, to_decibels)

__version__ = "0.1.0"
