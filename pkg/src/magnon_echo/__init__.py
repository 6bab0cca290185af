"""Loschmidt echoes of local quantum processes on magnon spin chains."""
from .bessel import bessel_j, bessel_j_sequence
from .chain import ChainSpec
from .channels import (ChannelLabel, CoherentGate, KrausChannel, QdpEvent, QdpSequence, bit_flip,
                       coherent, custom, phase_flip, project_x, project_z, validate_channel)
from .echo_analytic import (coherent_asymptote, echo_coherent, echo_incoherent, echo_multi_exact_z,
                            echo_multi_truncated, expect_sigma_x, expect_sigma_y, expect_sigma_z,
                            string_amplitude_exact, string_amplitude_truncated)
from .harper import (HarperParams, commensurate_times, echo_harper_qdp, echo_harper_reverse,
                     echo_xy_vs_harper, harper_green, harper_step)
from .propagators import (Propagator, combined_K, dressed_green, green, green_finite, green_infinite,
                          inverse_participation_ratio, propagator_matrix)
from .series import EchoSeries
from .states import InitialState, SectorDensity, SectorState

__version__ = "0.1.0"
