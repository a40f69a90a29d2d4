"""Key-buffer wiretap coding: simulation, power control and leakage audit."""

from .channels import (ChannelState, WiretapChannel, main_capacity, make_erasure_pair, make_flip_pair,
                       make_gaussian, secrecy_capacity, transmit)
from .key_buffer import BufferUnderflow, KeyBuffer, OriginRegression
from .leakage_audit import (AuditScenario, JointLeakageReport, joint_leakage_exhaustive, mc_mi_estimate,
                            otp_component_leakage, theorem1_bound_check)
from .power_control import (FadingConfig, FadingDistribution, PowerPolicy, ergodic_main_rate, inst_rates,
                            no_csi_secrecy_rate, simulate_fading_session, water_fill)
from .scheme import SchemeConfig, SessionReport, run_session
from .wiretap_code import (BinningCode, build_binning_code, error_probability, exact_leakage, wiretap_decode,
                           wiretap_encode)

__version__ = "0.1.0"
