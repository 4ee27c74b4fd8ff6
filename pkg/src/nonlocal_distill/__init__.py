"""Nonlocality distillation of two-input, two-output no-signalling boxes by wirings."""

__version__ = "0.1.0"

from .boxes import (Box, CrossSectionPoint, ExtremalIndex, InvalidBoxError, PL, PNL, chsh,
                    chsh2, cs_point, local_extremal, mix, nonlocal_extremal, validate)
from .distill import (TRIVIAL_CC_THRESHOLD, AlgorithmConfig, DistillationTranscript,
                      certify_trivial_cc, fixed_repeat, parallel_distill, serial_distill)
from .optimize import (SweepResult, brute_force_two_copy, count_pr_preserving,
                       lp_optimize_alice, sweep_two_copy)
from .protocols import NCopyWiring, apply_ncopy, named_protocol, protocol_gain
from .scan import ScanRequest, boundary, boundary_zero_gain_check, closed_form_chsh, scan_region
from .wirings import catalog_effect, compose2, named_two_copy, validate_effect
