"""High-impedance fault detection from PMU-estimated line eigenvalues."""

from .circuit import (
    EigenPair,
    LineParams,
    StateMatrix2,
    eigenvalues_closed_form,
    faulted_matrix,
    healthy_matrix,
)
from .hif import HifParams, fault_branch_voltage, sgn_arc, sgp
from .kernels import BACKEND
from .waveform import FaultWindow, LoadProfile, simulate, simulate_segment

__version__ = "0.1.0"
