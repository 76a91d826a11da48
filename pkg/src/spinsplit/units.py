"""Natural unit convention shared by the whole package.

Everything internal is carried in electron-volt units with hbar = c = 1:
energies in eV, momenta in eV/c, times in hbar/eV, lengths in hbar*c/eV.
All the laser/electron parameters of interest are quoted in eV, fs and um,
so SI appears only at the I/O boundary.
"""

import scipy.constants as _si

# Electron rest energy used throughout the dynamical formulas [eV].
MC2_EV = 5.110e5

# One natural time unit (hbar / 1 eV) expressed in femtoseconds: 0.6582... fs
TIME_UNIT_FS = _si.hbar / _si.eV * 1e15

# One natural length unit (hbar c / 1 eV) in nanometres: 197.33 nm
LENGTH_UNIT_NM = _si.hbar * _si.c / _si.eV * 1e9
LENGTH_UNIT_UM = LENGTH_UNIT_NM * 1e-3

# Speed of light in lab units, handy for the design calculator.
C_NM_PER_FS = _si.c * 1e-6


def fs_to_natural(t_fs: float) -> float:
    return t_fs / TIME_UNIT_FS


def natural_to_fs(t: float) -> float:
    return t * TIME_UNIT_FS


def attoseconds_to_natural(t_as: float) -> float:
    return t_as * 1e-3 / TIME_UNIT_FS


def nm_to_natural(x_nm: float) -> float:
    return x_nm / LENGTH_UNIT_NM


def natural_to_nm(x: float) -> float:
    return x * LENGTH_UNIT_NM


def um_to_natural(x_um: float) -> float:
    return x_um / LENGTH_UNIT_UM


def natural_to_um(x: float) -> float:
    return x * LENGTH_UNIT_UM
