"""Physical constants and unit conversions.

Energies are in eV throughout the package, spectral shifts in cm^-1,
times in seconds and powers in watts.
"""

# Reduced Planck constant (eV s)
HBAR_EV_S = 6.58212e-16

# h*c (eV cm); converts a wavenumber in cm^-1 to an energy in eV
HC_EV_CM = 1.23984e-4

# Boltzmann constant (eV / K)
KB_EV_K = 8.61733e-5

# Elementary charge (J / eV)
EV_TO_J = 1.602176634e-19

NM_TO_CM = 1e-7
FS_TO_S = 1e-15
MHZ_TO_HZ = 1e6
MW_TO_W = 1e-3


def shift_to_energy(shift):
    """Convert a Raman shift in cm^-1 to eV. Sign is preserved."""
    return shift * HC_EV_CM


def energy_to_shift(energy):
    """Convert an energy in eV to a Raman shift in cm^-1."""
    return energy / HC_EV_CM
