"""Transport in ac-driven PT-symmetric complex crystals.

Band structure and symmetry breaking (:mod:`ptcrystal.bloch`), Floquet
quasienergy and dynamic localization (:mod:`ptcrystal.quasienergy`),
split-step beam propagation (:mod:`ptcrystal.propagator`) and the one-sided
Bragg cascade at the symmetry-breaking point (:mod:`ptcrystal.bragg`).

Units: lengths in um, potentials and energies in refractive-index units,
forces in index units per um.
"""

from .lattice import LatticeSpec, PotentialForm
from .quasienergy import DriveSpec

__all__ = ["LatticeSpec", "PotentialForm", "DriveSpec"]
__version__ = "0.1.0"
