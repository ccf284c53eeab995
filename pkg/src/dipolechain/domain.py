"""Domain types and geometry for a finite linear chain of polarizable atoms.

Everything downstream (solver, analytic formulas, emission observables)
works with the immutable value objects defined here.  Lengths are in nm,
angles in radians, and atom indices are 1-based throughout the public API.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

#: Apery's constant, sum of 1/n^3 (the transverse lattice sum of the chain).
APERY = 1.2020569031595942854

#: Above this value of k*a0 the small-retardation formulas start to degrade.
RETARDATION_WARN_THRESHOLD = 0.1


class RetardationWarning(UserWarning):
    """Chain spacing is a sizeable fraction of the wavelength."""


class Polarization(enum.Enum):
    """Polarization branch of an incident field mode."""

    PERPENDICULAR = "perpendicular"
    PARALLEL = "parallel"


class AmplitudeMethod(enum.Enum):
    """Provenance of a set of amplitude factors."""

    NUMERIC = "numeric"
    ONE_NEIGHBOR = "one_neighbor"
    TWO_NEIGHBOR = "two_neighbor"
    INFINITE_CHAIN = "infinite_chain"


class ZMode(enum.Enum):
    """How longitudinal (z) amplitude factors are obtained.

    ``PAPER`` ties them to the transverse ones through the fixed
    optical-range relation ``tz = -2 * tx``; ``EQUATION`` solves the
    longitudinal system itself (which has a resonance near coupling
    ``1 / (4 * APERY)`` ~ 0.208).  The two disagree for any nonzero
    coupling; both are exposed because neither can be singled out from
    the transverse benchmark data alone.
    """

    PAPER = "paper"
    EQUATION = "equation"


def riemann_zeta3() -> float:
    """Riemann zeta function at 3, accurate to double precision."""
    return APERY


def _cos_sin(angle: float) -> tuple[float, float]:
    # Exact values at the quarter-turn angles keep undriven systems and
    # unit-amplitude free fields exactly so, instead of O(1e-16) off.
    if angle == 0.0:
        return 1.0, 0.0
    if angle == math.pi / 2:
        return 0.0, 1.0
    if angle == math.pi:
        return -1.0, 0.0
    return math.cos(angle), math.sin(angle)


@dataclass(frozen=True)
class ChainSpec:
    """Geometry and material of the chain.

    Parameters
    ----------
    n_atoms : int
        Number of atoms N (>= 1).
    spacing : float
        Interatomic distance a0 in nm.  Atom j (1-based) sits at
        ``z = -spacing * (j - 1)`` on the z-axis.
    wavelength : float
        Free-space wavelength of the mode in nm; sets ``k = 2*pi/wavelength``.
    coupling : float
        Dimensionless normalized polarizability ``C = alpha / spacing**3``.
    """

    n_atoms: int
    spacing: float
    wavelength: float
    coupling: float

    def __post_init__(self) -> None:
        if not isinstance(self.n_atoms, (int, np.integer)):
            raise TypeError(f"n_atoms must be an integer, got {self.n_atoms!r}")
        if self.n_atoms < 1:
            raise ValueError(f"n_atoms must be >= 1, got {self.n_atoms}")
        if not self.spacing > 0:
            raise ValueError(f"spacing must be positive, got {self.spacing}")
        if not self.wavelength > 0:
            raise ValueError(f"wavelength must be positive, got {self.wavelength}")
        if self.coupling < 0:
            raise ValueError(f"coupling must be >= 0, got {self.coupling}")
        if self.ka0 > RETARDATION_WARN_THRESHOLD:
            warnings.warn(
                f"k*a0 = {self.ka0:.3g} exceeds {RETARDATION_WARN_THRESHOLD}; "
                "results neglect higher-order retardation corrections",
                RetardationWarning,
                stacklevel=2,
            )

    @property
    def wavenumber(self) -> float:
        """k = 2*pi / wavelength, in 1/nm."""
        return 2.0 * math.pi / self.wavelength

    @property
    def ka0(self) -> float:
        """Dimensionless retardation parameter k * a0."""
        return 2.0 * math.pi * self.spacing / self.wavelength

    @property
    def length(self) -> float:
        """End-to-end chain length in nm."""
        return self.spacing * (self.n_atoms - 1)


def atom_position(chain: ChainSpec, j: int) -> np.ndarray:
    """Position of atom ``j`` (1-based), ``(0, 0, -spacing * (j - 1))``."""
    if not 1 <= j <= chain.n_atoms:
        raise IndexError(f"atom index {j} outside 1..{chain.n_atoms}")
    return np.array([0.0, 0.0, -chain.spacing * (j - 1)])


def mid_chain_index(n_atoms: int) -> int:
    """1-based index of the representative interior atom, ceil(N/2)."""
    if n_atoms < 1:
        raise ValueError(f"n_atoms must be >= 1, got {n_atoms}")
    return (n_atoms + 1) // 2


@dataclass(frozen=True)
class ModeSpec:
    """One incident field mode: direction angles and polarization branch.

    ``theta`` is measured from the positive z-axis (the chain axis),
    ``phi`` is the azimuth.  By symmetry of the chain, observables do not
    depend on ``phi``; the default ``phi = pi`` keeps the perpendicular
    polarization vector exactly along y.
    """

    theta: float
    phi: float = math.pi
    polarization: Polarization = Polarization.PERPENDICULAR

    def __post_init__(self) -> None:
        if not 0.0 <= self.theta <= math.pi:
            raise ValueError(f"theta must lie in [0, pi], got {self.theta}")
        object.__setattr__(self, "phi", self.phi % (2.0 * math.pi))
        if not isinstance(self.polarization, Polarization):
            raise TypeError(f"polarization must be a Polarization, got {self.polarization!r}")

    @property
    def direction(self) -> np.ndarray:
        """Unit propagation vector s."""
        ct, st = _cos_sin(self.theta)
        cp, sp = _cos_sin(self.phi)
        return np.array([st * cp, st * sp, ct])

    @property
    def e_perpendicular(self) -> np.ndarray:
        """Unit polarization vector of the perpendicular branch."""
        cp, sp = _cos_sin(self.phi)
        return np.array([sp, -cp, 0.0])

    @property
    def e_parallel(self) -> np.ndarray:
        """Unit polarization vector of the parallel branch."""
        ct, st = _cos_sin(self.theta)
        cp, sp = _cos_sin(self.phi)
        return np.array([-ct * cp, -ct * sp, st])

    @property
    def polarization_vector(self) -> np.ndarray:
        """Polarization vector of the selected branch."""
        if self.polarization is Polarization.PERPENDICULAR:
            return self.e_perpendicular
        return self.e_parallel


@dataclass(frozen=True, eq=False)
class FieldProfile:
    """Per-atom complex mode-function vectors for one incident mode.

    ``values[j - 1]`` is the 3-vector at atom j, normalized to a unit
    incident amplitude; with zero coupling it equals the free field
    ``e_pol * exp(i k s . r_j)``.
    """

    values: np.ndarray
    mode: ModeSpec
    chain: ChainSpec

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=complex)
        if values.shape != (self.chain.n_atoms, 3):
            raise ValueError(
                f"values must have shape ({self.chain.n_atoms}, 3), got {values.shape}"
            )
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def component(self, name: str) -> np.ndarray:
        """Column of one Cartesian component ('x', 'y' or 'z')."""
        return self.values[:, "xyz".index(name)]


@dataclass(frozen=True, eq=False)
class AmplitudeProfile:
    """Per-atom amplitude factors relative to the free field.

    An entry of 1 means the chain leaves that component of the local mode
    function untouched.  Analytic methods produce real entries; numeric
    extraction leaves small imaginary parts of order k*a0.
    """

    tx: np.ndarray
    ty: np.ndarray
    tz: np.ndarray
    method: AmplitudeMethod
    z_mode: ZMode

    def __post_init__(self) -> None:
        arrays = {}
        n = None
        for name in ("tx", "ty", "tz"):
            arr = np.asarray(getattr(self, name), dtype=complex).copy()
            if arr.ndim != 1:
                raise ValueError(f"{name} must be one-dimensional")
            if n is None:
                n = arr.size
            elif arr.size != n:
                raise ValueError("tx, ty, tz must have equal length")
            arr.setflags(write=False)
            arrays[name] = arr
        for name, arr in arrays.items():
            object.__setattr__(self, name, arr)

    @property
    def n_atoms(self) -> int:
        return self.tx.size


@dataclass(frozen=True)
class DipoleOrientation:
    """Orientation of the transition dipole moment of the emitting atom."""

    theta_d: float
    phi_d: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.theta_d <= math.pi:
            raise ValueError(f"theta_d must lie in [0, pi], got {self.theta_d}")
        object.__setattr__(self, "phi_d", self.phi_d % (2.0 * math.pi))

    @property
    def unit_vector(self) -> np.ndarray:
        ct, st = _cos_sin(self.theta_d)
        cp, sp = _cos_sin(self.phi_d)
        return np.array([st * cp, st * sp, ct])


@dataclass(frozen=True)
class ReferenceScales:
    """Free-space lifetime and shift used to turn ratios into absolutes.

    All core outputs of the library are dimensionless ratios; these scales
    are inputs (never computed) and are only needed for absolute values.
    """

    free_space_lifetime: float | None = None
    free_space_shift: float | None = None

    def __post_init__(self) -> None:
        for name in ("free_space_lifetime", "free_space_shift"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ValueError(f"{name} must be positive when supplied, got {value}")

    def lifetime(self, lifetime_ratio: float) -> float | None:
        """Absolute lifetime, or None when no free-space lifetime is set."""
        if self.free_space_lifetime is None:
            return None
        return self.free_space_lifetime * lifetime_ratio

    def shift(self, shift_ratio: float) -> float | None:
        """Absolute frequency shift, or None when no free-space shift is set."""
        if self.free_space_shift is None:
            return None
        return self.free_space_shift * shift_ratio
