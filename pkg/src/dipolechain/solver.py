"""Assembly and solution of the coupled local-field systems.

The local mode function at every atom obeys a linear system: the free
field at that atom plus the fields scattered by all the other atoms.  On
a straight uniform chain the three Cartesian components decouple into
independent N x N complex systems ``(I - C) f = rhs`` whose coupling
matrix is symmetric Toeplitz (it depends only on the index separation).

Two solution routes are provided and kept independent so they can check
one another: dense LU elimination (`solve_direct`) and Gauss-Seidel /
SOR sweeps (`solve_iterative`).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .domain import (
    AmplitudeMethod,
    AmplitudeProfile,
    ChainSpec,
    FieldProfile,
    ModeSpec,
    Polarization,
    ZMode,
    _cos_sin,
    mid_chain_index,
)

COMPONENTS = ("x", "y", "z")

#: Pivot threshold (relative to the largest matrix entry) below which the
#: dense factorization is declared resonant.
_PIVOT_RTOL = 1e-14

#: Kernel length from which the FFT mat-vec outruns the direct convolution.
_FAST_MATVEC_MIN_N = 1024


class SingularSystemError(ArithmeticError):
    """The chain response is resonant: elimination hit a vanishing pivot."""


class SolverMethod(enum.Enum):
    DIRECT = "direct"
    GAUSS_SEIDEL = "gauss_seidel"
    SOR = "sor"


@dataclass(frozen=True)
class SolveOptions:
    """Knobs for the linear solvers.

    ``tolerance`` is the successive-iterate max-norm stopping criterion of
    the sweep methods; ``relaxation`` is the SOR factor (Gauss-Seidel
    always runs with 1).
    """

    method: SolverMethod = SolverMethod.DIRECT
    tolerance: float = 1e-10
    max_sweeps: int = 100_000
    relaxation: float = 1.0

    def __post_init__(self) -> None:
        if not isinstance(self.method, SolverMethod):
            raise TypeError(f"method must be a SolverMethod, got {self.method!r}")
        if not self.tolerance > 0:
            raise ValueError(f"tolerance must be positive, got {self.tolerance}")
        if self.max_sweeps < 1:
            raise ValueError(f"max_sweeps must be >= 1, got {self.max_sweeps}")
        if not 0.0 < self.relaxation <= 2.0:
            raise ValueError(f"relaxation must lie in (0, 2], got {self.relaxation}")


@dataclass(frozen=True)
class SolveReport:
    """Outcome of one scalar-system solve."""

    converged: bool
    sweeps_used: int
    final_residual: float
    method_used: SolverMethod


def coupling_coefficient(component: str, separation: int, ka0: float, coupling: float) -> complex:
    """Interaction coefficient between two atoms ``separation`` sites apart.

    Parameters
    ----------
    component : {'x', 'y', 'z'}
        Cartesian component of the mode function (x and y share one
        transverse coefficient; z is the longitudinal one).
    separation : int
        Index distance d = |l - j| >= 1.
    ka0 : float
        Retardation parameter k * a0.
    coupling : float
        Normalized polarizability C.

    Returns
    -------
    complex
        For x/y: ``C * (ka0**2/d + i*ka0/d**2 - 1/d**3) * exp(i*ka0*d)``.
        For z:   ``2C * (-i*ka0/d**2 + 1/d**3) * exp(i*ka0*d)``.
        The 1/d**3 term is the instantaneous (Coulomb) part; the others
        are retardation terms.
    """
    if component not in COMPONENTS:
        raise ValueError(f"component must be one of {COMPONENTS}, got {component!r}")
    if separation < 1:
        raise ValueError(f"separation must be >= 1 (no self-coupling), got {separation}")
    d = float(separation)
    phase = complex(math.cos(ka0 * d), math.sin(ka0 * d))
    if component == "z":
        return 2.0 * coupling * (-1j * ka0 / d**2 + 1.0 / d**3) * phase
    return coupling * (ka0**2 / d + 1j * ka0 / d**2 - 1.0 / d**3) * phase


def coupling_table(component: str, n_atoms: int, ka0: float, coupling: float) -> np.ndarray:
    """Separation-indexed coupling row; entry d is the coefficient at
    distance d, entry 0 (self-coupling) is zero.  One such row describes
    the whole symmetric Toeplitz coupling matrix."""
    if component not in COMPONENTS:
        raise ValueError(f"component must be one of {COMPONENTS}, got {component!r}")
    if n_atoms < 1:
        raise ValueError(f"n_atoms must be >= 1, got {n_atoms}")
    d = np.arange(1, n_atoms, dtype=float)
    phase = np.exp(1j * ka0 * d)
    if component == "z":
        values = 2.0 * coupling * (-1j * ka0 / d**2 + 1.0 / d**3) * phase
    else:
        values = coupling * (ka0**2 / d + 1j * ka0 / d**2 - 1.0 / d**3) * phase
    return np.concatenate(([0.0 + 0.0j], values))


def free_field_factor(j: int, theta: float, ka0: float) -> complex:
    """Free-field phase ``exp(-i * ka0 * (j - 1) * cos(theta))`` at atom j."""
    if j < 1:
        raise ValueError(f"atom index must be >= 1, got {j}")
    ct, _ = _cos_sin(theta)
    return complex(np.exp(-1j * ka0 * (j - 1) * ct))


def free_field_factors(n_atoms: int, theta: float, ka0: float) -> np.ndarray:
    """Free-field phases for atoms 1..N as a vector."""
    ct, _ = _cos_sin(theta)
    return np.exp(-1j * ka0 * np.arange(n_atoms) * ct)


def drive_scale(component: str, mode: ModeSpec) -> float:
    """Projection of the incident polarization vector onto ``component``.

    The perpendicular branch drives only y; the parallel branch drives x
    (by cos(theta)) and z (by sin(theta)).  Undriven components get zero.
    """
    ct, st = _cos_sin(mode.theta)
    if mode.polarization is Polarization.PERPENDICULAR:
        return 1.0 if component == "y" else 0.0
    if component == "x":
        return ct
    if component == "z":
        return st
    return 0.0


@dataclass(frozen=True, eq=False)
class ScalarSystem:
    """One decoupled N x N component system ``(I - C) f = rhs``.

    ``coupling_row`` stores the Toeplitz coupling matrix as a single
    separation-indexed row (O(N) memory); ``rhs`` carries the free-field
    driving term already projected on the component.
    """

    component: str
    rhs: np.ndarray
    coupling_row: np.ndarray
    chain: ChainSpec
    mode: ModeSpec

    def __post_init__(self) -> None:
        rhs = np.asarray(self.rhs, dtype=complex)
        row = np.asarray(self.coupling_row, dtype=complex)
        if rhs.shape != (self.chain.n_atoms,) or row.shape != (self.chain.n_atoms,):
            raise ValueError("rhs and coupling_row must both have length n_atoms")
        if row[0] != 0:
            raise ValueError("self-coupling (separation 0) must be zero")
        for arr in (rhs, row):
            arr.setflags(write=False)
        object.__setattr__(self, "rhs", rhs)
        object.__setattr__(self, "coupling_row", row)

    @property
    def n(self) -> int:
        return self.rhs.size

    def apply_coupling(self, vec: np.ndarray, fast: bool | None = None) -> np.ndarray:
        """Coupling matrix times ``vec``."""
        return toeplitz_matvec(self.coupling_row, vec, fast=fast)

    def dense_matrix(self) -> np.ndarray:
        """Full dense system matrix ``I - C`` (symmetric, not Hermitian)."""
        idx = np.arange(self.n, dtype=np.int32)
        full = self.coupling_row[np.abs(idx[:, None] - idx[None, :])]
        return np.eye(self.n, dtype=complex) - full

    def residual(self, f: np.ndarray) -> float:
        """Max-norm of ``(I - C) f - rhs``."""
        return float(np.max(np.abs(f - self.apply_coupling(f) - self.rhs)))


def assemble(chain: ChainSpec, mode: ModeSpec, component: str) -> ScalarSystem:
    """Build the scalar system for one Cartesian component of a mode."""
    scale = drive_scale(component, mode)
    rhs = free_field_factors(chain.n_atoms, mode.theta, chain.ka0) * scale
    row = coupling_table(component, chain.n_atoms, chain.ka0, chain.coupling)
    return ScalarSystem(component=component, rhs=rhs, coupling_row=row, chain=chain, mode=mode)


def toeplitz_matvec(row: np.ndarray, vec: np.ndarray, fast: bool | None = None) -> np.ndarray:
    """Symmetric-Toeplitz matrix-vector product from the separation row.

    ``fast=None`` picks the FFT circulant-embedding path for large systems
    and the direct O(N^2) convolution otherwise; both agree to better than
    1e-12 and either can be forced.
    """
    row = np.asarray(row)
    vec = np.asarray(vec, dtype=complex)
    n = row.size
    if vec.shape != (n,):
        raise ValueError(f"vector length {vec.shape} does not match row length {n}")
    if n == 1:
        return np.zeros(1, dtype=complex)
    if fast is None:
        fast = n >= _FAST_MATVEC_MIN_N
    if not fast:
        kernel = np.concatenate((row[:0:-1], row))
        return np.convolve(vec, kernel)[n - 1 : 2 * n - 1]
    # Embed in a circulant of length 2n: first column [row, 0, reversed row tail].
    circ = np.concatenate((row, [0.0], row[:0:-1]))
    spectrum = np.fft.fft(circ)
    padded = np.zeros(2 * n, dtype=complex)
    padded[:n] = vec
    return np.fft.ifft(spectrum * np.fft.fft(padded))[:n]


def solve_direct(system: ScalarSystem) -> tuple[np.ndarray, SolveReport]:
    """Solve ``(I - C) f = rhs`` by dense LU elimination with partial pivoting.

    Raises
    ------
    SingularSystemError
        When a pivot falls below ``1e-14`` times the matrix scale, which
        signals a physically resonant coupling strength.
    """
    matrix = system.dense_matrix()
    scale = float(np.max(np.abs(matrix)))
    try:
        lu, piv = scipy.linalg.lu_factor(matrix, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise SingularSystemError(f"{system.component}-system is singular: {exc}") from exc
    pivots = np.abs(np.diag(lu))
    if pivots.min() < _PIVOT_RTOL * scale:
        raise SingularSystemError(
            f"{system.component}-system is resonant: pivot {pivots.min():.3e} "
            f"below {_PIVOT_RTOL:.0e} x scale {scale:.3e}"
        )
    f = scipy.linalg.lu_solve((lu, piv), system.rhs, check_finite=False)
    report = SolveReport(
        converged=True,
        sweeps_used=0,
        final_residual=system.residual(f),
        method_used=SolverMethod.DIRECT,
    )
    return f, report


def solve_iterative(
    system: ScalarSystem, options: SolveOptions | None = None
) -> tuple[np.ndarray, SolveReport]:
    """Solve by Gauss-Seidel (or SOR) sweeps in ascending atom index.

    Starts from ``f = rhs`` and updates
    ``f_j <- (1 - w) f_j + w (rhs_j + sum_l C_{lj} f_l)`` with the latest
    values.  Stops when the largest per-entry change in a sweep drops
    below ``options.tolerance`` or the sweep budget is exhausted.
    Non-convergence is not an error: the last iterate is returned with
    ``converged=False`` and the caller decides the fallback policy.
    """
    options = options or SolveOptions(method=SolverMethod.GAUSS_SEIDEL)
    omega = 1.0 if options.method is not SolverMethod.SOR else options.relaxation
    method = (
        SolverMethod.SOR if options.method is SolverMethod.SOR else SolverMethod.GAUSS_SEIDEL
    )
    n = system.n
    rhs = system.rhs
    row = system.coupling_row
    # kernel[n - 1 + m] = row[|m|]: one strided view per atom gives the
    # full coupling row without materializing the dense matrix.
    kernel = np.concatenate((row[:0:-1], row))
    f = rhs.copy()
    converged = False
    sweeps = 0
    for sweeps in range(1, options.max_sweeps + 1):
        delta = 0.0
        for i in range(n):
            coupled = kernel[n - 1 - i : 2 * n - 1 - i] @ f
            new = (1.0 - omega) * f[i] + omega * (rhs[i] + coupled)
            change = abs(new - f[i])
            if change > delta:
                delta = change
            f[i] = new
        if delta < options.tolerance:
            converged = True
            break
    report = SolveReport(
        converged=converged,
        sweeps_used=sweeps,
        final_residual=system.residual(f),
        method_used=method,
    )
    return f, report


def solve(
    system: ScalarSystem, options: SolveOptions | None = None
) -> tuple[np.ndarray, SolveReport]:
    """Dispatch to the solver selected in ``options`` (direct by default)."""
    options = options or SolveOptions()
    if options.method is SolverMethod.DIRECT:
        return solve_direct(system)
    return solve_iterative(system, options)


def solve_mode(
    chain: ChainSpec,
    mode: ModeSpec,
    options: SolveOptions | None = None,
    return_reports: bool = False,
) -> FieldProfile | tuple[FieldProfile, dict[str, SolveReport]]:
    """Solve the driven component systems of one mode.

    Components not driven by the mode's polarization are exactly zero and
    skipped.  With ``return_reports=True`` the per-component solve reports
    are returned alongside the profile.
    """
    values = np.zeros((chain.n_atoms, 3), dtype=complex)
    reports: dict[str, SolveReport] = {}
    for k, component in enumerate(COMPONENTS):
        if drive_scale(component, mode) == 0.0:
            continue
        system = assemble(chain, mode, component)
        f, report = solve(system, options)
        values[:, k] = f
        reports[component] = report
    profile = FieldProfile(values=values, mode=mode, chain=chain)
    if return_reports:
        return profile, reports
    return profile


def extract_amplitudes(
    chain: ChainSpec,
    options: SolveOptions | None = None,
    z_mode: ZMode = ZMode.PAPER,
    return_reports: bool = False,
) -> AmplitudeProfile | tuple[AmplitudeProfile, dict[str, SolveReport]]:
    """Numeric per-atom amplitude factors ``T_j = f_j / E_j``.

    Extraction angles are fixed where the dividing free-field projection
    is exactly 1: the y factors come from the perpendicular solve at
    theta = pi/2, the x factors from the parallel solve at theta = 0, and
    (in EQUATION mode) the z factors from the parallel solve at
    theta = pi/2.  PAPER mode sets ``tz = -2 * tx`` instead of solving
    the longitudinal system.
    """
    reports: dict[str, SolveReport] = {}

    perp = ModeSpec(theta=math.pi / 2, polarization=Polarization.PERPENDICULAR)
    f_y, reports["y"] = solve(assemble(chain, perp, "y"), options)
    ty = f_y  # E_j = 1 at theta = pi/2

    axial = ModeSpec(theta=0.0, polarization=Polarization.PARALLEL)
    f_x, reports["x"] = solve(assemble(chain, axial, "x"), options)
    tx = f_x / free_field_factors(chain.n_atoms, 0.0, chain.ka0)

    if z_mode is ZMode.PAPER:
        tz = -2.0 * tx
    else:
        grazing = ModeSpec(theta=math.pi / 2, polarization=Polarization.PARALLEL)
        f_z, reports["z"] = solve(assemble(chain, grazing, "z"), options)
        tz = f_z  # E_j = 1 at theta = pi/2

    profile = AmplitudeProfile(tx=tx, ty=ty, tz=tz, method=AmplitudeMethod.NUMERIC, z_mode=z_mode)
    if return_reports:
        return profile, reports
    return profile


def signed_modulus(value: complex) -> float:
    """Magnitude of a nearly-real complex number carrying the sign of its
    real part; collapses numeric amplitude factors to the real values the
    analytic formulas produce."""
    value = complex(value)
    return math.copysign(abs(value), value.real) if value != 0 else 0.0


def table_triplet(profile: AmplitudeProfile) -> tuple[float, float, float]:
    """(end, next-to-end, mid-chain) transverse amplitude magnitudes."""
    if profile.n_atoms < 3:
        raise ValueError("need at least 3 atoms for end/next/interior amplitudes")
    tx = profile.tx
    mid = mid_chain_index(profile.n_atoms)
    return (
        signed_modulus(tx[0]),
        signed_modulus(tx[1]),
        signed_modulus(tx[mid - 1]),
    )
