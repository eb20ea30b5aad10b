"""Second-moment engine for zero-mean Gaussian bosonic states.

A zero-mean multimode Gaussian state is fully described by two complex
matrices of second moments,

    n[i, j] = <a_i^dag a_j>   (Hermitian),
    m[i, j] = <a_i a_j>       (symmetric),

where ``a_i`` annihilates mode ``i``.  All state transformations used here
are linear (Bogoliubov) maps

    b_i = sum_j A[i, j] a_j + B[i, j] a_j^dag,

under which the moment matrices transform by congruence.  Photon-number
moments follow from Wick's theorem for zero-mean Gaussian states:

    Var(N_i)        = n_ii (n_ii + 1) + |m_ii|^2,
    Cov(N_i, N_j)   = |n_ij|^2 + |m_ij|^2          (i != j).

States are immutable values; every operation returns a new state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERMITICITY_TOL = 1e-12
PHYSICALITY_EIG_TOL = -1e-10


def _as_complex_matrix(a) -> np.ndarray:
    arr = np.array(a, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"moment matrix must be square, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class GaussianState:
    """Zero-mean Gaussian bosonic state held as (n, m) moment matrices.

    Parameters
    ----------
    n:
        Hermitian matrix of normally ordered moments ``<a_i^dag a_j>``.
    m:
        Symmetric matrix of anomalous moments ``<a_i a_j>``.

    Construction validates Hermiticity/symmetry (entrywise ``1e-12``),
    non-negative real occupations on the diagonal of ``n``, and physicality
    of the augmented moment matrix ``[[n + I, m], [m*, n^T]]`` (positive
    semidefinite within eigenvalue tolerance ``-1e-10``).
    """

    n: np.ndarray
    m: np.ndarray

    def __post_init__(self):
        n = _as_complex_matrix(self.n)
        m = _as_complex_matrix(self.m)
        if n.shape != m.shape:
            raise ValueError(f"n and m must have equal shapes, got {n.shape} and {m.shape}")
        if np.max(np.abs(n - n.conj().T), initial=0.0) > HERMITICITY_TOL:
            raise ValueError("n matrix is not Hermitian within tolerance")
        if np.max(np.abs(m - m.T), initial=0.0) > HERMITICITY_TOL:
            raise ValueError("m matrix is not symmetric within tolerance")
        diag = np.diagonal(n)
        if np.any(diag.real < -HERMITICITY_TOL):
            raise ValueError("mode occupations must be non-negative")
        # canonicalize to exact Hermitian/symmetric form before the PSD check
        n = 0.5 * (n + n.conj().T)
        m = 0.5 * (m + m.T)
        eig_min = np.linalg.eigvalsh(_augmented(n, m, vacuum_term=True)).min()
        if eig_min < PHYSICALITY_EIG_TOL * max(1.0, np.abs(diag.real).max()):
            raise ValueError(f"unphysical moment matrices (min eigenvalue {eig_min:.3e})")
        n.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "m", m)

    @property
    def mode_count(self) -> int:
        return self.n.shape[0]

    def occupation(self, mode: int) -> float:
        """Mean photon number ``<a_mode^dag a_mode>``."""
        _check_mode(self, mode)
        return float(self.n[mode, mode].real)


def _augmented(n: np.ndarray, m: np.ndarray, vacuum_term: bool) -> np.ndarray:
    d = n.shape[0]
    top = n + np.eye(d) if vacuum_term else n
    return np.block([[top, m], [m.conj(), n.T]])


def _check_mode(state: GaussianState, mode: int):
    if not (0 <= mode < state.mode_count):
        raise IndexError(f"mode {mode} out of range for {state.mode_count}-mode state")


def _check_mode_pair(state: GaussianState, mode_a: int, mode_b: int):
    _check_mode(state, mode_a)
    _check_mode(state, mode_b)
    if mode_a == mode_b:
        raise ValueError("the two modes must be distinct")


def thermal_state(mean_photons: float) -> GaussianState:
    """Single-mode thermal state with the given mean photon number."""
    if mean_photons < 0:
        raise ValueError(f"mean photon number must be non-negative, got {mean_photons}")
    return GaussianState(n=np.array([[mean_photons]]), m=np.zeros((1, 1)))


def tmsv_state(n_s: float) -> GaussianState:
    """Two-mode squeezed vacuum with ``n_s`` photons per mode.

    The anomalous cross moment carries the full quantum correlation
    ``sqrt(n_s (n_s + 1))``.
    """
    if n_s < 0:
        raise ValueError(f"mean photon number must be non-negative, got {n_s}")
    c_q = np.sqrt(n_s * (n_s + 1.0))
    return GaussianState(
        n=np.diag([n_s, n_s]).astype(complex),
        m=np.array([[0.0, c_q], [c_q, 0.0]], dtype=complex),
    )


def tensor(a: GaussianState, b: GaussianState) -> GaussianState:
    """Product state of two independent states (modes of ``b`` appended)."""
    da, db = a.mode_count, b.mode_count
    n = np.zeros((da + db, da + db), dtype=np.complex128)
    m = np.zeros_like(n)
    n[:da, :da] = a.n
    n[da:, da:] = b.n
    m[:da, :da] = a.m
    m[da:, da:] = b.m
    return GaussianState(n=n, m=m)


def reduced(state: GaussianState, modes) -> GaussianState:
    """Reduced state of the listed modes (partial trace over the rest)."""
    modes = list(modes)
    for mode in modes:
        _check_mode(state, mode)
    idx = np.ix_(modes, modes)
    return GaussianState(n=state.n[idx], m=state.m[idx])


def _apply_bogoliubov(state: GaussianState, a_mat: np.ndarray, b_mat: np.ndarray) -> GaussianState:
    """Transform moments under ``b = A a + B a^dag``.

    With ``nT = n^T + I`` (anti-normally ordered block) the new moments are

        n' = conj(A) n A^T + conj(A) conj(m) B^T + conj(B) m A^T + conj(B) nT B^T
        m' = A m A^T + A nT B^T + B n A^T + B conj(m) B^T
    """
    n, m = state.n, state.m
    n_anti = n.T + np.eye(state.mode_count)
    a_c, b_c = a_mat.conj(), b_mat.conj()
    n_new = (
        a_c @ n @ a_mat.T
        + a_c @ m.conj() @ b_mat.T
        + b_c @ m @ a_mat.T
        + b_c @ n_anti @ b_mat.T
    )
    m_new = (
        a_mat @ m @ a_mat.T
        + a_mat @ n_anti @ b_mat.T
        + b_mat @ n @ a_mat.T
        + b_mat @ m.conj() @ b_mat.T
    )
    return GaussianState(n=n_new, m=m_new)


def apply_two_mode_squeezer(
    state: GaussianState,
    mode_a: int,
    mode_b: int,
    gain: float,
    inverse: bool = False,
) -> GaussianState:
    """Two-mode squeezing interaction between ``mode_a`` and ``mode_b``.

    Implements the Bogoliubov map

        b_a = sqrt(G) a_a + sqrt(G - 1) a_b^dag,
        b_b = sqrt(G) a_b + sqrt(G - 1) a_a^dag,

    with gain ``G >= 1``.  ``inverse=True`` applies the inverse map (the
    same structure with the sign of the ``sqrt(G - 1)`` terms flipped).
    """
    _check_mode_pair(state, mode_a, mode_b)
    if gain < 1.0:
        raise ValueError(f"gain must be >= 1, got {gain}")
    d = state.mode_count
    cosh = np.sqrt(gain)
    sinh = np.sqrt(gain - 1.0) * (-1.0 if inverse else 1.0)
    a_mat = np.eye(d, dtype=np.complex128)
    b_mat = np.zeros((d, d), dtype=np.complex128)
    a_mat[mode_a, mode_a] = cosh
    a_mat[mode_b, mode_b] = cosh
    b_mat[mode_a, mode_b] = sinh
    b_mat[mode_b, mode_a] = sinh
    return _apply_bogoliubov(state, a_mat, b_mat)


def apply_beam_splitter(
    state: GaussianState, mode_a: int, mode_b: int, transmissivity: float
) -> GaussianState:
    """Beam splitter coupling ``mode_a`` and ``mode_b``.

    The transmitted port is ``c_a = sqrt(eta) a_a + sqrt(1 - eta) a_b``; the
    unitary completion is fixed as ``c_b = -sqrt(1 - eta) a_a + sqrt(eta) a_b``
    (only mode ``a`` statistics are consumed downstream, so the completion
    sign is a convention).
    """
    _check_mode_pair(state, mode_a, mode_b)
    if not 0.0 <= transmissivity <= 1.0:
        raise ValueError(f"transmissivity must lie in [0, 1], got {transmissivity}")
    d = state.mode_count
    root_t = np.sqrt(transmissivity)
    root_r = np.sqrt(1.0 - transmissivity)
    a_mat = np.eye(d, dtype=np.complex128)
    a_mat[mode_a, mode_a] = root_t
    a_mat[mode_a, mode_b] = root_r
    a_mat[mode_b, mode_a] = -root_r
    a_mat[mode_b, mode_b] = root_t
    return _apply_bogoliubov(state, a_mat, np.zeros((d, d), dtype=np.complex128))


def mean_photon(state: GaussianState, mode: int) -> float:
    """Mean photon number of one mode."""
    return state.occupation(mode)


def photon_variance(state: GaussianState, mode: int) -> float:
    """Photon-number variance of one mode (Wick's theorem).

    ``Var(N) = n (n + 1) + |m|^2`` with ``n = n_ii`` and ``m = m_ii``;
    reduces to the thermal value ``n (n + 1)`` for phase-insensitive modes.
    """
    _check_mode(state, mode)
    occ = state.n[mode, mode].real
    return float(occ * (occ + 1.0) + np.abs(state.m[mode, mode]) ** 2)


def photon_covariance(state: GaussianState, mode_a: int, mode_b: int) -> float:
    """Photon-number covariance of two distinct modes (Wick's theorem).

    ``Cov(N_a, N_b) = |n_ab|^2 + |m_ab|^2``.
    """
    _check_mode_pair(state, mode_a, mode_b)
    return float(
        np.abs(state.n[mode_a, mode_b]) ** 2 + np.abs(state.m[mode_a, mode_b]) ** 2
    )


def is_p_representable(state: GaussianState) -> bool:
    """Whether a classical (positive Glauber-Sudarshan) description exists.

    True iff the normally ordered augmented matrix ``[[n, m], [m*, n^T]]``
    is positive semidefinite (within eigenvalue tolerance ``-1e-10``), in
    which case photon statistics can be sampled as a complex Gaussian
    amplitude followed by conditionally Poissonian counts.
    """
    eig_min = np.linalg.eigvalsh(_augmented(state.n, state.m, vacuum_term=False)).min()
    scale = max(1.0, float(np.abs(np.diagonal(state.n).real).max(initial=0.0)))
    return bool(eig_min >= PHYSICALITY_EIG_TOL * scale)
