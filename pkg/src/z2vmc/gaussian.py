"""Fermionic Gaussian-state linear algebra on covariance matrices.

Conventions:
  * a pairing matrix M (complex, antisymmetric, n x n) parametrizes the
    unnormalized state exp(1/2 M_ij a_i^dag a_j^dag)|vac>
  * the Dirac covariance matrix lives in the ordered basis
    (a_1 .. a_n, a_1^dag .. a_n^dag) with entries (i/2)<[v_a, v_b]>
  * Majorana modes g1 = c + c^dag, g2 = i(c - c^dag) are interleaved
    (g1_1, g2_1, g1_2, g2_2, ...); the Majorana covariance
    G_ab = (i/2)<[g_a, g_b]> of a pure state is real, antisymmetric and
    satisfies G@G = -1
  * overlap_sq(G_L, G_R) = |<L|R>|^2 = sqrt(det((1 - G_L G_R)/2)) for
    normalized pure states
"""

from __future__ import annotations

import numpy as np

ANTISYM_TOL = 1e-10
REALITY_TOL = 1e-10
PURITY_TOL = 1e-8
DET_CLAMP = -1e-12
DRIFT_REBUILD = 1e-7
DRIFT_FAIL = 1e-5
REBUILD_INTERVAL = 10_000


class SingularParametrizationError(np.linalg.LinAlgError):
    """(1 - M conj(M)) is singular: a canonical-form |lambda_k| diverges."""


class InconsistentStateError(ValueError):
    """A covariance matrix violates reality/antisymmetry beyond tolerance."""


class NumericalFailureError(ArithmeticError):
    """An overlap determinant came out negative beyond roundoff."""


class DegenerateContractionError(np.linalg.LinAlgError):
    """The contracted overlap vanishes; the Gaussian map kernel is singular."""


class ZeroAmplitudeError(ZeroDivisionError):
    """det(1 - Gamma_in D) vanished: the configuration has |psi|^2 = 0."""


class CacheDriftError(ArithmeticError):
    """Incremental cache drifted beyond the hard failure threshold."""


def check_antisymmetric(m: np.ndarray, tol: float = ANTISYM_TOL, name: str = "matrix") -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    scale = max(1.0, float(np.abs(m).max()) if m.size else 1.0)
    resid = float(np.abs(m + m.T).max()) if m.size else 0.0
    if resid > tol * scale:
        raise InconsistentStateError(f"{name} not antisymmetric: residual {resid:.3e}")


def dirac_cov_from_M(m: np.ndarray) -> np.ndarray:
    """Dirac covariance of exp(1/2 M a^dag a^dag)|vac> in the (a, a^dag) basis.

    With K = (1 - M conj(M))^{-1}:

        Gamma^D = i [[ -K M,               1/2 K (1 + M conj(M)) ],
                     [ -1/2 conj(K)(1 + conj(M) M),  conj(K) conj(M) ]]
    """
    m = np.asarray(m, dtype=complex)
    check_antisymmetric(m, name="pairing matrix M")
    n = m.shape[0]
    mc = m.conj()
    x = m @ mc
    eye = np.eye(n)
    try:
        k = np.linalg.solve(eye - x, eye)
    except np.linalg.LinAlgError as exc:
        raise SingularParametrizationError(
            "1 - M conj(M) is singular (|lambda_k| -> inf in the canonical form)"
        ) from exc
    kc = k.conj()
    gd = np.empty((2 * n, 2 * n), dtype=complex)
    gd[:n, :n] = -k @ m
    gd[:n, n:] = 0.5 * k @ (eye + x)
    gd[n:, :n] = -0.5 * kc @ (eye + x.conj())
    gd[n:, n:] = kc @ mc
    return 1j * gd


def majorana_transform(n_modes: int) -> np.ndarray:
    """S with gamma = S (a, a^dag): rows interleave (g1_j, g2_j)."""
    s = np.zeros((2 * n_modes, 2 * n_modes), dtype=complex)
    for j in range(n_modes):
        s[2 * j, j] = 1.0
        s[2 * j, n_modes + j] = 1.0
        s[2 * j + 1, j] = 1j
        s[2 * j + 1, n_modes + j] = -1j
    return s


def majorana_from_dirac(gd: np.ndarray) -> np.ndarray:
    """Convert a Dirac covariance to the (real) interleaved Majorana basis."""
    gd = np.asarray(gd, dtype=complex)
    if gd.shape[0] % 2 != 0 or gd.shape[0] != gd.shape[1]:
        raise ValueError(f"Dirac covariance must be 2n x 2n, got {gd.shape}")
    s = majorana_transform(gd.shape[0] // 2)
    gm = s @ gd @ s.T
    resid = float(np.abs(gm.imag).max())
    if resid > REALITY_TOL * max(1.0, float(np.abs(gm.real).max())):
        raise InconsistentStateError(
            f"Majorana covariance has imaginary residue {resid:.3e} (non-pure input?)"
        )
    gm = gm.real
    check_antisymmetric(gm, name="Majorana covariance")
    return 0.5 * (gm - gm.T)


def majorana_cov_from_pairing(m: np.ndarray) -> np.ndarray:
    return majorana_from_dirac(dirac_cov_from_M(m))


def purity_defect(g: np.ndarray) -> float:
    """max |G@G + 1|; ~0 for pure-state covariances."""
    return float(np.abs(g @ g + np.eye(g.shape[0])).max())


def overlap_sq(gamma_in: np.ndarray, d: np.ndarray) -> float:
    """|<L|R>|^2 = sqrt(det((1 - Gamma_L Gamma_R)/2)) for normalized states."""
    if gamma_in.shape != d.shape:
        raise ValueError(f"dimension mismatch: {gamma_in.shape} vs {d.shape}")
    n = gamma_in.shape[0]
    det = float(np.linalg.det((np.eye(n) - gamma_in @ d) / 2.0).real)
    if det < DET_CLAMP:
        raise NumericalFailureError(f"overlap determinant {det:.3e} < {DET_CLAMP}")
    return float(np.sqrt(max(det, 0.0)))


def gaussian_map_out(
    d: np.ndarray,
    open_idx: np.ndarray,
    cont_idx: np.ndarray,
    gamma_in_c: np.ndarray,
) -> np.ndarray:
    """Covariance of the open modes after contracting `cont_idx` against the
    Gaussian projector state with (ket) covariance `gamma_in_c`:

        Gamma_v = D_oo + D_oc (D_cc + Gamma_in)^{-1} D_oc^T

    The projector covariance enters the kernel with reversed sign relative to
    the overlap formula (the bra side of |W><W| flips it); the sign is pinned
    by the Fock-space oracle tests.
    """
    open_idx = np.asarray(open_idx, dtype=np.int64)
    cont_idx = np.asarray(cont_idx, dtype=np.int64)
    if open_idx.size == 0:
        raise ValueError("no open modes: contracting everything is an overlap, not a map")
    d_oo = d[np.ix_(open_idx, open_idx)]
    if cont_idx.size == 0:
        return d_oo.copy()
    if gamma_in_c.shape != (cont_idx.size, cont_idx.size):
        raise ValueError(
            f"gamma_in_c has shape {gamma_in_c.shape}, expected {(cont_idx.size,) * 2}"
        )
    d_oc = d[np.ix_(open_idx, cont_idx)]
    d_cc = d[np.ix_(cont_idx, cont_idx)]
    try:
        sol = np.linalg.solve(d_cc + gamma_in_c, d_oc.T)
    except np.linalg.LinAlgError as exc:
        raise DegenerateContractionError("contraction kernel is singular") from exc
    gv = d_oo + d_oc @ sol
    check_antisymmetric(gv, name="Gaussian map output")
    return 0.5 * (gv - gv.T)


# ---- Pfaffians -----------------------------------------------------------


def pfaffian(a: np.ndarray) -> float:
    """Pfaffian by recursive first-row expansion (intended for dim <= 8)."""
    a = np.asarray(a)
    if a.shape[0] != a.shape[1] or a.shape[0] % 2 != 0:
        raise ValueError(f"Pfaffian needs an even-dimensional square matrix, got {a.shape}")
    check_antisymmetric(a, name="Pfaffian argument")
    return _pf_expand(a, tuple(range(a.shape[0])))


def _pf_expand(a: np.ndarray, idx: tuple[int, ...]):
    if not idx:
        return a.dtype.type(1.0)
    i0, rest = idx[0], idx[1:]
    total = a.dtype.type(0.0)
    for k, j in enumerate(rest):
        if a[i0, j] != 0:
            total += (-1) ** k * a[i0, j] * _pf_expand(a, rest[:k] + rest[k + 1 :])
    return total


def pfaffian_sub(gamma: np.ndarray, idx) -> float:
    """Pfaffian of the submatrix on the (strictly increasing) index list."""
    idx = np.asarray(idx, dtype=np.int64)
    if idx.size % 2 != 0:
        raise ValueError("index list must have even length")
    if idx.size and np.any(np.diff(idx) <= 0):
        raise ValueError("index list must be strictly increasing")
    return pfaffian(gamma[np.ix_(idx, idx)])


def pf4(g: np.ndarray, a: int, b: int, c: int, d: int):
    """Closed-form Pfaffian of the 4x4 submatrix on sorted indices (a,b,c,d)."""
    return g[a, b] * g[c, d] - g[a, c] * g[b, d] + g[a, d] * g[b, c]


# ---- incremental contraction cache ----------------------------------------


class ContractionCache:
    """Tracks (1 - Gamma_in D)^{-1} and det(1 - Gamma_in D) across local updates.

    Gamma_in changes by one link's Majorana block per Metropolis flip; the
    determinant ratio comes from the matrix-determinant lemma and the inverse
    is updated with the Woodbury identity. D is fixed and pure (D@D = -1), so
    the alternative kernels (D - Gamma_in) and (D^{-1} - Gamma_in) are exposed
    as cheap derived views.
    """

    def __init__(
        self,
        d: np.ndarray,
        gamma_in: np.ndarray,
        rebuild_interval: int = REBUILD_INTERVAL,
    ):
        self.d = d
        self.gamma_in = np.array(gamma_in, dtype=float)
        self.dim = d.shape[0]
        self.rebuild_interval = int(rebuild_interval)
        self.updates = 0
        self.last_drift = 0.0
        self._build()

    def _compute(self) -> tuple[np.ndarray, float, np.ndarray]:
        c = np.eye(self.dim) - self.gamma_in @ self.d
        sign, logabs = np.linalg.slogdet(c)
        if sign <= 0 or not np.isfinite(logabs):
            raise ZeroAmplitudeError("det(1 - Gamma_in D) <= 0: zero-amplitude configuration")
        return c, float(logabs), np.linalg.inv(c)

    def _build(self) -> None:
        _, self.logdet, self.cinv = self._compute()
        self.updates = 0

    # -- absolute quantities (log space avoids under/overflow) -------------

    @property
    def log_overlap_sq(self) -> float:
        """log |psi|^2 = 1/2 log det((1 - Gamma_in D)/2)."""
        return 0.5 * (self.logdet - self.dim * np.log(2.0))

    @property
    def overlap_sq(self) -> float:
        return float(np.exp(self.log_overlap_sq))

    # -- derived kernel views ----------------------------------------------

    def kernel_d_minus_gamma(self) -> np.ndarray:
        return self.d - self.gamma_in

    def kernel_dinv_minus_gamma(self) -> np.ndarray:
        # D pure => D^{-1} = -D
        return -self.d - self.gamma_in

    # -- low-rank updates ----------------------------------------------------

    def ratio_for_update(self, idx: np.ndarray, delta: np.ndarray):
        """|psi'|^2 / |psi|^2 for Gamma_in[ix(idx,idx)] += delta.

        Returns (ratio, detk, kmat) where detk = det(1 - Gamma'D)/det(1 - Gamma D);
        the |psi|^2 ratio is sqrt(detk) clamped at 0.
        """
        g = self.d[idx, :] @ self.cinv[:, idx]
        kmat = np.eye(len(idx)) - g @ delta
        detk = float(np.linalg.det(kmat))
        ratio = float(np.sqrt(detk)) if detk > 0.0 else 0.0
        return ratio, detk, kmat

    def apply_update(self, idx: np.ndarray, delta: np.ndarray, detk: float | None = None) -> None:
        """Commit Gamma_in[ix(idx,idx)] += delta (Woodbury update of the inverse)."""
        if detk is None:
            _, detk, _ = self.ratio_for_update(idx, delta)
        if detk <= 0.0:
            raise ZeroAmplitudeError("update leads to a zero-amplitude configuration")
        u = self.cinv[:, idx] @ delta  # C^{-1} U
        v = self.d[idx, :] @ self.cinv  # V C^{-1}
        mid = np.linalg.inv(np.eye(len(idx)) - v[:, idx] @ delta)
        self.cinv += u @ (mid @ v)
        self.logdet += np.log(detk)
        self.gamma_in[np.ix_(idx, idx)] += delta
        self.updates += 1
        if self.updates >= self.rebuild_interval:
            self.rebuild()

    def rebuild(self) -> float:
        """Recompute from scratch; record drift, fail hard above DRIFT_FAIL."""
        _, logdet, cinv = self._compute()
        scale = max(1.0, float(np.abs(cinv).max()))
        drift = max(
            float(np.abs(cinv - self.cinv).max()) / scale,
            abs(logdet - self.logdet) / max(1.0, abs(logdet)),
        )
        self.last_drift = drift
        self.logdet, self.cinv = logdet, cinv
        self.updates = 0
        if drift > DRIFT_FAIL:
            raise CacheDriftError(f"cache drift {drift:.3e} exceeds {DRIFT_FAIL}")
        return drift


def cached_contraction(d: np.ndarray, gamma_in: np.ndarray, **kwargs) -> ContractionCache:
    return ContractionCache(d, gamma_in, **kwargs)


def lowrank_update(cache: ContractionCache, idx: np.ndarray, delta: np.ndarray):
    """(cache, ratio) form of a link-local update; ratio 0 leaves the cache as-is."""
    ratio, detk, _ = cache.ratio_for_update(idx, delta)
    if ratio > 0.0:
        cache.apply_update(idx, delta, detk)
    return cache, ratio
