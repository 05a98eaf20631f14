"""Per-configuration estimators: amplitudes, Wilson loops, and the
off-diagonal electric term F_P evaluated through a constant-size Gaussian map.

F_P on link l with current value q:

    F_P(Q) = 2^{-F} * f(Gamma_v; q) * nu(Q) / |psi(Q)|^2

where Gamma_v is the Gaussian-map output covariance of the link's 4F open
Majorana modes, nu = sqrt(det((1 - Gamma~_in D~)/2)) is the contracted-system
overlap (drop the link's blocks), and |psi(Q)|^2 = sqrt(det((1 - Gamma_in D)/2)).
All three share the kernel C = 1 - Gamma_in(Q) D: nu/|psi|^2 =
2^{2F} sqrt(det (C^{-1})_oo), so a cached C^{-1} makes F_P constant-size work.

f is the expectation of the flip operator exp(i pi n_tail) w |vac><vac| w^dag
on the link, expanded in commuting two-mode factors (one per nonzero W entry);
each factor contributes four quadratic Majorana terms, and for F=2 the product
becomes a 16-term Pfaffian sum over 4x4 submatrices of Gamma_v. The full
complex value is formed and the real part taken (the anti-Hermitian part sums
to zero over configurations; tests check the residue).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ansatz import AnsatzState
from .gaussian import pf4
from .lattice import Lattice

DEGENERATE_FLAG = "degenerate-contraction"


# ---- diagonal observables --------------------------------------------------


def amplitude_sq(state: AnsatzState, q: np.ndarray) -> float:
    """|psi(Q)|^2 up to a configuration-independent positive constant."""
    n = state.layout.n_maj
    c = np.eye(n) - state.gamma_in(q) @ state.D
    det = float(np.linalg.det(c / 2.0))
    return max(det, 0.0) ** 0.5


def plaquette_value(lat: Lattice, q: np.ndarray, p: int) -> int:
    return int(1 - 2 * (int(q[lat.plaquette_links(p)].sum()) % 2))


def wilson_value(lat: Lattice, q: np.ndarray, loop_links: np.ndarray) -> int:
    return int(1 - 2 * (int(q[loop_links].sum()) % 2))


# ---- electric term -----------------------------------------------------------


def link_flip_factors(state: AnsatzState, link: int, q_link: int):
    """Commuting two-mode factors of the link flip operator, as lists of
    (coefficient, i, j) quadratic Majorana terms in the canonical 4F-mode
    ordering [h_f g1, h_f g2, t_f g1, t_f g2]_f."""
    W = state.W[state.link_direction(link) - 1]
    F = state.F
    sign = -1.0 if q_link else 1.0
    factors = []
    for alpha in range(F):
        for beta in range(F):
            if W[alpha, beta] == 0:
                continue
            c = sign * W[alpha, beta]
            h1, h2 = 4 * alpha, 4 * alpha + 1
            t1, t2 = 4 * beta + 2, 4 * beta + 3
            factors.append(
                [
                    (0.5 * c.real, t1, h1),
                    (-0.5 * c.real, t2, h2),
                    (-0.5 * c.imag, t1, h2),
                    (-0.5 * c.imag, t2, h1),
                    (0.5j, h1, h2),
                    (0.5j, t1, t2),
                ]
            )
    if len(factors) != F:
        raise ValueError("W must have exactly one nonzero entry per row/column")
    return factors


def _sorted_quartic(i1: int, j1: int, i2: int, j2: int) -> tuple[tuple[int, int, int, int], int]:
    idx = (i1, j1, i2, j2)
    order = sorted(range(4), key=lambda k: idx[k])
    inv = sum(1 for a in range(4) for b in range(a + 1, 4) if order[a] > order[b])
    return tuple(idx[k] for k in order), (-1) ** inv


def flip_operator_value(gv: np.ndarray, factors) -> complex:
    """<flip operator> in the Gaussian-map output state, complex."""
    if len(factors) == 1:
        return sum(c * (-1j) * gv[i, j] for c, i, j in factors[0])
    total = 0.0 + 0.0j
    for c1, i1, j1 in factors[0]:
        for c2, i2, j2 in factors[1]:
            if c1 == 0.0 or c2 == 0.0:
                continue
            srt, s = _sorted_quartic(i1, j1, i2, j2)
            total += c1 * c2 * s * (-pf4(gv, *srt))
    return total


def flip_operator_value_and_grad(gv: np.ndarray, factors) -> tuple[complex, np.ndarray]:
    """Value and d(value)/d(Gamma_v) as an entrywise partial matrix."""
    n = gv.shape[0]
    grad = np.zeros((n, n), dtype=complex)
    if len(factors) == 1:
        val = 0.0 + 0.0j
        for c, i, j in factors[0]:
            val += c * (-1j) * gv[i, j]
            grad[i, j] += c * (-1j)
        return val, grad
    val = 0.0 + 0.0j
    for c1, i1, j1 in factors[0]:
        for c2, i2, j2 in factors[1]:
            if c1 == 0.0 or c2 == 0.0:
                continue
            (a, b, cc, d), s = _sorted_quartic(i1, j1, i2, j2)
            coef = -s * c1 * c2
            val += coef * pf4(gv, a, b, cc, d)
            grad[a, b] += coef * gv[cc, d]
            grad[cc, d] += coef * gv[a, b]
            grad[a, cc] -= coef * gv[b, d]
            grad[b, d] -= coef * gv[a, cc]
            grad[a, d] += coef * gv[b, cc]
            grad[b, cc] += coef * gv[a, d]
    return val, grad


@dataclass
class ElectricResult:
    value: float
    complex_value: complex
    flag: str | None = None


def electric_term(state: AnsatzState, q: np.ndarray, link: int) -> ElectricResult:
    """F_P(Q) on one link, dense (non-cached) evaluation."""
    lay = state.layout
    o = lay.link_maj[link]
    mask = np.ones(lay.n_maj, dtype=bool)
    mask[o] = False
    c_idx = np.nonzero(mask)[0]

    gin = state.gamma_in(q)
    gt = gin[np.ix_(c_idx, c_idx)]
    d = state.D
    d_oo = d[np.ix_(o, o)]
    d_oc = d[np.ix_(o, c_idx)]
    d_cc = d[np.ix_(c_idx, c_idx)]

    n = lay.n_maj
    cmat = np.eye(n) - gin @ d
    sign_full, logdet_full = np.linalg.slogdet(cmat)
    if sign_full <= 0 or not np.isfinite(logdet_full):
        return ElectricResult(0.0, 0.0j, DEGENERATE_FLAG)
    ccc = np.eye(len(c_idx)) - gt @ d_cc
    sign_cc, logdet_cc = np.linalg.slogdet(ccc)
    if sign_cc <= 0 or not np.isfinite(logdet_cc):
        return ElectricResult(0.0, 0.0j, DEGENERATE_FLAG)
    # nu/|psi|^2 = 2^{2F} sqrt(det C_cc / det C)
    ratio = 2.0 ** (2 * state.F) * np.exp(0.5 * (logdet_cc - logdet_full))

    try:
        gv = d_oo + d_oc @ np.linalg.solve(d_cc + gt, d_oc.T)
    except np.linalg.LinAlgError:
        return ElectricResult(0.0, 0.0j, DEGENERATE_FLAG)
    factors = link_flip_factors(state, link, int(q[link]))
    f = flip_operator_value(gv, factors)
    val = f * ratio / 2.0**state.F
    return ElectricResult(float(val.real), complex(val))


def electric_F_P(state: AnsatzState, q: np.ndarray, link: int) -> float:
    return electric_term(state, q, link).value


def _flip_value_batch(gv: np.ndarray, factors) -> np.ndarray:
    """Vectorized flip_operator_value over a stack of Gamma_v matrices."""
    n_cfg = gv.shape[0]
    if len(factors) == 1:
        total = np.zeros(n_cfg, dtype=complex)
        for c, i, j in factors[0]:
            if c != 0.0:
                total += c * (-1j) * gv[:, i, j]
        return total
    total = np.zeros(n_cfg, dtype=complex)
    for c1, i1, j1 in factors[0]:
        for c2, i2, j2 in factors[1]:
            if c1 == 0.0 or c2 == 0.0:
                continue
            (a, b, cc, d), s = _sorted_quartic(i1, j1, i2, j2)
            pf = gv[:, a, b] * gv[:, cc, d] - gv[:, a, cc] * gv[:, b, d] + gv[:, a, d] * gv[:, b, cc]
            total += -s * c1 * c2 * pf
    return total


def electric_term_batch(
    state: AnsatzState,
    qs: np.ndarray,
    link: int,
    gin_stack: np.ndarray | None = None,
    valid: np.ndarray | None = None,
):
    """F_P over a batch of configurations (complex values, flag mask).

    Entries where the full or contracted kernel is singular (or `valid` is
    False) are returned as 0 with the flag set; those configurations carry
    zero probability weight wherever this is consumed.
    """
    lay = state.layout
    o = lay.link_maj[link]
    mask = np.ones(lay.n_maj, dtype=bool)
    mask[o] = False
    c_idx = np.nonzero(mask)[0]

    if gin_stack is None:
        gin_stack = state.gamma_in_stack(qs)
    d = state.D
    d_oo = d[np.ix_(o, o)]
    d_oc = d[np.ix_(o, c_idx)]
    d_cc = d[np.ix_(c_idx, c_idx)]

    n = lay.n_maj
    cfull = np.eye(n) - gin_stack @ d
    sgn_f, ld_f = np.linalg.slogdet(cfull)
    gt = gin_stack[:, c_idx[:, None], c_idx[None, :]]
    ccc = np.eye(len(c_idx)) - gt @ d_cc
    sgn_c, ld_c = np.linalg.slogdet(ccc)

    ok = (sgn_f > 0) & (sgn_c > 0) & np.isfinite(ld_f) & np.isfinite(ld_c)
    if valid is not None:
        ok &= valid
    ratio = np.zeros(len(qs))
    ratio[ok] = 2.0 ** (2 * state.F) * np.exp(0.5 * (ld_c[ok] - ld_f[ok]))

    kern = d_cc + gt
    rhs = np.broadcast_to(d_oc.T, (len(qs),) + d_oc.T.shape)
    try:
        sol = np.linalg.solve(kern, rhs)
        gv = d_oo + d_oc @ sol
    except np.linalg.LinAlgError:
        # fall back to per-config evaluation when some kernel is singular
        vals = np.zeros(len(qs), dtype=complex)
        flagged = np.zeros(len(qs), dtype=bool)
        for i, q in enumerate(qs):
            if valid is not None and not valid[i]:
                flagged[i] = True
                continue
            res = electric_term(state, q, link)
            vals[i] = res.complex_value
            flagged[i] = res.flag is not None
        return vals, flagged

    ql = qs[:, link].astype(np.int64)
    f0 = _flip_value_batch(gv, link_flip_factors(state, link, 0))
    f1 = _flip_value_batch(gv, link_flip_factors(state, link, 1))
    f = np.where(ql == 0, f0, f1)
    vals = f * ratio / 2.0**state.F
    vals[~ok] = 0.0
    return vals, ~ok


# ---- energy assembly ---------------------------------------------------------


@dataclass
class EnergyBreakdown:
    total: float
    electric: float
    magnetic: float
    total_err: float = 0.0
    electric_err: float = 0.0
    magnetic_err: float = 0.0


def assemble_energy(
    lam: float,
    mean_P: float,
    mean_plaq: float,
    lat: Lattice,
    err_P: float = 0.0,
    err_plaq: float = 0.0,
) -> EnergyBreakdown:
    """E = n_l lambda (1 - <P>) + n_p (1 - <plaq>)."""
    if lam <= 0:
        raise ValueError(f"coupling lambda must be positive, got {lam}")
    e_el = lat.n_links * lam * (1.0 - mean_P)
    e_mag = lat.n_plaquettes * (1.0 - mean_plaq)
    err_el = lat.n_links * lam * err_P
    err_mag = lat.n_plaquettes * err_plaq
    return EnergyBreakdown(
        total=e_el + e_mag,
        electric=e_el,
        magnetic=e_mag,
        total_err=float(np.hypot(err_el, err_mag)),
        electric_err=err_el,
        magnetic_err=err_mag,
    )
