"""Dense Fock-space brute force: the independent oracle for Gaussian algebra.

Everything here works on explicit 2**n state vectors (n <= 16 modes) with
Jordan-Wigner sign bookkeeping on the occupation-number basis (mode j is bit
j of the basis index). Deliberately independent of gaussian.py: no covariance
formulas, only operator algebra, so the two can check each other.

Also hosts the signed pairing-state overlap in Pfaffian form and the O(n^3)
Parlett-Reid Pfaffian it needs; those are certified against the dense
enumeration in the test suite before anything else relies on them.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

MAX_MODES = 16


def _check_n(n: int) -> None:
    if not 1 <= n <= MAX_MODES:
        raise ValueError(f"Fock oracle supports 1..{MAX_MODES} modes, got {n}")


def _parity_below(codes: np.ndarray, j: int) -> np.ndarray:
    """(-1)**(number of occupied modes below j) per basis code."""
    below = codes & ((1 << j) - 1)
    par = np.zeros_like(codes)
    while j > 0:
        j -= 1
        par ^= (below >> j) & 1
    return 1 - 2 * par


def creation_op(n: int, j: int) -> sp.csr_matrix:
    _check_n(n)
    dim = 1 << n
    codes = np.arange(dim, dtype=np.int64)
    empty = (codes >> j) & 1 == 0
    src = codes[empty]
    dst = src | (1 << j)
    data = _parity_below(src, j).astype(float)
    return sp.csr_matrix((data, (dst, src)), shape=(dim, dim))


def annihilation_op(n: int, j: int) -> sp.csr_matrix:
    return creation_op(n, j).T.tocsr()


def majorana_ops(n: int) -> list[sp.csr_matrix]:
    """Interleaved (g1_j, g2_j) Majorana operators."""
    ops = []
    for j in range(n):
        cd = creation_op(n, j)
        c = cd.T.tocsr()
        ops.append((c + cd).tocsr())
        ops.append((1j * (c - cd)).tocsr())
    return ops


def vacuum(n: int) -> np.ndarray:
    v = np.zeros(1 << n, dtype=complex)
    v[0] = 1.0
    return v


def apply_pair_exponential(n: int, terms, v: np.ndarray) -> np.ndarray:
    """exp(sum_k c_k a^dag_{i_k} a^dag_{j_k}) v, exact via the nilpotent series.

    terms: iterable of (i, j, c) with i != j.
    """
    cds = [creation_op(n, j) for j in range(n)]
    out = v.copy()
    term = v.copy()
    for k in range(1, n // 2 + 2):
        nxt = np.zeros_like(term)
        for i, j, c in terms:
            nxt += c * (cds[i] @ (cds[j] @ term))
        term = nxt / k
        if not np.any(term):
            break
        out += term
    return out


def state_from_pairing(m: np.ndarray) -> np.ndarray:
    """exp(1/2 M_ij a^dag_i a^dag_j)|vac> as a dense vector (unnormalized)."""
    m = np.asarray(m, dtype=complex)
    n = m.shape[0]
    _check_n(n)
    terms = [(i, j, m[i, j]) for i in range(n) for j in range(i + 1, n) if m[i, j] != 0]
    return apply_pair_exponential(n, terms, vacuum(n))


def majorana_cov(n: int, v: np.ndarray) -> np.ndarray:
    """Majorana covariance (i/2)<[g_a, g_b]> / <v|v> of an arbitrary vector."""
    ops = majorana_ops(n)
    gv = np.array([op @ v for op in ops])
    gram = gv.conj() @ gv.T  # gram[a,b] = <v| g_a g_b |v>
    norm2 = float(np.vdot(v, v).real)
    # hermitian gram: (i/2)<[g_a,g_b]> = -Im(gram)/norm^2
    return -gram.imag / norm2


def overlap(v1: np.ndarray, v2: np.ndarray) -> complex:
    return complex(np.vdot(v1, v2))


def empty_projector_diag(n: int, modes) -> np.ndarray:
    """Diagonal of the projector onto 'all listed modes empty'."""
    codes = np.arange(1 << n, dtype=np.int64)
    mask = 0
    for j in modes:
        mask |= 1 << j
    return (codes & mask == 0).astype(float)


def parity_phase_diag(n: int, modes) -> np.ndarray:
    """Diagonal of exp(i pi sum_{j in modes} n_j)."""
    codes = np.arange(1 << n, dtype=np.int64)
    par = np.zeros_like(codes)
    for j in modes:
        par ^= (codes >> j) & 1
    return (1 - 2 * par).astype(float)


def expectation(v: np.ndarray, op_matvec, w: np.ndarray | None = None) -> complex:
    """<v|op|w> with op given as a callable or sparse matrix."""
    if w is None:
        w = v
    ow = op_matvec @ w if sp.issparse(op_matvec) else op_matvec(w)
    return complex(np.vdot(v, ow))


# ---- Pfaffians beyond toy sizes -------------------------------------------


def pfaffian_ltl(a: np.ndarray):
    """Parlett-Reid Pfaffian with partial pivoting, O(n^3), complex-capable."""
    a = np.array(a, dtype=complex)
    n = a.shape[0]
    if n % 2 != 0:
        return 0.0 + 0.0j
    val = 1.0 + 0.0j
    for k in range(0, n - 1, 2):
        kp = k + 1 + int(np.abs(a[k + 1 :, k]).argmax())
        if kp != k + 1:
            a[[k + 1, kp], k:] = a[[kp, k + 1], k:]
            a[k:, [k + 1, kp]] = a[k:, [kp, k + 1]]
            val = -val
        if a[k + 1, k] == 0.0:
            return 0.0 + 0.0j
        val *= a[k, k + 1]
        if k + 2 < n:
            tau = a[k, k + 2 :] / a[k, k + 1]
            col = a[k + 2 :, k + 1]
            a[k + 2 :, k + 2 :] += np.outer(tau, col)
            a[k + 2 :, k + 2 :] -= np.outer(col, tau)
    return val


def pairing_overlap(m1: np.ndarray, m2: np.ndarray):
    """Signed overlap <psi(M1)|psi(M2)> of unnormalized pairing states.

    Pfaffian form of the Onishi overlap; the branch/sign convention is pinned
    by the dense-enumeration tests (test_fock_oracle).
    """
    m1 = np.asarray(m1, dtype=complex)
    m2 = np.asarray(m2, dtype=complex)
    n = m1.shape[0]
    if m2.shape != (n, n):
        raise ValueError("pairing matrices must have matching shape")
    x = np.zeros((2 * n, 2 * n), dtype=complex)
    x[:n, :n] = -m1.conj()
    x[:n, n:] = -np.eye(n)
    x[n:, :n] = np.eye(n)
    x[n:, n:] = m2
    sign = -1.0 if (n * (n + 1) // 2) % 2 else 1.0
    return sign * pfaffian_ltl(x)
