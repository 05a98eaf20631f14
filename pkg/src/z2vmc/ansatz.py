"""Gauged Gaussian fermionic PEPS ansatz for the Z2 gauge theory.

Virtual fermions: F modes per link end, 4F per site, ordered
(r_1, u_1, l_1, d_1[, r_2, u_2, l_2, d_2]) within a site; Majorana pairs
(g1, g2) interleaved per Dirac mode; sites are contiguous blocks.

The state is an overlap of two Gaussian states: a product over sites of
exp(T_ab a^dag_a a^dag_b)|vac> (covariance D, identical 8F x 8F blocks) and a
product over links of pair creators exp(W_ab h^dag_a t^dag_b)|vac>, gauged by
multiplying the outgoing-leg (r/u) modes with (-1)^q (covariance Gamma_in(Q),
one 4F x 4F Majorana block per link).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .gaussian import majorana_cov_from_pairing
from .lattice import HORIZONTAL, Lattice

ETA = np.exp(1j * np.pi / 4)

# leg order within a flavor block
LEG_R, LEG_U, LEG_L, LEG_D = 0, 1, 2, 3

PARAM_NAMES = {1: ("y", "z"), 2: ("z1", "y1", "z2", "y2", "a", "b", "c", "d")}


@dataclass(frozen=True)
class AnsatzParams:
    """Complex variational parameters; F=1: (y, z), F=2: (z1,y1,z2,y2,a,b,c,d)."""

    F: int
    params: tuple

    def __post_init__(self):
        if self.F not in (1, 2):
            raise ValueError(f"F must be 1 or 2, got {self.F}")
        expected = len(PARAM_NAMES[self.F])
        if len(self.params) != expected:
            raise ValueError(f"F={self.F} needs {expected} parameters, got {len(self.params)}")
        object.__setattr__(self, "params", tuple(complex(p) for p in self.params))

    def asarray(self) -> np.ndarray:
        return np.array(self.params, dtype=complex)

    def to_json(self) -> str:
        return json.dumps(
            {
                "F": self.F,
                "eta_convention": "exp(i*pi/4)",
                "params": [[p.real, p.imag] for p in self.params],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "AnsatzParams":
        obj = json.loads(text)
        return cls(obj["F"], tuple(complex(re, im) for re, im in obj["params"]))


def params_psi_E(F: int) -> AnsatzParams:
    """All parameters zero: the strong-coupling product state."""
    return AnsatzParams(F, (0.0,) * len(PARAM_NAMES[F]))


def params_psi_B() -> AnsatzParams:
    """F=2 point with b = (1/2) e^{i pi/4} (one root of b^4 = -1/16): toric-code state."""
    b = 0.5 * ETA
    return AnsatzParams(2, (0.0, 0.0, 0.0, 0.0, 0.0, b, 0.0, 0.0))


def build_T(p: AnsatzParams) -> np.ndarray:
    """Rotation-invariant antisymmetric pairing matrix on one site's 4F legs."""
    if p.F == 1:
        y, z = p.params
        t = np.array(
            [
                [0, -z, -1j * y, -1j * z],
                [z, 0, -1j * z, y],
                [1j * y, 1j * z, 0, z],
                [1j * z, -y, -z, 0],
            ],
            dtype=complex,
        )
    else:
        z1, y1, z2, y2, a, b, c, d = p.params
        t = np.array(
            [
                [0, -z1, -1j * y1, -1j * z1, 1j * a, 1j * b, 1j * c, 1j * d],
                [z1, 0, -1j * z1, y1, -d, -a, -b, -c],
                [1j * y1, 1j * z1, 0, z1, -1j * c, -1j * d, -1j * a, -1j * b],
                [1j * z1, -y1, -z1, 0, b, c, d, a],
                [-1j * a, d, 1j * c, -b, 0, -z2, -1j * y2, -1j * z2],
                [-1j * b, a, 1j * d, -c, z2, 0, -1j * z2, y2],
                [-1j * c, b, 1j * a, -d, 1j * y2, 1j * z2, 0, z2],
                [-1j * d, c, 1j * b, -a, 1j * z2, -y2, -z2, 0],
            ],
            dtype=complex,
        )
    assert np.abs(t + t.T).max() == 0.0
    return t


def rotation_R(F: int) -> np.ndarray:
    """Leg rotation r->u->l->d->r with phase eta, one cycle per flavor."""
    r0 = ETA * np.roll(np.eye(4), -1, axis=0)
    blocks = [r0] * F
    out = np.zeros((4 * F, 4 * F), dtype=complex)
    for f, blk in enumerate(blocks):
        out[4 * f : 4 * f + 4, 4 * f : 4 * f + 4] = blk
    return out


def build_W(F: int) -> tuple[np.ndarray, np.ndarray]:
    """Link pairing matrices (W1 horizontal, W2 vertical)."""
    if F == 1:
        w1 = np.array([[1.0]], dtype=complex)
    else:
        w1 = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    return w1, ETA**2 * w1


# ---- mode index bookkeeping ------------------------------------------------


class ModeLayout:
    """Maps (site, leg, flavor) to global Dirac/Majorana indices and carries
    per-link index sets used by the contraction machinery."""

    def __init__(self, lat: Lattice, F: int):
        self.lat = lat
        self.F = F
        self.n_dirac = 4 * F * lat.n_sites
        self.n_maj = 2 * self.n_dirac
        self.site_maj = 8 * F  # Majorana modes per site
        # per link: canonical ordering [head_f g1, head_f g2, tail_f g1, tail_f g2]_f
        self.link_maj = np.array(
            [self._link_canonical(link) for link in range(lat.n_links)], dtype=np.int64
        )
        # tail (gauged) positions within the canonical block: 4f+2, 4f+3
        self.tail_pos = np.array([4 * f + w for f in range(F) for w in (2, 3)], dtype=np.int64)

    def dirac(self, site: int, leg: int, flavor: int) -> int:
        return 4 * self.F * site + 4 * flavor + leg

    def maj(self, site: int, leg: int, flavor: int, which: int) -> int:
        return 2 * self.dirac(site, leg, flavor) + which

    def link_legs(self, link: int) -> tuple[int, int, int, int]:
        """(tail site, tail leg, head site, head leg)."""
        tail, head = self.lat.link_endpoints(link)
        _, direction = self.lat.link_site_dir(link)
        if direction == HORIZONTAL:
            return tail, LEG_R, head, LEG_L
        return tail, LEG_U, head, LEG_D

    def _link_canonical(self, link: int) -> list[int]:
        ts, tleg, hs, hleg = self.link_legs(link)
        idx = []
        for f in range(self.F):
            idx += [self.maj(hs, hleg, f, 0), self.maj(hs, hleg, f, 1)]
            idx += [self.maj(ts, tleg, f, 0), self.maj(ts, tleg, f, 1)]
        return idx

    def site_slice(self, site: int) -> slice:
        return slice(self.site_maj * site, self.site_maj * (site + 1))


def link_block(W: np.ndarray, q: int) -> np.ndarray:
    """Majorana covariance of exp((-1)^q W_ab h^dag_a t^dag_b)|vac> in the
    canonical per-link ordering [h_f g1, h_f g2, t_f g1, t_f g2]_f."""
    F = W.shape[0]
    m = np.zeros((2 * F, 2 * F), dtype=complex)
    sign = -1.0 if q else 1.0
    m[:F, F:] = sign * W
    m[F:, :F] = -sign * W.T
    g = majorana_cov_from_pairing(m)
    perm = [i for f in range(F) for i in (2 * f, 2 * f + 1, 2 * F + 2 * f, 2 * F + 2 * f + 1)]
    return g[np.ix_(perm, perm)]


class AnsatzState:
    """All matrices of a GGFPEPS at fixed parameters on a fixed lattice."""

    def __init__(self, lat: Lattice, params: AnsatzParams):
        self.lat = lat
        self.params = params
        self.F = params.F
        self.T = build_T(params)
        self.layout = ModeLayout(lat, self.F)
        self.site_block = build_site_block(self.T)
        self.D = np.kron(np.eye(lat.n_sites), self.site_block)
        w1, w2 = build_W(self.F)
        self.W = (w1, w2)
        # blocks[direction-1][q] -> 4F x 4F link block
        self.blocks = [[link_block(w, q) for q in (0, 1)] for w in (w1, w2)]
        # delta[direction-1][q] = block(1-q) - block(q)
        self.deltas = [[b[1] - b[0], b[0] - b[1]] for b in self.blocks]

    def link_direction(self, link: int) -> int:
        return self.lat.link_site_dir(link)[1]

    def gamma_in(self, q: np.ndarray) -> np.ndarray:
        """Full gauged link-projector covariance for one configuration."""
        g = np.zeros((self.layout.n_maj, self.layout.n_maj))
        for link in range(self.lat.n_links):
            idx = self.layout.link_maj[link]
            d = self.link_direction(link) - 1
            g[np.ix_(idx, idx)] = self.blocks[d][int(q[link])]
        return g

    def gamma_in_stack(self, qs: np.ndarray) -> np.ndarray:
        """Batched gamma_in for a (n_cfg, n_links) array of configurations."""
        n_cfg = qs.shape[0]
        g = np.zeros((n_cfg, self.layout.n_maj, self.layout.n_maj))
        for link in range(self.lat.n_links):
            idx = self.layout.link_maj[link]
            d = self.link_direction(link) - 1
            blk = np.stack([self.blocks[d][0], self.blocks[d][1]])
            g[:, idx[:, None], idx[None, :]] = blk[qs[:, link].astype(np.int64)]
        return g

    def flip_delta(self, link: int, q_current: int) -> tuple[np.ndarray, np.ndarray]:
        """(index set, block delta) for flipping one link from its current q."""
        d = self.link_direction(link) - 1
        return self.layout.link_maj[link], self.deltas[d][int(q_current)]


def build_site_block(T: np.ndarray) -> np.ndarray:
    """8F x 8F Majorana covariance block of exp(T a^dag a^dag)|vac> (M = 2T)."""
    return majorana_cov_from_pairing(2.0 * T)


def build_site_D(T: np.ndarray, lat: Lattice) -> np.ndarray:
    return np.kron(np.eye(lat.n_sites), build_site_block(T))


def build_gamma_in(lat: Lattice, F: int, q: np.ndarray) -> np.ndarray:
    """Standalone Gamma_in(Q); independent of T, so any parameter point works."""
    layout = ModeLayout(lat, F)
    w1, w2 = build_W(F)
    blocks = [[link_block(w, qq) for qq in (0, 1)] for w in (w1, w2)]
    g = np.zeros((layout.n_maj, layout.n_maj))
    for link in range(lat.n_links):
        idx = layout.link_maj[link]
        d = lat.link_site_dir(link)[1] - 1
        g[np.ix_(idx, idx)] = blocks[d][int(q[link])]
    return g


# ---- full-system pairing matrices (oracle-side helpers) --------------------


def pairing_matrix_sites(state: AnsatzState) -> np.ndarray:
    """Global M for prod_x exp(T a^dag a^dag)|vac>: block-diagonal 2T."""
    lay = state.layout
    m = np.zeros((lay.n_dirac, lay.n_dirac), dtype=complex)
    for s in range(state.lat.n_sites):
        sl = slice(4 * state.F * s, 4 * state.F * (s + 1))
        m[sl, sl] = 2.0 * state.T
    return m


def pairing_matrix_links(state: AnsatzState, q: np.ndarray) -> np.ndarray:
    """Global M for the gauged product of link pair creators."""
    lay = state.layout
    m = np.zeros((lay.n_dirac, lay.n_dirac), dtype=complex)
    for link in range(state.lat.n_links):
        ts, tleg, hs, hleg = lay.link_legs(link)
        w = state.W[state.link_direction(link) - 1]
        sign = -1.0 if q[link] else 1.0
        for a in range(state.F):
            for b in range(state.F):
                if w[a, b] == 0:
                    continue
                hi = lay.dirac(hs, hleg, a)
                ti = lay.dirac(ts, tleg, b)
                m[hi, ti] += sign * w[a, b]
                m[ti, hi] -= sign * w[a, b]
    return m
