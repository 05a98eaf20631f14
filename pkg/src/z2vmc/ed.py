"""Exact diagonalization of H = lambda sum_l (1-P_l) + sum_p (1-Q1 Q2 Q3 Q4)
in the Gauss-law sector V(x) = +1.

The sector is parametrized without redundancy by a dual basis: the L^2
plaquette values B_p = +-1 with even global parity (prod_p B_p = +1), plus
two Z2 line parities (w1, w2) measured along a fixed horizontal row / vertical
column of links. Star operators act trivially on these labels, gauge orbits
all have size 2^{L^2-1}, and every P_l maps basis states to basis states with
amplitude one: P on a horizontal link flips the two adjacent plaquettes (above
and below) and w1 when the link sits in row 0; vertical links flip the two
side plaquettes and w2 in column 0. Dimension: 2^{L^2+1} = 2^{n_links-n_sites+1}.

The conserved 't Hooft line parities t1, t2 label topological sectors; the
trivial sector (t=+1 twice) drops the w register entirely.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .lattice import HORIZONTAL, Lattice

DIM_GUARD = 2**20
DENSE_CUTOFF = 4096
RESIDUAL_TOL = 1e-10


class GaugeSectorBasis:
    """Index maps of the dual (plaquette-parity + winding) basis."""

    def __init__(self, lat: Lattice, sector: str = "full"):
        if sector not in ("full", "trivial"):
            raise ValueError(f"sector must be 'full' or 'trivial', got {sector}")
        n_p = lat.n_plaquettes
        if 2 ** (n_p + 1) > DIM_GUARD:
            raise ValueError(f"gauge sector dimension 2**{n_p + 1} exceeds the guard")
        self.lat = lat
        self.sector = sector
        codes = np.arange(2**n_p, dtype=np.int64)
        even = np.bitwise_count(codes) % 2 == 0
        self.codes = codes[even]
        self.rank = np.full(2**n_p, -1, dtype=np.int64)
        self.rank[self.codes] = np.arange(len(self.codes))
        self.n_even = len(self.codes)
        self.n_wind = 4 if sector == "full" else 1
        self.dim = self.n_even * self.n_wind
        # per link: the two plaquettes it borders and the winding bit it flips
        self.plaq_mask = np.zeros(lat.n_links, dtype=np.int64)
        self.wind_bit = np.zeros(lat.n_links, dtype=np.int64)
        for link in range(lat.n_links):
            s, direction = lat.link_site_dir(link)
            x1, x2 = lat.site_xy(s)
            if direction == HORIZONTAL:
                p1, p2 = lat.site_index(x1, x2), lat.site_index(x1, x2 - 1)
                if x2 == 0:
                    self.wind_bit[link] = 1
            else:
                p1, p2 = lat.site_index(x1, x2), lat.site_index(x1 - 1, x2)
                if x1 == 0:
                    self.wind_bit[link] = 2
            self.plaq_mask[link] = (1 << p1) | (1 << p2)

    def electric_permutation(self, link: int) -> np.ndarray:
        """col[i] such that P_link |i> = |col[i]>."""
        b = self.codes[np.arange(self.dim) % self.n_even]
        w = np.arange(self.dim) // self.n_even
        nb = self.rank[b ^ self.plaq_mask[link]]
        nw = w ^ self.wind_bit[link] if self.sector == "full" else w
        return nb + self.n_even * nw

    def magnetic_diagonal(self) -> np.ndarray:
        """sum_p (1 - B_p) = 2 * (number of negative plaquettes)."""
        b = self.codes[np.arange(self.dim) % self.n_even]
        return 2.0 * np.bitwise_count(b).astype(float)


def build_H(lat: Lattice, lam: float, sector: str = "full") -> tuple[sp.csr_matrix, GaugeSectorBasis]:
    if lam <= 0:
        raise ValueError(f"coupling lambda must be positive, got {lam}")
    basis = GaugeSectorBasis(lat, sector)
    dim = basis.dim
    rows = np.arange(dim)
    h = sp.csr_matrix(
        (lam * lat.n_links * np.ones(dim) + basis.magnetic_diagonal(), (rows, rows)),
        shape=(dim, dim),
    )
    for link in range(lat.n_links):
        col = basis.electric_permutation(link)
        h = h + sp.csr_matrix((-lam * np.ones(dim), (rows, col)), shape=(dim, dim))
    return h.tocsr(), basis


@dataclass
class SpectralResult:
    e0: float
    gap: float
    mean_P: float
    mean_plaq: float
    wilson: dict
    residual: float
    dim: int
    vector: np.ndarray | None = None


def ground_state(
    h: sp.csr_matrix,
    basis: GaugeSectorBasis,
    lam: float,
    wilson_extents: list[tuple[int, int]] | None = None,
    keep_vector: bool = False,
) -> SpectralResult:
    dim = h.shape[0]
    if dim <= DENSE_CUTOFF:
        vals, vecs = np.linalg.eigh(h.toarray())
        e0, e1 = float(vals[0]), float(vals[1])
        v = vecs[:, 0]
    else:
        v0 = np.full(dim, 1.0 / np.sqrt(dim))
        vals, vecs = spla.eigsh(h, k=2, which="SA", v0=v0)
        order = np.argsort(vals)
        e0, e1 = float(vals[order[0]]), float(vals[order[1]])
        v = vecs[:, order[0]]
    residual = float(np.linalg.norm(h @ v - e0 * v))
    if residual > RESIDUAL_TOL:
        raise ArithmeticError(f"eigensolver residual {residual:.3e} > {RESIDUAL_TOL}")

    lat = basis.lat
    prob = v * v
    b = basis.codes[np.arange(dim) % basis.n_even]
    mean_plaq = float(prob @ (1.0 - 2.0 * np.bitwise_count(b) / lat.n_plaquettes))
    mp = 0.0
    for link in range(lat.n_links):
        mp += float(v @ v[basis.electric_permutation(link)])
    mean_P = mp / lat.n_links

    wilson = {}
    for r1, r2 in wilson_extents or []:
        mask = 0
        for a in range(r1):
            for bb in range(r2):
                mask |= 1 << lat.site_index(a, bb)
        par = np.bitwise_count(b & mask) % 2
        wilson[(r1, r2)] = float(prob @ (1.0 - 2.0 * par))

    return SpectralResult(
        e0=e0,
        gap=e1 - e0,
        mean_P=mean_P,
        mean_plaq=mean_plaq,
        wilson=wilson,
        residual=residual,
        dim=dim,
        vector=v if keep_vector else None,
    )


def solve_ground(lat: Lattice, lam: float, sector: str = "full", **kwargs) -> SpectralResult:
    h, basis = build_H(lat, lam, sector)
    return ground_state(h, basis, lam, **kwargs)


# ---- literal projector construction (small-lattice cross-check) ------------


def projector_sector_ground(lat: Lattice, lam: float) -> tuple[float, int]:
    """Ground energy via the explicit prod_x (1+V(x))/2 projector in the full
    2**n_links link basis. Exponentially large; L=2 only in practice."""
    n = lat.n_links
    if n > 12:
        raise ValueError("projector construction only for tiny lattices")
    dim = 1 << n
    codes = np.arange(dim, dtype=np.int64)

    def flip_permutation(links) -> np.ndarray:
        mask = 0
        for l in links:
            mask |= 1 << int(l)
        return codes ^ mask

    diag = np.zeros(dim)
    for p in range(lat.n_plaquettes):
        mask = 0
        for l in lat.plaquette_links(p):
            mask |= 1 << int(l)
        diag += 2.0 * (np.bitwise_count(codes & mask) % 2)
    h = np.zeros((dim, dim))
    h[codes, codes] = diag + lam * lat.n_links
    for link in range(n):
        h[codes, flip_permutation([link])] -= lam

    proj = np.eye(dim)
    for s in range(lat.n_sites):
        perm = flip_permutation(lat.star_links(s))
        vmat = np.zeros((dim, dim))
        vmat[codes, perm] = 1.0
        proj = proj @ (np.eye(dim) + vmat) / 2.0
    evals, evecs = np.linalg.eigh(proj)
    sector = evecs[:, evals > 0.5]
    hs = sector.T @ h @ sector
    return float(np.linalg.eigvalsh(hs)[0]), sector.shape[1]


# ---- disk cache -------------------------------------------------------------


def cached_ground(
    lat: Lattice,
    lam: float,
    cache_dir: str | Path | None,
    sector: str = "full",
    wilson_extents: list[tuple[int, int]] | None = None,
) -> SpectralResult:
    """solve_ground with a JSON disk cache keyed by (L, lambda, sector)."""
    if cache_dir is None:
        return solve_ground(lat, lam, sector, wilson_extents=wilson_extents)
    path = Path(cache_dir) / f"ed_L{lat.L}_{sector}.json"
    table = {}
    if path.exists():
        table = json.loads(path.read_text())
    key = repr(float(lam))
    want_wilson = [tuple(e) for e in (wilson_extents or [])]
    if key in table:
        rec = table[key]
        have_wilson = {tuple(map(int, k.split("x"))): v for k, v in rec["wilson"].items()}
        if all(e in have_wilson for e in want_wilson):
            return SpectralResult(
                e0=rec["e0"],
                gap=rec["gap"],
                mean_P=rec["P"],
                mean_plaq=rec["plaq"],
                wilson={e: have_wilson[e] for e in want_wilson},
                residual=rec["residual"],
                dim=rec["dim"],
            )
    res = solve_ground(lat, lam, sector, wilson_extents=want_wilson)
    table[key] = {
        "e0": res.e0,
        "gap": res.gap,
        "P": res.mean_P,
        "plaq": res.mean_plaq,
        "wilson": {f"{r1}x{r2}": v for (r1, r2), v in res.wilson.items()},
        "residual": res.residual,
        "dim": res.dim,
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(table, indent=1, sort_keys=True))
    return res
