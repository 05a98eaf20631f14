"""Periodic L x L square lattice: indexing, gauge configurations, symmetries.

Conventions (fixed across the package):
  * sites x = (x1, x2), index s = x1 + L*x2
  * links l = (x, i) with direction i in {1, 2} (1 = horizontal/right,
    2 = vertical/up), index 2*s + (i-1)  -- site-major, direction-minor
  * plaquettes are labelled by their lower-left corner site; the four links
    of a plaquette are ordered (bottom, right, top, left)

A gauge configuration is a flat uint8 array of length n_links with entries
q in {0, 1}; the Z2 link variable is (-1)**q.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

HORIZONTAL = 1
VERTICAL = 2


class Lattice:
    """Geometry and index maps of a periodic L x L square lattice."""

    def __init__(self, L: int):
        if L < 2:
            raise ValueError(
                f"L must be >= 2, got {L}: on a 1x1 periodic lattice both "
                "links of a plaquette coincide"
            )
        self.L = int(L)
        self.n_sites = self.L**2
        self.n_links = 2 * self.L**2
        self.n_plaquettes = self.L**2
        # plaquette_links[p] = (bottom, right, top, left) link indices
        self._plaq_links = np.array(
            [self._build_plaquette(p) for p in range(self.n_plaquettes)], dtype=np.int64
        )
        self._star_links = np.array(
            [self._build_star(s) for s in range(self.n_sites)], dtype=np.int64
        )

    # ---- index maps ----------------------------------------------------

    def site_index(self, x1: int, x2: int) -> int:
        return (x1 % self.L) + self.L * (x2 % self.L)

    def site_xy(self, s: int) -> tuple[int, int]:
        return s % self.L, s // self.L

    def link_index(self, x1: int, x2: int, direction: int) -> int:
        if direction not in (HORIZONTAL, VERTICAL):
            raise ValueError(f"direction must be 1 or 2, got {direction}")
        return 2 * self.site_index(x1, x2) + (direction - 1)

    def link_site_dir(self, link: int) -> tuple[int, int]:
        """Inverse of link_index: (starting site, direction)."""
        return link // 2, (link % 2) + 1

    def link_endpoints(self, link: int) -> tuple[int, int]:
        """(tail, head) site indices; head = tail + e_i with periodic wrap."""
        s, direction = self.link_site_dir(link)
        x1, x2 = self.site_xy(s)
        if direction == HORIZONTAL:
            return s, self.site_index(x1 + 1, x2)
        return s, self.site_index(x1, x2 + 1)

    def _build_plaquette(self, p: int) -> tuple[int, int, int, int]:
        x1, x2 = self.site_xy(p)
        bottom = self.link_index(x1, x2, HORIZONTAL)
        right = self.link_index(x1 + 1, x2, VERTICAL)
        top = self.link_index(x1, x2 + 1, HORIZONTAL)
        left = self.link_index(x1, x2, VERTICAL)
        return bottom, right, top, left

    def plaquette_links(self, p: int) -> np.ndarray:
        return self._plaq_links[p]

    @property
    def plaquette_link_table(self) -> np.ndarray:
        """(n_plaquettes, 4) array of link indices, Fig.-1 ordering."""
        return self._plaq_links

    def _build_star(self, s: int) -> tuple[int, int, int, int]:
        x1, x2 = self.site_xy(s)
        return (
            self.link_index(x1, x2, HORIZONTAL),
            self.link_index(x1, x2, VERTICAL),
            self.link_index(x1 - 1, x2, HORIZONTAL),
            self.link_index(x1, x2 - 1, VERTICAL),
        )

    def star_links(self, site: int) -> np.ndarray:
        """The 4 links touching a site: (x,1), (x,2), (x-e1,1), (x-e2,2)."""
        return self._star_links[site]

    def __repr__(self) -> str:
        return f"Lattice(L={self.L})"


def build_lattice(L: int) -> Lattice:
    return Lattice(L)


# ---- gauge configurations ----------------------------------------------


def zero_config(lat: Lattice) -> np.ndarray:
    return np.zeros(lat.n_links, dtype=np.uint8)


def _check_config(lat: Lattice, q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=np.uint8)
    if q.shape != (lat.n_links,):
        raise ValueError(f"config has shape {q.shape}, expected ({lat.n_links},)")
    return q


def gauge_transform(lat: Lattice, q: np.ndarray, site: int) -> np.ndarray:
    """Flip q on the 4 links of the star of `site` (Gauss-law generator)."""
    q = _check_config(lat, q).copy()
    q[lat.star_links(site)] ^= 1
    return q


def translate_config(lat: Lattice, q: np.ndarray, v: tuple[int, int]) -> np.ndarray:
    """q'(x + v, i) = q(x, i)."""
    return apply_action(translation_action(lat, v), _check_config(lat, q))


def rotate_config(lat: Lattice, q: np.ndarray) -> np.ndarray:
    """pi/2 rotation x -> (-x2, x1): q'(Rx, 2) = q(x, 1), q'(Rx - e1, 1) = q(x, 2)."""
    return apply_action(rotation_action(lat), _check_config(lat, q))


def plaquette_value(lat: Lattice, q: np.ndarray, p: int) -> int:
    """Product of (-1)**q over the 4 links of plaquette p."""
    return int(1 - 2 * (int(q[lat.plaquette_links(p)].sum()) % 2))


def wilson_loop_links(lat: Lattice, origin: int, R1: int, R2: int) -> np.ndarray:
    """Boundary links of the R1 x R2 rectangle anchored at `origin`.

    Links traversed an even number of times cancel (Q**2 = 1) and are
    dropped, which only matters for loops wrapping the torus (R = L).
    """
    if not (1 <= R1 <= lat.L and 1 <= R2 <= lat.L):
        raise ValueError(f"loop extents must be in [1, L={lat.L}], got {R1}x{R2}")
    x1, x2 = lat.site_xy(origin)
    counts: dict[int, int] = {}

    def visit(link: int) -> None:
        counts[link] = counts.get(link, 0) + 1

    for k in range(R1):
        visit(lat.link_index(x1 + k, x2, HORIZONTAL))  # bottom
        visit(lat.link_index(x1 + k, x2 + R2, HORIZONTAL))  # top
    for k in range(R2):
        visit(lat.link_index(x1, x2 + k, VERTICAL))  # left
        visit(lat.link_index(x1 + R1, x2 + k, VERTICAL))  # right
    links = sorted(l for l, c in counts.items() if c % 2 == 1)
    return np.array(links, dtype=np.int64)


# ---- symmetry actions ---------------------------------------------------


@dataclass(frozen=True)
class SymmetryAction:
    """Action on configs: q' = q[perm] ^ flip.

    perm[l] is the source link whose value lands on link l; flip is a
    per-link bit added after permuting.
    """

    kind: str
    perm: np.ndarray
    flip: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.flip is None:
            object.__setattr__(self, "flip", np.zeros(len(self.perm), dtype=np.uint8))


def apply_action(action: SymmetryAction, q: np.ndarray) -> np.ndarray:
    return (q[action.perm] ^ action.flip).astype(np.uint8)


def gauge_action(lat: Lattice, site: int) -> SymmetryAction:
    flip = np.zeros(lat.n_links, dtype=np.uint8)
    flip[lat.star_links(site)] = 1
    return SymmetryAction("gauge", np.arange(lat.n_links), flip)


def translation_action(lat: Lattice, v: tuple[int, int]) -> SymmetryAction:
    perm = np.empty(lat.n_links, dtype=np.int64)
    for s in range(lat.n_sites):
        x1, x2 = lat.site_xy(s)
        for d in (HORIZONTAL, VERTICAL):
            perm[lat.link_index(x1 + v[0], x2 + v[1], d)] = lat.link_index(x1, x2, d)
    return SymmetryAction("translation", perm)


def rotation_action(lat: Lattice) -> SymmetryAction:
    perm = np.empty(lat.n_links, dtype=np.int64)
    for s in range(lat.n_sites):
        x1, x2 = lat.site_xy(s)
        rx1, rx2 = -x2, x1
        perm[lat.link_index(rx1, rx2, VERTICAL)] = lat.link_index(x1, x2, HORIZONTAL)
        perm[lat.link_index(rx1 - 1, rx2, HORIZONTAL)] = lat.link_index(x1, x2, VERTICAL)
    return SymmetryAction("rotation", perm)


def all_configs(lat: Lattice) -> np.ndarray:
    """All 2**n_links configs as a (2**n_links, n_links) uint8 array."""
    n = lat.n_links
    if n > 20:
        raise ValueError(f"refusing to enumerate 2**{n} configurations")
    codes = np.arange(2**n, dtype=np.uint32)
    return ((codes[:, None] >> np.arange(n, dtype=np.uint32)[None, :]) & 1).astype(np.uint8)


def config_code(q: np.ndarray) -> int:
    """Integer encoding matching the enumeration order of all_configs."""
    return int(np.dot(q.astype(np.int64), 1 << np.arange(len(q), dtype=np.int64)))
