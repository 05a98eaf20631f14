"""Exact contraction: sum estimators over all 2**n_links gauge configurations."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ansatz import AnsatzState
from .gaussian import ContractionCache, ZeroAmplitudeError
from .lattice import all_configs, wilson_loop_links
from .observables import EnergyBreakdown, assemble_energy, electric_term_batch

ENUM_GUARD = 20


@dataclass
class ECResult:
    Z: float
    mean_P: float
    mean_P_complex: complex
    mean_plaq: float
    wilson: dict = field(default_factory=dict)
    energy: EnergyBreakdown | None = None
    weights: np.ndarray | None = None
    n_degenerate: int = 0


def log_weights(state: AnsatzState, qs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(log |psi(Q)|^2, validity mask) for a batch of configurations."""
    n = state.layout.n_maj
    c = np.eye(n) - state.gamma_in_stack(qs) @ state.D
    sign, logdet = np.linalg.slogdet(c)
    ok = (sign > 0) & np.isfinite(logdet)
    logw = np.where(ok, 0.5 * (logdet - n * np.log(2.0)), -np.inf)
    return logw, ok


def ec_evaluate(
    state: AnsatzState,
    lam: float,
    measure_link: int = 0,
    measure_plaq: int = 0,
    wilson_extents: list[tuple[int, int]] | None = None,
    want_weights: bool = False,
    incremental: bool = False,
) -> ECResult:
    """Exact expectation values by explicit enumeration (small lattices)."""
    lat = state.lat
    if lat.n_links > ENUM_GUARD:
        raise ValueError(
            f"exact contraction refused for 2**{lat.n_links} configurations; use Monte Carlo"
        )
    qs = all_configs(lat)
    if incremental:
        w = _weights_graycode(state, qs)
        ok = w > 0
        logw = np.where(ok, np.log(np.where(ok, w, 1.0)), -np.inf)
    else:
        logw, ok = log_weights(state, qs)
    shift = logw.max()
    w = np.where(ok, np.exp(logw - shift), 0.0)
    z = float(np.exp(shift) * w.sum())
    p = w / w.sum()

    plaq_links = lat.plaquette_links(measure_plaq)
    plaq = 1.0 - 2.0 * (qs[:, plaq_links].sum(axis=1) % 2)
    mean_plaq = float(p @ plaq)

    fp, flagged = electric_term_batch(state, qs, measure_link, valid=ok)
    mean_p_complex = complex(p @ fp)
    mean_p = mean_p_complex.real

    wilson = {}
    for extents in wilson_extents or []:
        loop = wilson_loop_links(lat, 0, *extents)
        vals = 1.0 - 2.0 * (qs[:, loop].sum(axis=1) % 2) if len(loop) else np.ones(len(qs))
        wilson[extents] = float(p @ vals)

    energy = assemble_energy(lam, mean_p, mean_plaq, lat)
    return ECResult(
        Z=z,
        mean_P=mean_p,
        mean_P_complex=mean_p_complex,
        mean_plaq=mean_plaq,
        wilson=wilson,
        energy=energy,
        weights=p if want_weights else None,
        n_degenerate=int(np.count_nonzero(flagged & ok)),
    )


def ec_distribution(state: AnsatzState) -> tuple[np.ndarray, np.ndarray]:
    """(configs, normalized weights) table; intended for L=2 oracle tests."""
    lat = state.lat
    if lat.n_links > ENUM_GUARD:
        raise ValueError("distribution table only for enumerable lattices")
    qs = all_configs(lat)
    logw, ok = log_weights(state, qs)
    w = np.where(ok, np.exp(logw - logw.max()), 0.0)
    return qs, w / w.sum()


def _weights_graycode(state: AnsatzState, qs: np.ndarray) -> np.ndarray:
    """|psi|^2 for all configs by a Gray-code walk with low-rank updates.

    Exercises the incremental machinery; the cache is rebuilt whenever the
    walk crosses a zero-amplitude configuration (singular kernel).
    """
    lat = state.lat
    n_links = lat.n_links
    w = np.zeros(len(qs))
    q = np.zeros(n_links, dtype=np.uint8)
    cache: ContractionCache | None
    try:
        cache = ContractionCache(state.D, state.gamma_in(q))
    except ZeroAmplitudeError:
        cache = None
    for k in range(2**n_links):
        code = k ^ (k >> 1)
        if cache is not None:
            w[code] = cache.overlap_sq
        if k == 2**n_links - 1:
            break
        flip = (code ^ ((k + 1) ^ ((k + 1) >> 1))).bit_length() - 1
        idx, delta = state.flip_delta(flip, int(q[flip]))
        if cache is not None:
            ratio, detk, _ = cache.ratio_for_update(idx, delta)
            if ratio > 0.0:
                cache.apply_update(idx, delta, detk)
            else:
                cache = None
        q[flip] ^= 1
        if cache is None:
            try:
                cache = ContractionCache(state.D, state.gamma_in(q))
            except ZeroAmplitudeError:
                cache = None
    return w
