"""Independent cross-check solver: predictor-corrector marching on the characteristic mesh.

Node ``P = (i, j)`` is reached from ``A = (i-1, j)`` along the C- line
(``v`` fixed) and from ``B = (i, j-1)`` along the C+ line (``u`` fixed):

    r_P - r_B = c+ (t_P - t_B),   alpha_P - alpha_B = F (t_P - t_B)
    r_P - r_A = c- (t_P - t_A),   beta_P  - beta_A  = F (t_P - t_A)

Coefficients are frozen at the edge start for the predictor and averaged
over the edge ends for the corrector. Nodes on one anti-diagonal do not
depend on each other and are updated together.
"""

from __future__ import annotations

import logging
from typing import Tuple

import numpy as np

from charflow.errors import NonPositiveRadius, RangeError
from charflow.physics.eos import EosModel
from charflow.physics.state import Geometry
from charflow.solver.constraints import CharacteristicData
from charflow.solver.goursat import GoursatGrid, GridSpec, boundary_from_characteristics
from charflow.solver.numerics import grad, quadrant_closure

LOGGER = logging.getLogger(__name__)

CORRECTOR_PASSES = 2


def _node_terms(
    alpha: np.ndarray,
    beta: np.ndarray,
    r: np.ndarray,
    eos: EosModel,
    geometry: Geometry,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(c+, c-, F)`` at a batch of nodes."""
    eta = np.asarray(eos.eta_of_chi_dagger(alpha + beta))
    half_chi = 0.5 * (alpha - beta)
    if geometry.spherical:
        source = -2.0 * eta * half_chi / r
    else:
        source = np.zeros_like(r)
    return half_chi + eta, half_chi - eta, source


def marching_oracle(
    cp: CharacteristicData,
    cm: CharacteristicData,
    spec: GridSpec,
    eos: EosModel,
    geometry: Geometry,
) -> GoursatGrid:
    boundary = boundary_from_characteristics(cp, cm, spec)
    row, col = boundary.row, boundary.col
    n_u, n_v = spec.nu + 1, spec.nv + 1
    fields = {}
    for name in ("alpha", "beta", "t", "r"):
        values = np.full((n_u, n_v), np.nan)
        values[:, 0] = row[name]
        values[0, :] = col[name]
        fields[name] = values
    alpha, beta, t, r = fields["alpha"], fields["beta"], fields["t"], fields["r"]

    for diagonal in range(2, spec.nu + spec.nv + 1):
        i = np.arange(max(1, diagonal - spec.nv), min(spec.nu, diagonal - 1) + 1)
        j = diagonal - i
        ia, ja = i - 1, j
        ib, jb = i, j - 1
        try:
            cp_a, cm_a, f_a = _node_terms(alpha[ia, ja], beta[ia, ja], r[ia, ja], eos, geometry)
            cp_b, cm_b, f_b = _node_terms(alpha[ib, jb], beta[ib, jb], r[ib, jb], eos, geometry)
        except RangeError as exc:
            raise exc.at((float(spec.du * i[0]), float(spec.dv * j[0]))) from exc

        plus, minus = cp_b, cm_a
        source_b, source_a = f_b, f_a
        for corrector in range(CORRECTOR_PASSES + 1):
            speed_gap = plus - minus
            t_p = (r[ia, ja] - r[ib, jb] + plus * t[ib, jb] - minus * t[ia, ja]) / speed_gap
            r_p = r[ib, jb] + plus * (t_p - t[ib, jb])
            alpha_p = alpha[ib, jb] + source_b * (t_p - t[ib, jb])
            beta_p = beta[ia, ja] + source_a * (t_p - t[ia, ja])
            if np.any(r_p <= 0.0):
                k = int(np.argmax(r_p <= 0.0))
                raise NonPositiveRadius(
                    f"marching radius reached {float(r_p[k]):.6g}",
                    location=(float(spec.du * i[k]), float(spec.dv * j[k])),
                )
            if corrector == CORRECTOR_PASSES:
                break
            try:
                cp_p, cm_p, f_p = _node_terms(alpha_p, beta_p, r_p, eos, geometry)
            except RangeError as exc:
                raise exc.at((float(spec.du * i[0]), float(spec.dv * j[0]))) from exc
            plus = 0.5 * (cp_b + cp_p)
            minus = 0.5 * (cm_a + cm_p)
            source_b = 0.5 * (f_b + f_p)
            source_a = 0.5 * (f_a + f_p)

        t[i, j] = t_p
        r[i, j] = r_p
        alpha[i, j] = alpha_p
        beta[i, j] = beta_p

    mu = grad(t, spec.du, 0)
    nu = grad(t, spec.dv, 1)
    mu[:, 0], nu[:, 0] = row["mu"], row["nu"]
    mu[0, :], nu[0, :] = col["mu"], col["nu"]
    gamma = grad(alpha, spec.du, 0)
    delta = grad(beta, spec.dv, 1)
    gamma[:, 0], delta[:, 0] = row["gamma"], row["delta"]
    gamma[0, :], delta[0, :] = col["gamma"], col["delta"]
    bad = (mu <= 0.0) | (nu <= 0.0) | ~np.isfinite(t) | ~np.isfinite(r)
    LOGGER.info("Marching oracle swept %d anti-diagonals on %s", spec.nu + spec.nv - 1, spec.label())
    return GoursatGrid(
        u_grid=spec.u_grid(),
        v_grid=spec.v_grid(),
        alpha=alpha,
        beta=beta,
        t=t,
        r=r,
        mu=mu,
        nu=nu,
        gamma=gamma,
        delta=delta,
        r_alt=r.copy(),
        valid=~quadrant_closure(bad),
    )


__all__ = ["marching_oracle", "CORRECTOR_PASSES"]
