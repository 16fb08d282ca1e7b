"""Panel quadrature: exact flat-triangle Newton-potential integrals and
fixed Gauss rules for smooth kernels.

The closed forms follow the classical edge-decomposition of the potential
of a uniformly charged planar polygon: the single-layer value needs per-edge
log terms plus a solid-angle term, and its observation-point gradient needs
the same logs on the in-plane edge normals plus the signed solid angle on
the plane normal.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "triangle_rule",
    "segment_rule",
    "newton_potential_triangles",
    "newton_gradient_triangles",
    "segment_log_integral",
]

# degree-5 rule, 7 points, weights sum to 1 (multiply by panel area)
_A1 = (6.0 + np.sqrt(15.0)) / 21.0
_A2 = (6.0 - np.sqrt(15.0)) / 21.0
_W1 = (155.0 + np.sqrt(15.0)) / 1200.0
_W2 = (155.0 - np.sqrt(15.0)) / 1200.0
_TRI7_BARY = np.array(
    [
        [1 / 3, 1 / 3, 1 / 3],
        [_A1, _A1, 1 - 2 * _A1],
        [_A1, 1 - 2 * _A1, _A1],
        [1 - 2 * _A1, _A1, _A1],
        [_A2, _A2, 1 - 2 * _A2],
        [_A2, 1 - 2 * _A2, _A2],
        [1 - 2 * _A2, _A2, _A2],
    ]
)
_TRI7_W = np.array([9.0 / 40.0, _W1, _W1, _W1, _W2, _W2, _W2])


def triangle_rule(panel_vertices: np.ndarray, areas: np.ndarray):
    """Quadrature nodes and weights on each flat triangle.

    Parameters
    ----------
    panel_vertices : (nt, 3, 3) vertex triples
    areas : (nt,) panel areas

    Returns
    -------
    nodes : (nt, 7, 3), weights : (nt, 7) with sum(weights[i]) == areas[i]
    """
    nodes = np.einsum("qb,tbi->tqi", _TRI7_BARY, panel_vertices)
    weights = areas[:, None] * _TRI7_W[None, :]
    return nodes, weights


def segment_rule(a: np.ndarray, b: np.ndarray, lengths: np.ndarray, order: int = 4):
    """Gauss-Legendre nodes/weights on straight segments a->b (2D)."""
    x, w = np.polynomial.legendre.leggauss(order)
    t = 0.5 * (x + 1.0)
    nodes = a[:, None, :] + t[None, :, None] * (b - a)[:, None, :]
    weights = lengths[:, None] * (0.5 * w)[None, :]
    return nodes, weights


def _edge_terms(obs: np.ndarray, tri: np.ndarray):
    """Shared per-edge quantities for the closed-form panel integrals.

    obs : (m, 3) observation points
    tri : (3, 3) vertex rows of one triangle

    Returns w0 (m,), n_hat (3,), and per-edge arrays (m, 3): log terms,
    beta (solid-angle accumulator) and the in-plane outward edge normals
    m_hat (3 edges, 3) plus the per-edge log values.
    """
    p0, p1, p2 = tri
    nvec = np.cross(p1 - p0, p2 - p0)
    n_hat = nvec / np.linalg.norm(nvec)
    w0 = (obs - p0) @ n_hat  # signed height above the panel plane
    rho = obs - w0[:, None] * n_hat  # in-plane projection

    a_pts = np.stack([p0, p1, p2])
    b_pts = np.stack([p1, p2, p0])
    s_hat = b_pts - a_pts
    s_hat = s_hat / np.linalg.norm(s_hat, axis=1)[:, None]
    m_hat = np.cross(s_hat, n_hat)  # outward in-plane edge normals (CCW winding)

    # (m, 3 edges)
    t0 = np.einsum("mej->me", (a_pts[None] - rho[:, None]) * m_hat[None])
    lm = np.einsum("mej->me", (a_pts[None] - rho[:, None]) * s_hat[None])
    lp = np.einsum("mej->me", (b_pts[None] - rho[:, None]) * s_hat[None])
    w2 = (w0**2)[:, None]
    r0sq = t0**2 + w2
    rm = np.sqrt(lm**2 + r0sq)
    rp = np.sqrt(lp**2 + r0sq)

    # stable log of (rp + lp)/(rm + lm); both factors positive unless the
    # observation point lies on the edge line, where t0 -> 0 kills the term
    num = rp + lp
    den = rm + lm
    tiny = np.finfo(float).tiny
    log_term = np.log(np.maximum(num, tiny)) - np.log(np.maximum(den, tiny))
    bad = (num <= 0) | (den <= 0)
    log_term[bad] = 0.0

    absw = np.abs(w0)[:, None]
    beta = np.arctan2(t0 * lp, r0sq + absw * rp) - np.arctan2(t0 * lm, r0sq + absw * rm)
    return w0, n_hat, m_hat, t0, log_term, beta


def newton_potential_triangles(obs: np.ndarray, panel_vertices: np.ndarray) -> np.ndarray:
    """Exact I[m, t] = integral over triangle t of 1/|obs_m - y| dA(y)."""
    obs = np.atleast_2d(obs)
    out = np.empty((obs.shape[0], panel_vertices.shape[0]))
    for t in range(panel_vertices.shape[0]):
        w0, _, _, t0, log_term, beta = _edge_terms(obs, panel_vertices[t])
        out[:, t] = np.einsum("me->m", t0 * log_term) - np.abs(w0) * np.einsum("me->m", beta)
    return out


def newton_gradient_triangles(obs: np.ndarray, panel_vertices: np.ndarray) -> np.ndarray:
    """Exact V[m, t, :] = integral over triangle t of (obs_m - y)/|obs_m - y|^3 dA(y).

    Equals -grad_obs of the Newton potential.  The normal component takes its
    principal value (zero) when the observation point lies in the panel plane.
    """
    obs = np.atleast_2d(obs)
    out = np.empty((obs.shape[0], panel_vertices.shape[0], 3))
    for t in range(panel_vertices.shape[0]):
        w0, n_hat, m_hat, _, log_term, beta = _edge_terms(obs, panel_vertices[t])
        in_plane = np.einsum("me,ej->mj", log_term, m_hat)
        normal = np.sign(w0) * np.einsum("me->m", beta)
        out[:, t, :] = in_plane + normal[:, None] * n_hat[None, :]
    return out


def segment_log_integral(obs: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Exact L[m, s] = integral over segment s of ln|obs_m - y| dl(y)  (2D)."""
    obs = np.atleast_2d(obs)
    d = b - a
    lengths = np.linalg.norm(d, axis=1)
    t_hat = d / lengths[:, None]
    n_hat = np.stack([t_hat[:, 1], -t_hat[:, 0]], axis=1)
    # local coordinates of the observation point w.r.t. each segment
    rel = obs[:, None, :] - a[None, :, :]
    t = np.einsum("msj,sj->ms", rel, t_hat)
    h = np.einsum("msj,sj->ms", rel, n_hat)

    def antideriv(tt, hh):
        r = np.sqrt(tt**2 + hh**2)
        tiny = np.finfo(float).tiny
        term = -tt + 0.5 * tt * np.log(np.maximum(r**2, tiny))
        # principal-branch arctan keeps the antiderivative continuous in tt
        safe_h = np.where(hh != 0.0, hh, 1.0)
        angle = np.where(hh != 0.0, hh * np.arctan(tt / safe_h), 0.0)
        return term + angle

    # integral of ln r along the segment: antiderivative at (L - t) minus at (-t)
    return antideriv(lengths[None, :] - t, h) - antideriv(-t, h)
