"""Shared brute-force oracles used by several test modules."""

import numpy as np

from dyadrobust import BipartiteNetwork, Theta


def toy_network(y, z):
    """Wrap raw adjacency / feature arrays (z may be (N, M) or (N, M, d))."""
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    if z.ndim == 2:
        z = z[:, :, None]
    n, m = y.shape
    return BipartiteNetwork(adjacency=y, x_attrs=np.zeros((n, 1)),
                            w_attrs=np.zeros((m, 1)), z_features=z)


def naive_sigma(s_y, s_gamma, h, phi_n):
    """Literal double-loop version of the dyadic covariance estimator."""
    n_a, n_p, k = h.shape
    n = n_a + n_p

    def row_side(sy, sg, hh):
        rows, cols, _ = hh.shape
        yy = np.zeros((k, k))
        yg = np.zeros(k)
        gg = 0.0
        for i in range(rows):
            for j in range(cols):
                for l in range(cols):
                    if l == j:
                        continue
                    yy += sy[i, j] * sy[i, l] * np.outer(hh[i, j], hh[i, l])
                    yg += sy[i, j] * sg[i, l] * hh[i, j]
                    gg += sg[i, j] * sg[i, l]
        denom = rows * cols * (cols - 1)
        return yy / denom, yg / denom, gg / denom

    a_yy, a_yg, a_gg = row_side(s_y, s_gamma, h)
    p_yy, p_yg, p_gg = row_side(s_y.T, s_gamma.T, np.transpose(h, (1, 0, 2)))
    raw = np.zeros((k, k))
    for i in range(n_a):
        for j in range(n_p):
            raw += s_y[i, j] ** 2 * np.outer(h[i, j], h[i, j])
    raw /= n_a * n_p
    sigma2 = (raw - a_yy - p_yy) / n
    c_a, c_p, c_2 = 1 / (1 - phi_n), 1 / phi_n, 1 / (phi_n * (1 - phi_n))
    cov_i = c_a * a_yy + c_p * p_yy + c_2 * sigma2
    cov_i = 0.5 * (cov_i + cov_i.T)
    cov_c = c_a * a_yg + c_p * p_yg
    cov_t = c_a * a_gg + c_p * p_gg
    return cov_i, cov_c, cov_t, sigma2


def kkt_sensitivity(phi1, phi2, g, gamma):
    """Independent equality-constrained QP solve of the sensitivity problem.

    Stationarity of kappa' Phi1 kappa + 2 Phi2' kappa + const under
    g' kappa = gamma gives the bordered KKT system below.
    """
    k, d = g.shape
    kkt = np.zeros((k + d, k + d))
    kkt[:k, :k] = 2.0 * phi1
    kkt[:k, k:] = g
    kkt[k:, :k] = g.T
    rhs = np.concatenate([-2.0 * phi2, gamma])
    sol = np.linalg.solve(kkt, rhs)
    return sol[:k]


def random_components(rng, k, d, sigma_bar_sq):
    """Random well-posed MomentComponents for solver tests."""
    from dyadrobust import MomentComponents

    def rand_spd(dim, scale=1.0):
        a = rng.normal(size=(dim, dim + 3))
        return scale * (a @ a.T) / dim + 0.1 * np.eye(dim)

    g = rng.normal(size=(k, d))
    while np.linalg.matrix_rank(g) < d:
        g = rng.normal(size=(k, d))
    return MomentComponents(
        jacobian=g,
        target_grad=rng.normal(size=d),
        bias_quad=rand_spd(k, 2.0),
        bias_cross=rng.normal(size=k),
        bias_scalar=float(rng.uniform(0.5, 3.0)),
        cov_instr=rand_spd(k, 1.5),
        cov_cross=rng.normal(size=k) * 0.3,
        cov_target=float(rng.uniform(0.5, 2.0)),
        phi_share=0.5,
        sigma_bar_sq=float(sigma_bar_sq),
        sigma2_diag=np.zeros((k, k)),
    )
