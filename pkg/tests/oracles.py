"""Independent reference solvers used by the tests.

They work from edge lists and per-device widths directly, without the
incidence matrices or the flux formulation used by the package.
"""

import numpy as np
from scipy.integrate import solve_ivp


def resistive_solve(topo, conductances, v_source):
    """Branch currents of a resistor network with one ideal source.

    Builds the weighted graph Laplacian edge by edge, pins the source nodes
    (start node at 0 V when grounded, end node at ``v_source``) and solves
    for the remaining node potentials.
    """
    n = topo.n_nodes
    (s_start, s_end), = topo.source_edges
    L = np.zeros((n, n))
    for (a, b), g in zip(topo.memristor_edges, conductances):
        L[a, a] += g
        L[b, b] += g
        L[a, b] -= g
        L[b, a] -= g
    v = np.zeros(n)
    v[s_end] = v_source
    fixed = [topo.ground_node, s_end]
    free = [k for k in range(n) if k not in fixed]
    v[free] = np.linalg.solve(L[np.ix_(free, free)], -L[np.ix_(free, fixed)] @ v[fixed])
    return np.array([g * (v[b] - v[a]) for (a, b), g in zip(topo.memristor_edges, conductances)])


def state_space_network(topo, devs, voltage, t_span, t_eval, rtol=1e-10):
    """Integrate the doped-region widths of every device with DOP853.

    Returns branch currents (len(t_eval), N_m).  Valid only while no width
    reaches 0 or D.
    """
    k_drift = devs.mu_v * devs.R_on / devs.D

    def currents(t, w):
        return resistive_solve(topo, 1.0 / devs.memristance(w), voltage(t))

    sol = solve_ivp(lambda t, w: k_drift * currents(t, w), t_span, devs.w0, t_eval=t_eval,
                    method="DOP853", rtol=rtol, atol=1e-22, max_step=(t_span[1] - t_span[0]) / 400)
    assert sol.success
    return np.array([currents(t, sol.y[:, k]) for k, t in enumerate(t_eval)])
