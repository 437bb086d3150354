"""Pure-numpy kernels: the fallback backend when the compiled core is absent.

Each function mirrors the compiled signature exactly. Shape-gradient kernels
evaluate the full gradient formula independently for every atom (the cascade
products are rebuilt per atom), matching the per-atom cost the alternating
optimizer is analyzed at.
"""

import numpy as np

TWO_PI = 2.0 * np.pi


def sweep_phases(a, b, alpha, theta, incremental=False):
    """Gauss-Seidel closed-form phase sweep over all atoms of one layer.

    Minimizes ||A diag(e^{j theta}) B - alpha I||_F^2 coordinate by
    coordinate; `theta` is updated in place in index order. Returns the
    number of atoms skipped at degenerate (flat) coordinates.
    """
    k = a.shape[0]
    n = a.shape[1]
    skipped = 0
    t_run = None
    if incremental:
        t_run = (a * np.exp(1j * theta)[None, :]) @ b
    for idx in range(n):
        ph_n = np.exp(1j * theta[idx])
        ln = np.outer(a[:, idx], b[idx, :])
        if incremental:
            m = t_run - ln * ph_n
        else:
            t = (a * np.exp(1j * theta)[None, :]) @ b
            m = t - ln * ph_n
        ge = np.vdot(ln, m)  # g + j e
        hf = alpha * np.trace(ln)  # h + j f
        y = ge.imag + hf.imag  # e + f
        x = ge.real - hf.real  # g - h
        if x == 0.0 and y == 0.0:
            skipped += 1
            continue
        theta[idx] = np.mod(np.arctan2(y, x) + np.pi, TWO_PI)
        if incremental:
            t_run = m + ln * np.exp(1j * theta[idx])
    return skipped


def shape_grads_film_layer1(h, phi2, w2, phi1, w1, dfac12, dfac01, alpha, atoms=None):
    """d J / d y_n for every atom n of the inner layer of a two-layer cascade.

    dfac12[m, n] = k_c (y2_m - y1_n) / d(m, n) aligned with w2; dfac01[n, q] =
    k_c (y1_n - y0_q) / d(n, q) aligned with w1. `atoms` restricts the
    computation to a subset of atom indices.
    """
    n = w2.shape[1]
    k = h.shape[0]
    eye = alpha * np.eye(k)
    atoms = range(n) if atoms is None else atoms
    grads = np.empty(n)
    for idx in atoms:
        d = h * phi2[None, :]
        c = d @ (w2 @ (phi1[:, None] * w1)) - eye
        ch = c.conj().T
        dcol = -1j * w2[:, idx] * dfac12[:, idx]
        term1 = (phi1[idx] * w1[idx, :]) @ (ch @ (d @ dcol))
        wcol = d @ (w2[:, idx] * phi1[idx])
        drow = 1j * w1[idx, :] * dfac01[idx, :]
        term2 = drow @ (ch @ wcol)
        grads[idx] = 2.0 * (term1 + term2).real
    return grads


def shape_grads_film_layer2(h, vy, k_c, phi2, w2, phi1, w1, dfac12, alpha, atoms=None):
    """d J / d y_n for every atom n of the output layer of a two-layer cascade.

    Combines the exact far-field steering derivative (through vy = sin(theta)
    sin(phi) per user) with the frozen-amplitude derivative of the row of w2.
    """
    n = w2.shape[0]
    k = h.shape[0]
    eye = alpha * np.eye(k)
    atoms = range(n) if atoms is None else atoms
    grads = np.empty(n)
    jkvy = 1j * k_c * vy
    for idx in atoms:
        e = phi1[:, None] * w1
        d = h * phi2[None, :]
        c = d @ (w2 @ e) - eye
        ch = c.conj().T
        dhcol = jkvy * h[:, idx]
        r = phi2[idx] * (w2[idx, :] @ e)
        term_a = r @ (ch @ dhcol)
        drow = 1j * w2[idx, :] * dfac12[idx, :]
        term_b = (drow @ e) @ (ch @ (phi2[idx] * h[:, idx]))
        grads[idx] = 2.0 * (term_a + term_b).real
    return grads


def shape_grads_fim(h, vy, k_c, phi1, w1, dfac01, alpha, atoms=None):
    """d J / d y_n for every atom n of a single-layer cascade facing the users."""
    n = w1.shape[0]
    k = h.shape[0]
    eye = alpha * np.eye(k)
    atoms = range(n) if atoms is None else atoms
    grads = np.empty(n)
    jkvy = 1j * k_c * vy
    for idx in atoms:
        c = (h * phi1[None, :]) @ w1 - eye
        ch = c.conj().T
        dhcol = jkvy * h[:, idx]
        term_a = (phi1[idx] * w1[idx, :]) @ (ch @ dhcol)
        drow = 1j * w1[idx, :] * dfac01[idx, :]
        term_b = drow @ (ch @ (phi1[idx] * h[:, idx]))
        grads[idx] = 2.0 * (term_a + term_b).real
    return grads
