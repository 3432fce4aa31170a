"""Independent reference implementations and frozen reference values.

Nothing here imports the package's numerical kernels; each oracle is
derived another way (series, analytic kinematics, finite differences,
term-by-term formulas) so that agreement is evidence rather than echo.
"""

import math

import numpy as np

# -- frozen values --------------------------------------------------------------
# Bound constants for k1 = 10, k2 = 11:
#   h1 = 2 min(10, 11)                      = 20
#   h2 = 4 max(1, 121, 100)                 = 484
#   h3 = 4 max(441, 121, 100)               = 1764
#   h4 = 2 (21)                             = 42
#   h5 = 4 min(441, 121, 100)               = 400
H_REFERENCE = (20.0, 484.0, 1764.0, 42.0, 400.0)

# First c candidate for J = diag(3, 2, 1): sqrt(2 * 1 * 20 / (9 * (484 + 1764)))
C_FIRST = math.sqrt(40.0 / (9.0 * 2248.0))  # 0.044464...
# Second c candidate with B = 0, k_Omega = 4.42, k = 21, lambda_M = 3
C_SECOND_B0 = 4 * 4.42 / (4 * 21 * 4 + 4.42**2)  # 0.049727...

# Mode values at (r1, r2) = (r_d1, -r_d2) with k1 = 10, k2 = 11, alpha = 1.9
PSI_AT_RD1_MINUS_RD2 = (22.0, 20.9, 41.0)

# Case I attitude error at t = 0: R = I, R_d = exp(-0.1 e2^), so Psi = 10 (1 - cos 0.1)
PSI0_CASE1 = 10.0 * (1.0 - math.cos(0.1))


# -- linear algebra ---------------------------------------------------------------

def cross_matrix(v):
    """Skew matrix written out entry by entry."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def expm_taylor(A, terms: int = 20) -> np.ndarray:
    out = np.eye(3)
    term = np.eye(3)
    for k in range(1, terms):
        term = term @ A / k
        out = out + term
    return out


def axis_rotation(axis: int, angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    if axis == 0:
        return np.array([[1, 0, 0], [0, c, -s], [0, s, c]])
    if axis == 1:
        return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]])
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])


def quaternion_rejection(n: int, seed: int) -> np.ndarray:
    """Haar rotations by rejection sampling in the unit 4-ball."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        q = rng.uniform(-1, 1, 4)
        r = np.linalg.norm(q)
        if r > 1 or r < 1e-3:
            continue
        w, x, y, z = q / r
        out.append(np.array([
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]))
    return np.array(out)


# -- reference trajectory -------------------------------------------------------------

def reference_angles(t):
    """(phi, theta, psi) and their first two derivatives."""
    ang = (math.sin(0.5 * t), 0.1 * (t - 1), 1 - math.cos(t))
    rate = (0.5 * math.cos(0.5 * t), 0.1, math.sin(t))
    acc = (-0.25 * math.sin(0.5 * t), 0.0, math.cos(t))
    return ang, rate, acc


def reference_Rd(t):
    (phi, theta, psi), _, _ = reference_angles(t)
    return axis_rotation(2, psi) @ axis_rotation(1, theta) @ axis_rotation(0, phi)


def euler_rate_omega(t):
    """Inertial angular velocity from the 3-2-1 Euler rates, analytically."""
    (phi, theta, psi), (dphi, dtheta, dpsi), _ = reference_angles(t)
    Rz = axis_rotation(2, psi)
    Ry = axis_rotation(1, theta)
    return dpsi * np.array([0.0, 0, 1]) + dtheta * Rz @ np.array([0.0, 1, 0]) + dphi * Rz @ Ry @ np.array([1.0, 0, 0])


def richardson(f, t, h):
    """Central difference with one Richardson step (fourth order)."""
    d1 = (f(t + h) - f(t - h)) / (2 * h)
    d2 = (f(t + h / 2) - f(t - h / 2)) / h
    return (4 * d2 - d1) / 3


# -- error functions and control, term by term -----------------------------------

def psi_I(R, Rd, b1, b2, k1, k2):
    return k1 * (1 - (R @ b1) @ (Rd @ b1)) + k2 * (1 - (R @ b2) @ (Rd @ b2))


def directional_gradient(f, R, h=1e-6):
    """Vector g with d/ds f(R exp(s eta^)) = g . eta at s = 0, by central differences."""
    g = np.zeros(3)
    for i in range(3):
        eta = np.zeros(3)
        eta[i] = 1.0
        plus = R @ expm_taylor(cross_matrix(h * eta))
        minus = R @ expm_taylor(cross_matrix(-h * eta))
        g[i] = (f(plus) - f(minus)) / (2 * h)
    return g


def control_oracle(R, Omega, Rd, wd, wd_dot, b1, b2, k1, k2, kW, J, e=None, kI=0.0, eI=None):
    """u = -e - k_Omega e_Omega - k_I e_I + (R^T w_d) x J R^T w_d + J R^T dw_d."""
    if e is None:
        e = k1 * np.cross(R.T @ Rd @ b1, b1) + k2 * np.cross(R.T @ Rd @ b2, b2)
    a = R.T @ wd
    eW = Omega - a
    u = -e - kW * eW + np.cross(a, J @ a) + J @ (R.T @ wd_dot)
    if eI is not None:
        u = u - kI * eI
    return u
