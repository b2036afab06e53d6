"""Regenerates the bundled model files. Output is committed; rerunning must
reproduce it byte for byte."""
import numpy as np
from scipy.linalg import expm

SEED = 20160601


def fmt_matrix(m):
    rows = ", ".join("[" + ", ".join(repr(float(x)) for x in row) + "]" for row in np.atleast_2d(m))
    return "[" + rows + "]"


def write(path, header, mats):
    with open(path, "w") as f:
        f.write(f"# {header}\n# generated by generate_models.py, seed {SEED}\n")
        for key in ["A", "B", "C", "Gamma", "Psi", "Sigma_w", "Sigma_v", "Sigma_x", "x_bar"]:
            f.write(f"{key} = {fmt_matrix(mats[key])}\n")


def oscillator2():
    omega, zeta, dt = 1.0, 0.1, 0.1
    ac = np.array([[0.0, 1.0], [-omega**2, -2 * zeta * omega]])
    bc = np.array([[0.0], [1.0]])
    # zero-order hold via the augmented exponential
    big = np.zeros((3, 3))
    big[:2, :2] = ac
    big[:2, 2:] = bc
    phi = expm(big * dt)
    a, b = phi[:2, :2], phi[:2, 2:]
    gamma = np.hstack([b, np.zeros((2, 1))])
    psi = np.array([[0.0, 1.0], [0.0, 0.0]])
    return dict(
        A=a, B=b, C=np.eye(2), Gamma=gamma, Psi=psi,
        Sigma_w=np.diag([1e-3, 1e-3]), Sigma_v=np.diag([1e-2, 1e-2]),
        Sigma_x=np.eye(2), x_bar=np.zeros((2, 1)),
    )


def rotation_block(rng, radius):
    angle = rng.uniform(0.1, 0.4)
    c, s = np.cos(angle), np.sin(angle)
    return radius * np.array([[c, -s], [s, c]])


def synthetic4():
    rng = np.random.default_rng(SEED)
    a = np.zeros((4, 4))
    a[:2, :2] = rotation_block(rng, 0.95)
    a[2:, 2:] = rotation_block(rng, 0.9)
    # states 3, 4 drive states 1, 2; no coupling back
    a[:2, 2:] = 0.1 * rng.standard_normal((2, 2))
    b = rng.standard_normal((4, 2))
    # two actuator directions and the two sensors of the targeted block
    gamma = np.zeros((4, 4))
    gamma[:2, :2] = np.eye(2) + 0.3 * rng.standard_normal((2, 2))
    psi = np.zeros((4, 4))
    psi[0, 2] = 1.0
    psi[1, 3] = 1.0
    return dict(
        A=a, B=b, C=np.eye(4), Gamma=gamma, Psi=psi,
        Sigma_w=1e-3 * np.diag(rng.uniform(0.5, 2.0, 4)), Sigma_v=1e-3 * np.eye(4),
        Sigma_x=5.0 * np.eye(4), x_bar=np.zeros((4, 1)),
    )


if __name__ == "__main__":
    write("oscillator2.toml", "2-state damped oscillator (omega=1, zeta=0.1, dt=0.1, ZOH)", oscillator2())
    write("synthetic4.toml", "4-state synthetic plant; states 1-2 are the attacker's targets", synthetic4())
