"""Reference systems shared across the test suite."""

import numpy as np

from ifsdim import AffineMap, Box, IfsSystem, RepellerSystem, SinePerturbedMap


def unit_box(d):
    return Box(np.zeros(d), np.ones(d))


def interval_halves():
    """{x/2, x/2 + 1/2}; attractor is [0, 1]."""
    dom = unit_box(1)
    half = np.array([[0.5]])
    return IfsSystem(
        [AffineMap(half, [0.0], dom), AffineMap(half, [0.5], dom)]
    )


def interval_thirds():
    """{x/3, x/3 + 2/3}; middle-thirds Cantor set."""
    dom = unit_box(1)
    third = np.array([[1.0 / 3.0]])
    return IfsSystem(
        [AffineMap(third, [0.0], dom), AffineMap(third, [2.0 / 3.0], dom)]
    )


SIERPINSKI_VERTICES = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def sierpinski():
    """Three similarities of ratio 1/2 toward the right-triangle corners."""
    dom = unit_box(2)
    half = 0.5 * np.eye(2)
    return IfsSystem(
        [AffineMap(half, 0.5 * v, dom) for v in SIERPINSKI_VERTICES]
    )


DIAG_LINEAR = np.diag([0.5, 1.0 / 3.0])
THREE_DIAG_SHIFTS = np.array([[0.0, 0.0], [0.5, 0.0], [0.25, 2.0 / 3.0]])


def three_diag():
    """Three maps sharing diag(1/2, 1/3)."""
    dom = unit_box(2)
    return IfsSystem([AffineMap(DIAG_LINEAR, b, dom) for b in THREE_DIAG_SHIFTS])


PAIR_DIAG_SHIFTS = np.array([[0.0, 0.0], [0.5, 2.0 / 3.0]])


def pair_diag():
    """Two maps sharing diag(1/2, 1/3) with disjoint images."""
    dom = unit_box(2)
    return IfsSystem([AffineMap(DIAG_LINEAR, b, dom) for b in PAIR_DIAG_SHIFTS])


PERTURBED_SHIFTS = np.array([[0.02, 0.02], [0.46, 0.02], [0.25, 0.64]])


def three_diag_perturbed(amplitude=1e-2):
    """Smoothly perturbed variant of the shared-diagonal triple."""
    dom = unit_box(2)
    return IfsSystem(
        [
            SinePerturbedMap(DIAG_LINEAR, b, amplitude, dom)
            for b in PERTURBED_SHIFTS
        ]
    )


def torus_repeller():
    """(2x mod 1, 3y mod 1) with the full 6-rectangle Markov grid.

    Rectangle s = 3 i + j covers [i/2, (i+1)/2] x [j/3, (j+1)/3]; every
    rectangle maps onto the whole square, so the transfer matrix is all
    ones and each inverse branch into rectangle ``a`` is
    w -> (w1/2 + i_a/2, w2/3 + j_a/3).
    """
    dom = unit_box(2)
    branches = {}
    for a in range(6):
        ia, ja = divmod(a, 3)
        corner = np.array([ia / 2.0, ja / 3.0])
        for b in range(6):
            branches[(a, b)] = AffineMap(DIAG_LINEAR, corner, dom)
    return RepellerSystem(branches, np.ones((6, 6), dtype=int))


def sierpinski_membership_error(points, steps=30):
    """Distance-like defect of points from the right Sierpinski gasket.

    Peels one address digit per step (doubling toward the nearest vertex)
    and reports how far each orbit strays from the closed unit triangle;
    membership up to 2^-steps corresponds to a small defect.
    """
    z = np.array(points, dtype=float, copy=True)
    defect = np.zeros(z.shape[0])
    for _ in range(steps):
        tri = np.maximum(z[:, 0] + z[:, 1] - 1.0, 0.0)
        low = np.maximum(-z.min(axis=1), 0.0)
        defect = np.maximum(defect, np.maximum(tri, low))
        toward1 = z[:, 0] >= 0.5
        toward2 = ~toward1 & (z[:, 1] >= 0.5)
        z = 2.0 * z
        z[toward1] -= SIERPINSKI_VERTICES[1]
        z[toward2] -= SIERPINSKI_VERTICES[2]
    return defect
