"""Quick end-to-end check of the Python bindings."""

import math

import graphonlab as gl


def main():
    g = gl.Graphon.sphere("s1", 500, seed=1)
    assert len(g) == 500
    assert abs(sum(g.weights) - 1.0) < 1e-12
    eig = g.spectrum(5)
    assert abs(eig[0] - 0.5) < 1e-2, eig

    c = gl.Graphon.constant(8, 0.3)
    assert abs(c.hom_density_exact("c3") - 0.3**3) < 1e-12
    lo, hi = c.cut_norm()
    assert lo <= hi + 1e-12

    s = gl.Graphon.step([0.5, 0.5], [[0.9, 0.1], [0.1, 0.9]])
    assert abs(s.cycle_trace(2) - sum(x * x for x in s.spectrum(2))) < 1e-12

    modes = gl.DrumModes("drum1", "dirichlet", depth=2, n_modes=5)
    assert math.isclose(modes.area, 3.5, rel_tol=1e-12)
    assert modes.eigenvalues[0] > 0

    r = gl.inscribed_radius("drum1")
    assert abs(r - 0.585786) < 1e-5, r

    h = gl.Graphon.heat("drum1", "dirichlet", t0=0.1, depth=2)
    assert max(max(row) for row in h.kernel) <= 1.0

    try:
        gl.Graphon.heat("drum9")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown drum accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
