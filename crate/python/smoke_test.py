"""Smoke test for the `unitsml` extension module.

Build and install first:

    pip install maturin
    maturin build --release -m crates/python/Cargo.toml -o dist
    pip install dist/unitsml-*.whl
"""

import json
import math
import sys

import unitsml


def check(cond, what):
    print(("ok   " if cond else "FAIL ") + what)
    return bool(cond)


def main():
    ok = True

    planck = unitsml.FeatureSpec.planck()
    ok &= check(planck.s() == 0, "planck spec has no dimensionless features")
    decs = planck.decoders("kg m^-1 s^-3", 4)
    ok &= check(decs == ["lambda^-4 T c k_B"], f"unique decoder {decs}")

    rk = unitsml.FeatureSpec.rietkerk()
    ok &= check(rk.s() == 12, "rietkerk spec has 12 dimensionless features")
    ok &= check(rk.lattice_coordinates("c alpha^-1 g_m") is not None, "listed feature is in the lattice")

    spec = unitsml.FeatureSpec.pendulum()
    ok &= check(len(spec.enumerate(2, True)) == 286, "286 dimensionless monomials")

    s, d, t = unitsml.smith_normal_form([[2, 4], [6, 8]])
    ok &= check([d[0][0], d[1][1]] == [2, 4], f"SNF diagonal {d}")
    ok &= check(unitsml.nullspace_basis([[1, 0], [0, 1], [1, 1]]) != [], "nullspace is nonempty")

    v = unitsml.rescale(["kg", "m", "s"], 2.9, "J", [1e-3, 1e-2, 1.0])
    ok &= check(math.isclose(v, 2.9e7, rel_tol=1e-12), f"2.9 J = {v:g} g cm^2 s^-2")

    rows, labels = unitsml.pendulum_data(300, seed=1)
    feats = spec.enumerate(2, True)
    exprs = [" ".join(f"{n}^{e}" for n, e in zip(spec.names, f) if e) or "1" for f in feats]
    model = unitsml.fit(spec, rows, labels, "kg m^2 s^-2", features=exprs, decoder="k_s L^2")
    test_rows, test_labels = unitsml.pendulum_data(50, seed=2)
    pred = model.predict(test_rows)
    err = max(abs(p - y) / abs(y) for p, y in zip(pred, test_labels))
    ok &= check(err < 1e-8, f"pendulum energy recovered (max rel err {err:.1e})")
    ok &= check(model.equivariance_residual(test_rows, 50, 3) < 1e-10, "model is equivariant")

    rep = json.loads(unitsml.run_experiment("blackbody", seed=0, n_train=64, n_test=16))
    ok &= check(abs(rep["constant"] - 2.0) < 0.05, f"blackbody constant {rep['constant']:.4f}")

    try:
        unitsml.FeatureSpec(["m"], [("x", "furlong")])
        ok &= check(False, "bad units raise")
    except ValueError as e:
        ok &= check("furlong" in str(e), "bad units raise ValueError")

    print("all checks passed" if ok else "some checks failed")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
