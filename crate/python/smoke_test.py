"""Smoke test for the pysuffreduce extension.

Build and install first:

    pip install maturin
    maturin build --release -m crates/python/Cargo.toml -o dist
    pip install dist/pysuffreduce-*.whl

Then run `python python/smoke_test.py`.
"""

import math

import pysuffreduce as sr


def close(a, b, tol=1e-8):
    return abs(a - b) <= tol


def main():
    cov = sr.covariance([[1, 1], [1, -1]])
    assert cov.to_list() == [[1.0, 0.0], [0.0, 1.0]], cov.to_list()

    x = sr.SymMatrix([[1, 0.8, 0.1], [0.8, 1, 0.3], [0.1, 0.3, 1]])
    assert x.dim == 3 and x[0, 1] == 0.8
    assert sr.slc_labels(x, 0.6) == [0, 0, 1]
    merges = sr.dendrogram(x)
    assert [round(h, 12) for _, _, h in merges] == [0.8, 0.3]
    assert sr.slt(x, 0.6).to_list() == [[1, 0.8, 0], [0.8, 1, 0], [0, 0, 1]]

    values, vectors = x.eigh()
    assert values == sorted(values, reverse=True) and len(vectors) == 3
    assert close(sum(values), 3.0, 1e-12)

    assert sr.hard_threshold([3.0, -0.5, -2.0], [1.0, 1.0, 1.0]) == [3.0, 0.0, -2.0]
    assert sr.lasso([3.0, -0.5, -2.0], [1.0, 1.0, 1.0]) == [2.0, 0.0, -1.0]
    assert sr.nnls([1.5, -2.0]) == [1.5, 0.0]

    theta, report = sr.solve(sr.SymMatrix([[1, 0], [0, 1]]), "glasso", lam=0.0)
    assert report["converged"] and close(theta[0, 0], 1.0, 1e-8) and theta[0, 1] == 0.0

    theta, _ = sr.solve(sr.SymMatrix([[3, 0], [0, 1]]), "fps", lam=0.0, k=1)
    assert close(theta[0, 0], 1.0, 1e-7) and abs(theta[1, 1]) < 1e-7

    two = sr.SymMatrix([[2, 0.9, 0.05, 0], [0.9, 2, 0, 0.02], [0.05, 0, 1.5, -0.7], [0, 0.02, -0.7, 1.5]])
    a, _ = sr.solve(two, "glasso", lam=0.1)
    b, rep = sr.solve(two, "glasso", lam=0.1, decompose=True)
    assert len(rep["blocks"]) == 2
    assert max(abs(a[i, j] - b[i, j]) for i in range(4) for j in range(4)) <= 1e-5

    s = sr.check_sufficiency(two, "glasso", lam=0.1)
    assert s["pass"], s

    try:
        sr.solve(sr.SymMatrix([[1.0 if i == j else 0.0 for j in range(20)] for i in range(20)]), "ising", lam=0.1)
    except ValueError:
        pass
    else:
        raise AssertionError("ising above the dimension limit should raise")

    summary = sr.run_verify(seed=0, sizes=[5])
    assert summary["trials"] > 0 and not summary["failures"], summary["failures"]

    assert sr.positive_part([-1.0, 2.0]) == [0.0, 2.0]
    assert math.isclose(sr.slt_plus(x)[0, 2], 0.1)
    print("pysuffreduce smoke test: OK")


if __name__ == "__main__":
    main()
