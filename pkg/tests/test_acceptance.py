"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v`` or directly with
``python3 tests/test_acceptance.py``. Each criterion is a function returning
``(ok, detail)``; the pytest wrappers print the line and assert ``ok``.
"""

import math
import os
import subprocess
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from pinchcert.averaging import average_simultaneous, conjugate_mean
from pinchcert.core import idempotency_residual, is_projection, matrix_rank_psd, projection_rank
from pinchcert.errors import InfeasibleError, ParityError
from pinchcert.majorization import (
    compose_certificates,
    conjugate_certificate,
    corner_reduction,
    corner_sum_certificate,
    cyclic_mean_certificate,
    eigen_majorization_check,
    pad_certificate,
    sign_pinch_certificate,
    tau_scalar_certificate,
    verify_majorization,
)
from pinchcert.nilpotent import nilpotent_realization, shift_trace
from pinchcert.pinching import (
    constant_diagonal_unitary,
    dixmier_unitary_from_pinching,
    pinching_from_averaging_unitary,
)
from pinchcert.projection_sums import (
    build_q_pm,
    feasibility,
    fillmore_decompose,
    gp_bound,
    halve_two_projections,
    mu_bound,
    two_projection_form,
)

from conftest import fro, rand_herm, rand_projection, rand_psd, rand_unitary

SEED = 20240611


def report(number, title, ok, detail):
    line = f"criterion {number:>2} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
    return line


def hermitian_ensemble(count, lo, hi, seed):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n = int(rng.integers(lo, hi + 1))
        yield rand_herm(rng, n)


# 1 --------------------------------------------------------------------------


def criterion_1():
    worst = 0.0
    rotations_ok = True
    start = time.perf_counter()
    for X in hermitian_ensemble(500, 2, 64, SEED + 1):
        n = X.shape[0]
        U, cert = constant_diagonal_unitary(X)
        err = np.max(np.abs(np.diag(U.conj().T @ X @ U).real - np.trace(X).real / n))
        worst = max(worst, err / (1 + fro(X)))
        rotations_ok &= cert.rotations <= n - 1
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-10 and rotations_ok and elapsed < 30
    return ok, f"max diag error / (1+||X||) = {worst:.2e} (<= 1e-10), rotations <= n-1: {rotations_ok}, {elapsed:.2f}s (< 30s)"


# 2 --------------------------------------------------------------------------


def criterion_2():
    worst_order = worst_avg = worst_trip = 0.0
    for X in hermitian_ensemble(500, 2, 64, SEED + 1):
        n = X.shape[0]
        _, cert = constant_diagonal_unitary(X)
        au = dixmier_unitary_from_pinching(cert)
        worst_order = max(worst_order, fro(np.linalg.matrix_power(au.W, n) - np.eye(n)) / n)
        worst_avg = max(worst_avg, au.residual / (n * (1 + fro(X))))
        back = pinching_from_averaging_unitary(X, au.W, n)
        worst_trip = max(worst_trip, back.residual)
    ok = worst_order <= 1e-10 and worst_avg <= 1e-9 and worst_trip <= 1e-8
    return ok, (
        f"||W^n - I||/n = {worst_order:.2e} (<= 1e-10), averaging/(n(1+||X||)) = {worst_avg:.2e} (<= 1e-9), "
        f"round trip residual = {worst_trip:.2e} (<= 1e-8)"
    )


# 3 --------------------------------------------------------------------------


def criterion_3():
    rng = np.random.default_rng(SEED + 3)
    worst_idem = worst_sum = 0.0
    counts_ok = necessity_ok = True
    for _ in range(300):
        n = int(rng.integers(1, 33))
        r = int(rng.integers(1, n + 1))
        m = int(rng.integers(r, 2 * n + 1))
        A = rand_psd(rng, n, r)
        A = A * (m / np.trace(A).real)
        cert = fillmore_decompose(A)
        counts_ok &= cert.count == m
        worst_idem = max(worst_idem, max(idempotency_residual(P) for P in cert.projections) / n)
        worst_sum = max(worst_sum, cert.sum_residual / (n * fro(A)))
        necessity_ok &= matrix_rank_psd(A) <= sum(projection_rank(P) for P in cert.projections)
    rejected = 0
    for i in range(300):
        n = int(rng.integers(2, 33))
        if i % 2 == 0:
            # non-integer trace
            A = rand_psd(rng, n, int(rng.integers(1, n + 1)))
            A = A * ((rng.integers(1, 2 * n) + rng.uniform(0.05, 0.95)) / np.trace(A).real)
        else:
            # integer trace below the rank
            r = int(rng.integers(2, n + 1))
            A = rand_psd(rng, n, r)
            A = A * (int(rng.integers(1, r)) / np.trace(A).real)
        flags = feasibility(A)
        try:
            fillmore_decompose(A)
            raised = False
        except InfeasibleError:
            raised = True
        rejected += (not flags.fillmore) and raised
    ok = counts_ok and necessity_ok and worst_idem <= 1e-9 and worst_sum <= 1e-8 and rejected == 300
    return ok, (
        f"counts exact: {counts_ok}, idempotency/n = {worst_idem:.2e} (<= 1e-9), "
        f"sum/(n||A||) = {worst_sum:.2e} (<= 1e-8), rank necessity: {necessity_ok}, infeasible rejected {rejected}/300"
    )


# 4 --------------------------------------------------------------------------


def criterion_4():
    worst_herm = worst_nil = 0.0
    for X in hermitian_ensemble(500, 2, 32, SEED + 4):
        X = shift_trace(X)
        n = X.shape[0]
        real = nilpotent_realization(X)
        worst_herm = max(worst_herm, fro(real.Z + real.Z.conj().T - X) / (1 + fro(X)))
        worst_nil = max(worst_nil, fro(np.linalg.matrix_power(real.Z, n)) / fro(X) ** n)
    ok = worst_herm <= 1e-10 and worst_nil <= 1e-8
    return ok, f"||Z+Z*-X||/(1+||X||) = {worst_herm:.2e} (<= 1e-10), ||Z^n||/||X||^n = {worst_nil:.2e} (<= 1e-8)"


# 5 --------------------------------------------------------------------------


def criterion_5():
    rng = np.random.default_rng(SEED + 5)
    Xs = [rand_herm(rng, 8) for _ in range(3)]
    start = time.perf_counter()
    cert = average_simultaneous(Xs)
    elapsed = time.perf_counter() - start
    residuals = [fro(conjugate_mean(X, cert.unitaries) - np.trace(X).real / 8 * np.eye(8)) for X in Xs]
    ok = cert.k == 512 and max(residuals) <= 1e-8 and elapsed < 5
    return ok, f"k = {cert.k} (= 512), max residual = {max(residuals):.2e} (<= 1e-8), {elapsed:.3f}s (< 5s)"


# 6 --------------------------------------------------------------------------


def criterion_6():
    a, b = gp_bound(1, 1), mu_bound(28)
    ok = type(a) is int and type(b) is int and a == 13 and b == 16
    return ok, f"gp_bound(1, 1) = {a!r} (== 13), mu_bound(28) = {b!r} (== 16)"


# 7 --------------------------------------------------------------------------


def criterion_7():
    rng = np.random.default_rng(SEED + 7)
    worst_idem = worst_id = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 17))
        s = int(rng.integers(1, n // 2 + 1))
        Q = rand_unitary(rng, n)
        Sb, Eb = Q[:, :s], Q[:, s : 2 * s]
        C = rand_psd(rng, s, int(rng.integers(1, s + 1)))
        C = C / np.linalg.eigvalsh(C)[-1] * rng.uniform(0.1, 1.0)
        b = Sb @ C @ Sb.conj().T
        V = Eb @ Sb.conj().T
        qm, qp, res = build_q_pm(b, V)
        worst_idem = max(worst_idem, idempotency_residual(qm) / n, idempotency_residual(qp) / n)
        worst_id = max(worst_id, res / n)
    ok = worst_idem <= 1e-10 and worst_id <= 1e-10
    return ok, f"idempotency/n = {worst_idem:.2e} (<= 1e-10), sum identity/n = {worst_id:.2e} (<= 1e-10)"


# 8 --------------------------------------------------------------------------


def _pair(rng, a, b, c, d, angles):
    m = len(angles)
    n = a + b + c + d + 2 * m
    Q = rand_unitary(rng, n)
    E = np.zeros((n, n))
    F = np.zeros((n, n))
    E[: a + b, : a + b] = np.eye(a + b)
    F[:a, :a] = np.eye(a)
    F[a + b : a + b + c, a + b : a + b + c] = np.eye(c)
    g = a + b + c + d
    for i, t in enumerate(angles):
        p, q = g + i, g + m + i
        E[p, p] = 1
        F[p, p], F[q, q] = math.cos(t) ** 2, math.sin(t) ** 2
        F[p, q] = F[q, p] = math.cos(t) * math.sin(t)
    return Q @ E @ Q.conj().T, Q @ F @ Q.conj().T


def criterion_8():
    rng = np.random.default_rng(SEED + 8)
    worst_recon = worst_half = 0.0
    structure_ok = True
    for _ in range(100):
        n = int(rng.integers(2, 17))
        E = rand_projection(rng, n, int(rng.integers(0, n + 1)))
        F = rand_projection(rng, n, int(rng.integers(0, n + 1)))
        worst_recon = max(worst_recon, two_projection_form(E, F).reconstruction_residual / n)
    for _ in range(100):
        a, b, c, d = (2 * int(rng.integers(0, 3)) for _ in range(4))
        m = 2 * int(rng.integers(0, 3))
        E, F = _pair(rng, a, b, c, d, rng.uniform(0.05, 1.5, size=m))
        if E.shape[0] == 0:
            continue
        n = E.shape[0]
        worst_recon = max(worst_recon, two_projection_form(E, F).reconstruction_residual / n)
        E1, E2, F1, F2 = halve_two_projections(E, F)
        worst_half = max(
            worst_half,
            fro(E1 + E2 - E) / n,
            fro(F1 + F2 - F) / n,
            fro(E1 @ F1) / n,
            fro(E2 @ F2) / n,
            *(idempotency_residual(P) / n for P in (E1, E2, F1, F2)),
        )
        structure_ok &= all(is_projection(P) for P in (E1, E2, F1, F2))
        structure_ok &= projection_rank(E1) == projection_rank(E2) == (a + b + m) // 2
        structure_ok &= projection_rank(F1) == projection_rank(F2) == (a + c + m) // 2
    parity = 0
    for _ in range(50):
        parts = [int(rng.integers(0, 3)) for _ in range(4)]
        m = int(rng.integers(0, 3))
        if all(p % 2 == 0 for p in parts[:3]) and m % 2 == 0:
            parts[0] += 1
        E, F = _pair(rng, *parts, rng.uniform(0.05, 1.5, size=m))
        try:
            halve_two_projections(E, F)
        except ParityError:
            parity += 1
    ok = worst_recon <= 1e-9 and worst_half <= 1e-9 and structure_ok and parity == 50
    return ok, (
        f"reconstruction/n = {worst_recon:.2e} (<= 1e-9), halving/n = {worst_half:.2e} (<= 1e-9), "
        f"projections and half ranks: {structure_ok}, odd inputs raising ParityError {parity}/50"
    )


# 9 --------------------------------------------------------------------------


def _certificates(rng):
    out = []
    for _ in range(10):
        blocks, m = int(rng.integers(1, 5)), int(rng.integers(1, 4))
        B = rand_herm(rng, blocks * m)
        pinch = sign_pinch_certificate(B, [m] * blocks)
        scalar = tau_scalar_certificate(pinch.target)
        V = rand_unitary(rng, blocks * m)
        out += [
            ("sign_pinch", pinch, 1e-12),
            ("cyclic", cyclic_mean_certificate([rand_herm(rng, m) for _ in range(blocks)]), 1e-12),
            ("corner_sum", corner_sum_certificate([rand_psd(rng, m) for _ in range(blocks)]), 1e-9),
            ("tau_scalar", scalar, 1e-9),
            ("compose", compose_certificates(scalar, pinch), 1e-8),
            ("conjugate", conjugate_certificate(pinch, V, V @ B @ V.conj().T), 1e-8),
        ]
    return out


def criterion_9():
    rng = np.random.default_rng(SEED + 9)
    failures = []
    certs = _certificates(rng)
    for name, c, bound in certs:
        n = c.source.shape[0]
        report_ = verify_majorization(c.target, c.source, c)
        limit = bound * n * (1 + fro(c.source))
        if not (report_.residual <= limit and eigen_majorization_check(c.target, c.source, 1e-8)):
            failures.append(name)
    reduced = 0
    for _ in range(20):
        m = int(rng.integers(1, 6))
        A = rand_psd(rng, m) + 0.05 * np.eye(m)
        inner = tau_scalar_certificate(A) if rng.uniform() < 0.5 else sign_pinch_certificate(A, [1] * m)
        red = corner_reduction(pad_certificate(inner, int(rng.integers(1, 4))), A)
        rep = verify_majorization(red.target, A, red)
        reduced += rep.passed and eigen_majorization_check(red.target, A, 1e-8)
    negative = not eigen_majorization_check(np.diag([2.0, 0.0]), np.diag([1.0, 1.0]))
    ok = not failures and reduced == 20 and negative
    return ok, (
        f"{len(certs) - len(failures)}/{len(certs)} certificates verify and pass the eigenvalue check, "
        f"corner reductions verified {reduced}/20, diag(2,0) vs diag(1,1) rejected: {negative}"
    )


# 10 -------------------------------------------------------------------------


def pipeline(outdir, seed):
    """Write one certificate of every kind through the command line."""
    from pinchcert.cli import run
    from pinchcert.serialization import write_matrix

    out = Path(outdir)
    rng = np.random.default_rng(seed)
    X = rand_herm(rng, 5)
    Y = rand_herm(rng, 5)
    A = rand_psd(rng, 4, 3)
    A = A * (5 / np.trace(A).real)
    E = rand_projection(rng, 4, 2)
    F = rand_projection(rng, 4, 2)
    b = np.diag([0.9, 0.4, 0, 0])
    V = np.zeros((4, 4))
    V[2, 0] = V[3, 1] = 1
    D = np.diag([1.0, -1.0, 1.0, -1.0])
    for name, M in dict(X=X, Y=Y, A=A, E=E, F=F, b=b, V=V, D=D).items():
        write_matrix(out / f"{name}.mat", M, name=name, seed=seed)
    m = {k: str(out / f"{k}.mat") for k in "XYAEFbVD"}
    commands = [
        ["pinch", m["X"], "-o", "pinch.cert"],
        ["pinch", m["D"], "--blocks", "2,2", "-o", "blocks.cert"],
        ["average", m["X"], m["Y"], "-o", "average.cert"],
        ["decompose", m["A"], "-o", "decompose.cert"],
        ["combine", m["A"], "-o", "combine.cert"],
        ["nilpotent", m["X"], "--shift-trace", "-o", "nilpotent.cert"],
        ["qpm", m["b"], m["V"], "-o", "qpm.cert"],
        ["twoproj", m["E"], m["F"], "-o", "twoproj.cert"],
        ["majorize", "pinch", m["X"], "--blocks", "2,3", "-o", "mpinch.cert"],
        ["majorize", "corner", m["A"], m["A"], "-o", "mcorner.cert"],
        ["majorize", "scalar", m["X"], "-o", "mscalar.cert"],
    ]
    codes = []
    for cmd in commands:
        cmd = cmd[:-1] + [str(out / cmd[-1])]
        codes.append(run(cmd + ["--seed", str(seed)]))
    return codes


def criterion_10():
    with tempfile.TemporaryDirectory() as tmp:
        dirs = [Path(tmp) / "run1", Path(tmp) / "run2"]
        for d in dirs:
            d.mkdir()
            proc = subprocess.run(
                [sys.executable, __file__, "--pipeline", str(d), str(SEED)],
                capture_output=True,
                text=True,
                env={**os.environ, "PYTHONHASHSEED": "0"},
            )
            if proc.returncode != 0:
                return False, f"pipeline failed: {proc.stderr.strip()[-300:]}"
        names = sorted(p.name for p in dirs[0].iterdir())
        same = names == sorted(p.name for p in dirs[1].iterdir())
        identical = [n for n in names if (dirs[0] / n).read_bytes() == (dirs[1] / n).read_bytes()]
        certs = [n for n in names if n.endswith(".cert")]
        ok = same and len(identical) == len(names) and len(certs) == 11
    return ok, f"{len(identical)}/{len(names)} files byte-identical across two runs ({len(certs)} certificates)"


CRITERIA = [
    (1, "constant-diagonal pinching", criterion_1),
    (2, "Dixmier unitary and round trip", criterion_2),
    (3, "finite sums of projections", criterion_3),
    (4, "nilpotent realization", criterion_4),
    (5, "simultaneous averaging k = 512", criterion_5),
    (6, "closed-form constants", criterion_6),
    (7, "q-plus/minus construction", criterion_7),
    (8, "two projections and halving", criterion_8),
    (9, "majorization suite", criterion_9),
    (10, "deterministic certificates", criterion_10),
]


@pytest.mark.parametrize("number,title,func", CRITERIA, ids=[f"criterion_{n}" for n, _, _ in CRITERIA])
def test_criterion(number, title, func, capsys):
    ok, detail = func()
    with capsys.disabled():
        print("\n" + report(number, title, ok, detail))
    assert ok, detail


def main(argv):
    if len(argv) == 3 and argv[0] == "--pipeline":
        codes = pipeline(argv[1], int(argv[2]))
        return 0 if all(c == 0 for c in codes) else 1
    all_ok = True
    for number, title, func in CRITERIA:
        ok, detail = func()
        all_ok &= ok
        print(report(number, title, ok, detail), flush=True)
    return 0 if all_ok else 1


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
