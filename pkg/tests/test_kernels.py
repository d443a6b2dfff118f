import subprocess
import sys

import numpy as np
import pytest

from trackgym import _kernels_py as kpy
from trackgym.errors import NumericalError

try:
    from trackgym import _native as knat

    HAVE_NATIVE = True
except ImportError:  # pragma: no cover - fallback-only environments
    knat = None
    HAVE_NATIVE = False

needs_native = pytest.mark.skipif(not HAVE_NATIVE, reason="compiled kernels unavailable")


def random_case(rng):
    a = rng.normal(size=(6, 6))
    cov = a @ a.T + 0.2 * np.eye(6)
    mean = rng.normal(size=6) * 60.0
    mean[0] += rng.uniform(2000, 8000)
    return mean, cov


class TestPythonKernels:
    def test_chol_psd_recovers_factor(self):
        rng = np.random.default_rng(1)
        a = rng.normal(size=(6, 6))
        cov = a @ a.T + np.eye(6)
        chol = kpy.chol_psd(cov)
        np.testing.assert_allclose(chol @ chol.T, cov, rtol=1e-10, atol=1e-10)

    def test_chol_psd_jitter_path(self):
        # rank-deficient but PSD: jitter retry must succeed
        v = np.ones((6, 1))
        cov = v @ v.T
        chol = kpy.chol_psd(cov)
        np.testing.assert_allclose(chol @ chol.T, cov, atol=1e-6)

    def test_chol_psd_rejects_negative_definite(self):
        with pytest.raises(NumericalError):
            kpy.chol_psd(-np.eye(6))

    def test_combine_rejects_singular_innovation(self):
        mean, cov = random_case(np.random.default_rng(0))
        with pytest.raises(NumericalError):
            kpy.combine_update(
                mean, cov, np.zeros(3), np.zeros((3, 3)), np.zeros((6, 3)), np.zeros(3)
            )


@needs_native
class TestBackendParity:
    def test_predict_parity(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            mean, cov = random_case(rng)
            for dt in (0.005, 0.1, 1.0):
                m1, c1 = kpy.predict_cv(mean, cov, dt, 1.3)
                m2, c2 = knat.predict_cv(mean, cov, dt, 1.3)
                np.testing.assert_allclose(m1, m2, rtol=1e-12, atol=1e-12)
                np.testing.assert_allclose(c1, c2, rtol=1e-10, atol=1e-10)

    def test_ut_parity(self):
        rng = np.random.default_rng(3)
        noise = np.array([1.2e-5, 1.2e-5, 25.0])
        for _ in range(100):
            mean, cov = random_case(rng)
            out_py = kpy.ut_spherical(mean, cov, np.zeros(3), noise, 0.5, 2.0, -3.0)
            out_nat = knat.ut_spherical(mean, cov, np.zeros(3), noise, 0.5, 2.0, -3.0)
            for a, b in zip(out_py, out_nat):
                np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-10)

    def test_combine_parity(self):
        rng = np.random.default_rng(4)
        noise = np.array([1.2e-5, 1.2e-5, 25.0])
        for _ in range(100):
            mean, cov = random_case(rng)
            zhat, s, cross = kpy.ut_spherical(
                mean, cov, np.zeros(3), noise, 0.5, 2.0, -3.0
            )
            z = zhat + rng.normal(size=3) * np.array([2e-3, 2e-3, 4.0])
            m1, c1, nu1, d1 = kpy.combine_update(mean, cov, zhat, s, cross, z)
            m2, c2, nu2, d2 = knat.combine_update(mean, cov, zhat, s, cross, z)
            np.testing.assert_allclose(m1, m2, rtol=1e-9, atol=1e-9)
            np.testing.assert_allclose(c1, c2, rtol=1e-9, atol=1e-9)
            np.testing.assert_allclose(nu1, nu2, atol=1e-12)
            assert d1 == pytest.approx(d2, rel=1e-10)

    def test_chol_parity_including_jitter(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            a = rng.normal(size=(6, 6))
            cov = a @ a.T + 1e-3 * np.eye(6)
            np.testing.assert_allclose(
                kpy.chol_psd(cov), knat.chol_psd(cov), rtol=1e-10, atol=1e-12
            )

    def test_ut_parity_across_azimuth_seam(self):
        # estimates straddling azimuth +-pi: the wrapped-increment averaging
        # must keep the predicted azimuth near the seam, in both backends
        rng = np.random.default_rng(6)
        noise = np.array([1.2e-5, 1.2e-5, 25.0])
        for _ in range(50):
            azimuth = np.pi - rng.uniform(-0.02, 0.02)
            r = rng.uniform(2000, 8000)
            mean = np.array(
                [r * np.cos(azimuth), r * np.sin(azimuth), rng.normal() * 100,
                 rng.normal(), rng.normal(), rng.normal()]
            )
            a = rng.normal(size=(6, 6)) * 20
            cov = a @ a.T + np.eye(6)
            out_py = kpy.ut_spherical(mean, cov, np.zeros(3), noise, 0.5, 2.0, -3.0)
            out_nat = knat.ut_spherical(mean, cov, np.zeros(3), noise, 0.5, 2.0, -3.0)
            for x, y in zip(out_py, out_nat):
                np.testing.assert_allclose(x, y, rtol=1e-9, atol=1e-9)
            assert abs(abs(out_py[0][0]) - np.pi) < 0.1


class TestBackendSelection:
    def test_env_var_forces_python(self):
        code = (
            "import trackgym; print(trackgym.BACKEND)"
        )
        out = subprocess.run(
            [sys.executable, "-c", code],
            capture_output=True,
            text=True,
            env={"PATH": "/usr/bin:/bin", "TRACKGYM_PURE_PYTHON": "1"},
        )
        assert out.stdout.strip() == "python"

    @needs_native
    def test_default_prefers_native(self):
        code = "import trackgym; print(trackgym.BACKEND)"
        out = subprocess.run(
            [sys.executable, "-c", code],
            capture_output=True,
            text=True,
            env={"PATH": "/usr/bin:/bin"},
        )
        assert out.stdout.strip() == "native"
