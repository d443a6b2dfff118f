# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled tracker hot kernels.

Mirrors trackgym._kernels_py; keep the algebra in the same order so both
backends agree to floating-point noise.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport atan2, fmod, hypot, sqrt

from trackgym.errors import NumericalError

cnp.import_array()

BACKEND = "native"

DEF N = 6
DEF M = 3
DEF NPTS = 13  # 2*N + 1

cdef double PI = 3.141592653589793115997963468544185161590576171875
cdef double TWO_PI = 2.0 * PI


cdef inline double _wrap(double angle) nogil:
    # Wrap to (-pi, pi].
    cdef double w = fmod(PI - angle, TWO_PI)
    if w < 0.0:
        w += TWO_PI
    return PI - w


cdef int _chol(double a[N][N], double l[N][N], int n) nogil:
    """Lower Cholesky of a into l; returns 0 on success, -1 if not PD."""
    cdef int i, j, k
    cdef double acc
    for i in range(n):
        for j in range(n):
            l[i][j] = 0.0
    for i in range(n):
        for j in range(i + 1):
            acc = a[i][j]
            for k in range(j):
                acc -= l[i][k] * l[j][k]
            if i == j:
                if acc <= 0.0:
                    return -1
                l[i][i] = sqrt(acc)
            else:
                l[i][j] = acc / l[j][j]
    return 0


cdef int _chol_psd(double a[N][N], double l[N][N], int n) nogil:
    """Cholesky with symmetrisation and one jittered retry; 0 ok, -1 failed."""
    cdef double sym[N][N]
    cdef double trace = 0.0
    cdef double jitter
    cdef int i, j
    for i in range(n):
        for j in range(n):
            sym[i][j] = 0.5 * (a[i][j] + a[j][i])
        trace += sym[i][i]
    if _chol(sym, l, n) == 0:
        return 0
    jitter = 1e-9 * trace
    if jitter <= 0.0:
        return -1
    for i in range(n):
        sym[i][i] += jitter
    return _chol(sym, l, n)


def predict_cv(cnp.ndarray[double, ndim=1] mean not None,
               cnp.ndarray[double, ndim=2] cov not None,
               double dt, double q):
    """Constant-velocity mean/covariance propagation: F x, F P F' + Q."""
    cdef cnp.ndarray[double, ndim=1] out_mean = np.empty(N)
    cdef cnp.ndarray[double, ndim=2] out_cov = np.empty((N, N))
    cdef double tmp[N][N]
    cdef double full[N][N]
    cdef int i, j
    cdef double qd1 = q * dt
    cdef double qd2 = q * dt * dt / 2.0
    cdef double qd3 = q * dt * dt * dt / 3.0

    for i in range(M):
        out_mean[i] = mean[i] + dt * mean[i + 3]
        out_mean[i + 3] = mean[i + 3]

    for i in range(N):
        for j in range(N):
            if i < M:
                tmp[i][j] = cov[i, j] + dt * cov[i + 3, j]
            else:
                tmp[i][j] = cov[i, j]
    for i in range(N):
        for j in range(N):
            if j < M:
                full[i][j] = tmp[i][j] + dt * tmp[i][j + 3]
            else:
                full[i][j] = tmp[i][j]
    for i in range(M):
        full[i][i] += qd3
        full[i][i + 3] += qd2
        full[i + 3][i] += qd2
        full[i + 3][i + 3] += qd1
    for i in range(N):
        for j in range(N):
            out_cov[i, j] = 0.5 * (full[i][j] + full[j][i])
    return out_mean, out_cov


def chol_psd(cnp.ndarray[double, ndim=2] matrix not None):
    """Lower Cholesky factor with a jittered retry; NumericalError on failure."""
    cdef int n = matrix.shape[0]
    if n != N:
        # Only the 6x6 path is compiled; other sizes use the python fallback.
        from trackgym import _kernels_py
        return _kernels_py.chol_psd(matrix)
    cdef double a[N][N]
    cdef double l[N][N]
    cdef int i, j
    for i in range(N):
        for j in range(N):
            a[i][j] = matrix[i, j]
    if _chol_psd(a, l, N) != 0:
        raise NumericalError("Cholesky failed after jitter retry")
    out = np.zeros((N, N))
    for i in range(N):
        for j in range(N):
            out[i, j] = l[i][j]
    return out


def ut_spherical(cnp.ndarray[double, ndim=1] mean not None,
                 cnp.ndarray[double, ndim=2] cov not None,
                 cnp.ndarray[double, ndim=1] sensor_position not None,
                 cnp.ndarray[double, ndim=1] noise_variances not None,
                 double alpha, double beta, double kappa):
    """Unscented transform of a 6-D Gaussian through the spherical measurement."""
    cdef double lam = alpha * alpha * (N + kappa) - N
    cdef double scale = N + lam
    if scale <= 0.0:
        raise ValueError("unscented-transform scaling n + lambda must be positive")
    cdef double spread = sqrt(scale)

    cdef double a[N][N]
    cdef double l[N][N]
    cdef int i, j, k
    for i in range(N):
        for j in range(N):
            a[i][j] = cov[i, j]
    if _chol_psd(a, l, N) != 0:
        raise NumericalError("Cholesky failed after jitter retry")

    cdef double points[NPTS][N]
    for j in range(N):
        points[0][j] = mean[j]
    for i in range(N):
        for j in range(N):
            points[1 + i][j] = mean[j] + spread * l[j][i]
            points[1 + N + i][j] = mean[j] - spread * l[j][i]

    cdef double wm[NPTS]
    cdef double wc[NPTS]
    cdef double wi = 1.0 / (2.0 * scale)
    for i in range(NPTS):
        wm[i] = wi
        wc[i] = wi
    wm[0] = lam / scale
    wc[0] = lam / scale + 1.0 - alpha * alpha + beta

    cdef double sx = sensor_position[0]
    cdef double sy = sensor_position[1]
    cdef double sz = sensor_position[2]
    cdef double meas[NPTS][M]
    cdef double rx, ry, rz, horiz, rng
    for i in range(NPTS):
        rx = points[i][0] - sx
        ry = points[i][1] - sy
        rz = points[i][2] - sz
        horiz = hypot(rx, ry)
        rng = sqrt(horiz * horiz + rz * rz)
        if rng == 0.0:
            raise ValueError("sigma point coincides with the sensor position")
        meas[i][0] = 0.0 if horiz == 0.0 else atan2(ry, rx)
        meas[i][1] = atan2(rz, horiz)
        meas[i][2] = rng

    # Increments relative to the central point; angles wrapped.
    cdef double deltas[NPTS][M]
    for i in range(NPTS):
        deltas[i][0] = _wrap(meas[i][0] - meas[0][0])
        deltas[i][1] = _wrap(meas[i][1] - meas[0][1])
        deltas[i][2] = meas[i][2] - meas[0][2]

    cdef double mean_delta[M]
    for j in range(M):
        mean_delta[j] = 0.0
        for i in range(NPTS):
            mean_delta[j] += wm[i] * deltas[i][j]

    cdef cnp.ndarray[double, ndim=1] zhat = np.empty(M)
    zhat[0] = _wrap(meas[0][0] + mean_delta[0])
    zhat[1] = _wrap(meas[0][1] + mean_delta[1])
    zhat[2] = meas[0][2] + mean_delta[2]

    cdef double resid[NPTS][M]
    for i in range(NPTS):
        for j in range(M):
            resid[i][j] = deltas[i][j] - mean_delta[j]

    cdef double s_acc[M][M]
    for j in range(M):
        for k in range(M):
            s_acc[j][k] = 0.0
    for i in range(NPTS):
        for j in range(M):
            for k in range(M):
                s_acc[j][k] += wc[i] * resid[i][j] * resid[i][k]
    for j in range(M):
        s_acc[j][j] += noise_variances[j]

    cdef cnp.ndarray[double, ndim=2] s = np.empty((M, M))
    for j in range(M):
        for k in range(M):
            s[j, k] = 0.5 * (s_acc[j][k] + s_acc[k][j])

    cdef cnp.ndarray[double, ndim=2] cross = np.zeros((N, M))
    cdef double dev
    for i in range(NPTS):
        for j in range(N):
            dev = wc[i] * (points[i][j] - mean[j])
            for k in range(M):
                cross[j, k] += dev * resid[i][k]
    return zhat, s, cross


cdef int _chol3(double a[M][M], double l[M][M]) nogil:
    cdef int i, j, k
    cdef double acc
    for i in range(M):
        for j in range(M):
            l[i][j] = 0.0
    for i in range(M):
        for j in range(i + 1):
            acc = a[i][j]
            for k in range(j):
                acc -= l[i][k] * l[j][k]
            if i == j:
                if acc <= 0.0:
                    return -1
                l[i][i] = sqrt(acc)
            else:
                l[i][j] = acc / l[j][j]
    return 0


cdef void _solve3(double l[M][M], double b[M], double x[M]) nogil:
    """Solve (L L') x = b given the lower Cholesky factor."""
    cdef double y[M]
    cdef int i, k
    cdef double acc
    for i in range(M):
        acc = b[i]
        for k in range(i):
            acc -= l[i][k] * y[k]
        y[i] = acc / l[i][i]
    for i in range(M - 1, -1, -1):
        acc = y[i]
        for k in range(i + 1, M):
            acc -= l[k][i] * x[k]
        x[i] = acc / l[i][i]


def combine_update(cnp.ndarray[double, ndim=1] mean not None,
                   cnp.ndarray[double, ndim=2] cov not None,
                   cnp.ndarray[double, ndim=1] zhat not None,
                   cnp.ndarray[double, ndim=2] s not None,
                   cnp.ndarray[double, ndim=2] cross not None,
                   cnp.ndarray[double, ndim=1] z not None):
    """Measurement update given a UT measurement prediction."""
    cdef double s_local[M][M]
    cdef double l[M][M]
    cdef int i, j, k
    for i in range(M):
        for j in range(M):
            s_local[i][j] = s[i, j]
    if _chol3(s_local, l) != 0:
        raise NumericalError("innovation covariance is not positive definite")

    cdef cnp.ndarray[double, ndim=1] innovation = np.empty(M)
    cdef double nu[M]
    nu[0] = _wrap(z[0] - zhat[0])
    nu[1] = _wrap(z[1] - zhat[1])
    nu[2] = z[2] - zhat[2]
    for i in range(M):
        innovation[i] = nu[i]

    cdef double sinv_nu[M]
    _solve3(l, nu, sinv_nu)
    cdef double dist2 = 0.0
    for i in range(M):
        dist2 += nu[i] * sinv_nu[i]
    cdef double distance = sqrt(dist2)

    # Gain K = cross @ S^-1, via solves against each row of cross.
    cdef double gain[N][M]
    cdef double row[M]
    cdef double sol[M]
    for i in range(N):
        for j in range(M):
            row[j] = cross[i, j]
        _solve3(l, row, sol)
        for j in range(M):
            gain[i][j] = sol[j]

    cdef cnp.ndarray[double, ndim=1] post_mean = np.empty(N)
    cdef double acc
    for i in range(N):
        acc = mean[i]
        for j in range(M):
            acc += gain[i][j] * nu[j]
        post_mean[i] = acc

    # Posterior covariance P - K S K' = P - cross S^-1 cross'.
    cdef double ksk[N][N]
    for i in range(N):
        for j in range(N):
            acc = 0.0
            for k in range(M):
                acc += gain[i][k] * cross[j, k]
            ksk[i][j] = acc
    cdef cnp.ndarray[double, ndim=2] post_cov = np.empty((N, N))
    for i in range(N):
        for j in range(N):
            post_cov[i, j] = cov[i, j] - 0.5 * (ksk[i][j] + ksk[j][i])
    return post_mean, post_cov, innovation, distance
