//! Fixed-size real and complex vector helpers used throughout the crate.

use num_complex::Complex64;

pub type Vec3 = [f64; 3];
pub type CVec3 = [Complex64; 3];
pub type CMat3 = [[Complex64; 3]; 3];
pub type Mat3 = [[f64; 3]; 3];

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn cvec(v: Vec3) -> CVec3 {
    [v[0].into(), v[1].into(), v[2].into()]
}

/// Bilinear (unconjugated) product `a · b`.
#[inline]
pub fn cdot(a: &CVec3, b: &CVec3) -> Complex64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cdot_real(a: &CVec3, b: &Vec3) -> Complex64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Hermitian norm `sqrt(sum |a_i|^2)`.
#[inline]
pub fn cnorm(a: &CVec3) -> f64 {
    (a[0].norm_sqr() + a[1].norm_sqr() + a[2].norm_sqr()).sqrt()
}

#[inline]
pub fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn cscale(a: &CVec3, k: Complex64) -> CVec3 {
    [a[0] * k, a[1] * k, a[2] * k]
}

#[inline]
pub fn cadd(a: &CVec3, b: &CVec3) -> CVec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn csub(a: &CVec3, b: &CVec3) -> CVec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn re(a: &CVec3) -> Vec3 {
    [a[0].re, a[1].re, a[2].re]
}

#[inline]
pub fn scale(a: &Vec3, k: f64) -> Vec3 {
    [a[0] * k, a[1] * k, a[2] * k]
}

/// Outer product `a ⊗ b`, entry `(i, j) = a_i b_j`.
#[inline]
pub fn outer(a: &CVec3, b: &CVec3) -> CMat3 {
    let mut m = [[ZERO; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = a[i] * b[j];
        }
    }
    m
}

#[inline]
pub fn mat_add(a: &CMat3, b: &CMat3) -> CMat3 {
    let mut m = *a;
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] += b[i][j];
        }
    }
    m
}

#[inline]
pub fn mat_scale(a: &CMat3, k: Complex64) -> CMat3 {
    let mut m = *a;
    for row in m.iter_mut() {
        for v in row.iter_mut() {
            *v *= k;
        }
    }
    m
}

pub fn mat_vec(q: &Mat3, v: &Vec3) -> Vec3 {
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = q[i][0] * v[0] + q[i][1] * v[1] + q[i][2] * v[2];
    }
    out
}

pub fn mat_cvec(q: &Mat3, v: &CVec3) -> CVec3 {
    let mut out = [ZERO; 3];
    for i in 0..3 {
        out[i] = v[0] * q[i][0] + v[1] * q[i][1] + v[2] * q[i][2];
    }
    out
}

pub fn transpose(q: &Mat3) -> Mat3 {
    let mut t = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = q[j][i];
        }
    }
    t
}

/// Rotation about the x3 axis by `phi`.
pub fn rotation_x3(phi: f64) -> Mat3 {
    let (sn, cs) = phi.sin_cos();
    [[cs, -sn, 0.0], [sn, cs, 0.0], [0.0, 0.0, 1.0]]
}

/// Rotation about an arbitrary unit axis (Rodrigues).
pub fn rotation_axis_angle(axis: Vec3, angle: f64) -> Mat3 {
    let n = norm(&axis);
    let [x, y, z] = scale(&axis, 1.0 / n);
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    [
        [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
        [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
        [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
    ]
}

/// Principal complex square root of a real radicand.
#[inline]
pub fn csqrt_real(x: f64) -> Complex64 {
    if x >= 0.0 {
        c(x.sqrt(), 0.0)
    } else {
        c(0.0, (-x).sqrt())
    }
}
