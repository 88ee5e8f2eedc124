//! Closed-form helpers for 2×2 complex matrices.

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64 as C64;

pub type M2 = Matrix2<C64>;
pub type V2 = Vector2<C64>;

/// Singular values `(σ₁, σ₂)` with `σ₁ ≥ σ₂`.
pub fn singular_values(m: &M2) -> (f64, f64) {
    let fro2: f64 = m.iter().map(|z| z.norm_sqr()).sum();
    let det = (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).norm();
    let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt();
    let s1 = ((fro2 + disc) / 2.0).sqrt();
    let s2 = if s1 > 0.0 { det / s1 } else { 0.0 };
    (s1, s2)
}

/// Unit vector spanning the most expanded direction of the image, i.e. the
/// leading eigenvector of `m m*`.
pub fn leading_left_singular_vector(m: &M2) -> V2 {
    let p = m[(0, 0)].norm_sqr() + m[(0, 1)].norm_sqr();
    let s = m[(1, 0)].norm_sqr() + m[(1, 1)].norm_sqr();
    let q = m[(0, 0)] * m[(1, 0)].conj() + m[(0, 1)] * m[(1, 1)].conj();
    let (s1, _) = singular_values(m);
    let l1 = s1 * s1;
    let a = V2::new(q, C64::new(l1 - p, 0.0));
    let b = V2::new(C64::new(l1 - s, 0.0), q.conj());
    let v = if a.norm() >= b.norm() { a } else { b };
    if v.norm() <= 1e-300 {
        return V2::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0));
    }
    v / C64::new(v.norm(), 0.0)
}

pub fn normalize(v: &V2) -> V2 {
    let n = v.norm();
    v / C64::new(n, 0.0)
}

pub fn det(m: &M2) -> C64 {
    m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
}

pub fn inverse(m: &M2) -> Option<M2> {
    let d = det(m);
    if d.norm() == 0.0 || !d.is_finite() {
        return None;
    }
    Some(M2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]) / d)
}

/// Gram–Schmidt QR with one re-orthogonalisation pass. Returns `Q` and the
/// moduli of the diagonal of `R`.
pub fn qr(m: &M2) -> (M2, [f64; 2]) {
    let c1 = m.column(0).into_owned();
    let c2 = m.column(1).into_owned();
    let r11 = c1.norm();
    let q1 = if r11 > 0.0 {
        c1 / C64::new(r11, 0.0)
    } else {
        V2::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0))
    };
    let mut u = c2 - q1 * q1.dotc(&c2);
    u -= q1 * q1.dotc(&u);
    let r22 = u.norm();
    let q2 = if r22 > 0.0 {
        u / C64::new(r22, 0.0)
    } else {
        V2::new(-q1[1].conj(), q1[0].conj())
    };
    (M2::from_columns(&[q1, q2]), [r11, r22])
}
