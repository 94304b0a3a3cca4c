//! Direction-space primitives: direction laws, the gradient frame, and
//! orthonormal bases of the complement of the gradient.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm, norm_sq, scale};

/// Below this norm a gradient is treated as zero.
pub const DEGENERATE_GRADIENT: f64 = 1e-300;

/// Projected Gaussian draws shorter than this are redrawn.
const MIN_PROJECTED_NORM: f64 = 1e-8;

/// Marginal law `μ_Y` of the direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DirectionLaw {
    #[default]
    UniformSphere,
    StandardGaussian,
}

impl DirectionLaw {
    pub fn is_sphere(self) -> bool {
        matches!(self, Self::UniformSphere)
    }
}

pub fn sample_direction<R: Rng + ?Sized>(law: DirectionLaw, out: &mut [f64], rng: &mut R) {
    match law {
        DirectionLaw::StandardGaussian => fill_gaussian(out, rng),
        DirectionLaw::UniformSphere => loop {
            fill_gaussian(out, rng);
            let n = norm(out);
            if n > MIN_PROJECTED_NORM {
                scale(1.0 / n, out);
                return;
            }
        },
    }
}

pub(crate) fn fill_gaussian<R: Rng + ?Sized>(out: &mut [f64], rng: &mut R) {
    for o in out.iter_mut() {
        *o = rng.sample(StandardNormal);
    }
}

/// `-(1 - V^{2/(d-1)})^{1/2}`, the inverse-CDF map for the sphere law.
pub fn rho_from_uniform(dim: usize, v: f64) -> f64 {
    let p = 2.0 / (dim as f64 - 1.0);
    -(1.0 - v.powf(p)).max(0.0).sqrt()
}

/// Draw from `ρ`, the parallel-component law of directions that trigger an
/// event. Supported on `[-1, 0]` for the sphere and `(-∞, 0]` for the Gaussian.
pub fn sample_rho<R: Rng + ?Sized>(law: DirectionLaw, dim: usize, rng: &mut R) -> f64 {
    match law {
        DirectionLaw::UniformSphere => rho_from_uniform(dim, rng.random()),
        DirectionLaw::StandardGaussian => {
            let e: f64 = rng.sample(Exp1);
            -(2.0 * e).sqrt()
        }
    }
}

/// Unit normal of the gradient and the projections it induces.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientFrame {
    normal: Vec<f64>,
    grad_norm: f64,
    degenerate: bool,
}

impl GradientFrame {
    pub fn new(grad: &[f64]) -> Result<Self> {
        let mut f = Self {
            normal: vec![0.0; grad.len()],
            grad_norm: 0.0,
            degenerate: true,
        };
        f.reset(grad)?;
        Ok(f)
    }

    /// Recomputes the frame in place.
    pub fn reset(&mut self, grad: &[f64]) -> Result<()> {
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("gradient"));
        }
        self.normal.resize(grad.len(), 0.0);
        let g = norm(grad);
        self.grad_norm = g;
        self.degenerate = !(g >= DEGENERATE_GRADIENT);
        if self.degenerate {
            self.normal.iter_mut().for_each(|v| *v = 0.0);
        } else {
            for (n, gi) in self.normal.iter_mut().zip(grad) {
                *n = gi / g;
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    pub fn grad_norm(&self) -> f64 {
        self.grad_norm
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// `P^∥(y) = <y, n>`
    pub fn parallel(&self, y: &[f64]) -> f64 {
        dot(y, &self.normal)
    }

    /// `P^⊥(y) = y - <y, n> n`, written into `out`.
    pub fn perpendicular(&self, y: &[f64], out: &mut [f64]) {
        let p = self.parallel(y);
        for ((o, yi), ni) in out.iter_mut().zip(y).zip(&self.normal) {
            *o = yi - p * ni;
        }
    }

    /// Removes the normal component of `v` in place.
    pub fn project_in_place(&self, v: &mut [f64]) {
        let p = self.parallel(v);
        axpy(-p, &self.normal, v);
    }
}

/// Standard Gaussian projected onto the complement of `n`.
pub fn projected_gaussian<R: Rng + ?Sized>(frame: &GradientFrame, out: &mut [f64], rng: &mut R) {
    fill_gaussian(out, rng);
    frame.project_in_place(out);
}

/// Uniform unit vector in the complement of `n`. For a degenerate frame this
/// is uniform on the whole sphere.
pub fn complement_unit_vector<R: Rng + ?Sized>(frame: &GradientFrame, out: &mut [f64], rng: &mut R) {
    loop {
        projected_gaussian(frame, out, rng);
        let n = norm(out);
        if n > MIN_PROJECTED_NORM {
            scale(1.0 / n, out);
            return;
        }
    }
}

/// `p` orthonormal vectors in the complement of `n`, drawn by Gram–Schmidt on
/// projected Gaussians. The resulting frame is uniformly oriented.
pub fn random_complement_frame<R: Rng + ?Sized>(
    frame: &GradientFrame,
    p: usize,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    let d = frame.dim();
    let available = if frame.is_degenerate() { d } else { d - 1 };
    if p > available {
        return Err(Error::InvalidArgument(format!(
            "cannot draw {p} orthonormal vectors in a {available}-dimensional complement"
        )));
    }
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(p);
    while basis.len() < p {
        let mut v = vec![0.0; d];
        projected_gaussian(frame, &mut v, rng);
        for b in &basis {
            let c = dot(&v, b);
            axpy(-c, b, &mut v);
        }
        // second pass keeps orthogonality at the 1e-15 level
        frame.project_in_place(&mut v);
        for b in &basis {
            let c = dot(&v, b);
            axpy(-c, b, &mut v);
        }
        let n = norm(&v);
        if n < MIN_PROJECTED_NORM {
            continue;
        }
        scale(1.0 / n, &mut v);
        basis.push(v);
    }
    Ok(basis)
}

/// Two orthonormal vectors orthogonal to `n`.
pub fn orthonormal_pair<R: Rng + ?Sized>(frame: &GradientFrame, rng: &mut R) -> Result<(Vec<f64>, Vec<f64>)> {
    if frame.dim() < 3 {
        return Err(Error::InvalidArgument(format!(
            "orthonormal pair needs d >= 3, got {}",
            frame.dim()
        )));
    }
    if frame.is_degenerate() {
        return Err(Error::DegenerateFrame("orthonormal pair"));
    }
    let mut e1 = vec![0.0; frame.dim()];
    let mut e2 = vec![0.0; frame.dim()];
    fill_orthonormal_pair(frame, &mut e1, &mut e2, rng);
    Ok((e1, e2))
}

/// Non-allocating core of [`orthonormal_pair`]; the caller checks `d >= 3`.
pub(crate) fn fill_orthonormal_pair<R: Rng + ?Sized>(
    frame: &GradientFrame,
    e1: &mut [f64],
    e2: &mut [f64],
    rng: &mut R,
) {
    complement_unit_vector(frame, e1, rng);
    loop {
        projected_gaussian(frame, e2, rng);
        let c = dot(e2, e1);
        axpy(-c, e1, e2);
        frame.project_in_place(e2);
        let c = dot(e2, e1);
        axpy(-c, e1, e2);
        let n = norm(e2);
        if n > MIN_PROJECTED_NORM {
            scale(1.0 / n, e2);
            return;
        }
    }
}

/// Deterministic orthonormal basis of the complement of `n` from the
/// Householder reflection mapping `e_i` to `n`, with `i = argmin |n_i|`.
pub fn orthonormal_basis_householder(frame: &GradientFrame) -> Result<Vec<Vec<f64>>> {
    if frame.is_degenerate() {
        return Err(Error::DegenerateFrame("householder basis"));
    }
    let n = frame.normal();
    let d = n.len();
    let i = (0..d)
        .min_by(|&a, &b| n[a].abs().total_cmp(&n[b].abs()))
        .expect("nonempty normal");
    let mut v = n.to_vec();
    v[i] -= 1.0;
    let vv = norm_sq(&v);
    let mut out = Vec::with_capacity(d - 1);
    for j in (0..d).filter(|&j| j != i) {
        // H e_j = e_j - 2 v v_j / ||v||²
        let c = 2.0 * v[j] / vv;
        let mut col: Vec<f64> = v.iter().map(|vk| -c * vk).collect();
        col[j] += 1.0;
        out.push(col);
    }
    Ok(out)
}
