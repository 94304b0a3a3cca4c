//! Direction kernels applied at gradient events.
//!
//! The update splits along the unit gradient `n`: a parallel kernel acts on
//! the scalar `-<y, n>` and an orthogonal kernel acts on `y - <y, n> n`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{
    complement_unit_vector, fill_gaussian, fill_orthonormal_pair, projected_gaussian, random_complement_frame,
    sample_direction, sample_rho, DirectionLaw, GradientFrame,
};
use crate::linalg::{axpy, dot, norm, scale};

#[derive(Debug, Clone, PartialEq)]
pub enum ParallelKernel {
    /// Keeps `-<y, n>`: the bouncy-particle reflection.
    Identity,
    /// Fresh draw from `ρ`.
    Direct,
    IndependentMetropolis,
    RandomWalkMetropolis { half_width: f64 },
    /// Identity with probability `identity_weight`, otherwise `inner`.
    Mixture { identity_weight: f64, inner: Box<ParallelKernel> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AngleLaw {
    Uniform,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum OrthogonalVariant {
    Identity,
    Full,
    /// Swap of the coordinates on a random 2-plane of the complement.
    Switch,
    /// Quarter turn on a random 2-plane of the complement.
    PerpSwitch,
    RanP { p: usize, angle: AngleLaw },
    AutoRegressive { rho: f64 },
    Mixture { identity_weight: f64, inner: Box<OrthogonalVariant> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Polarity {
    #[default]
    Naive,
    Positive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalKernel {
    pub variant: OrthogonalVariant,
    pub polarity: Polarity,
}

impl OrthogonalKernel {
    pub fn identity() -> Self {
        Self {
            variant: OrthogonalVariant::Identity,
            polarity: Polarity::Naive,
        }
    }

    pub fn naive(variant: OrthogonalVariant) -> Self {
        Self {
            variant,
            polarity: Polarity::Naive,
        }
    }

    pub fn positive(variant: OrthogonalVariant) -> Self {
        Self {
            variant,
            polarity: Polarity::Positive,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.variant == OrthogonalVariant::Identity
    }
}

/// Event-time kernel `Q` together with the direction law it preserves.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    pub parallel: ParallelKernel,
    pub orthogonal: OrthogonalKernel,
    pub law: DirectionLaw,
}

impl KernelSpec {
    pub fn new(parallel: ParallelKernel, orthogonal: OrthogonalKernel, law: DirectionLaw) -> Self {
        Self {
            parallel,
            orthogonal,
            law,
        }
    }

    /// Bouncy particle sampler reflection.
    pub fn bps(law: DirectionLaw) -> Self {
        Self::new(ParallelKernel::Identity, OrthogonalKernel::identity(), law)
    }

    /// The same parallel kernel with the orthogonal part left untouched.
    pub fn without_orthogonal(&self) -> Self {
        Self {
            parallel: self.parallel.clone(),
            orthogonal: OrthogonalKernel::identity(),
            law: self.law,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        validate_parallel(&self.parallel, self.law, dim)?;
        validate_orthogonal(&self.orthogonal.variant, self.law, dim)
    }
}

fn check_weight(w: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&w) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{what} weight {w} outside [0, 1]")))
    }
}

fn validate_parallel(k: &ParallelKernel, law: DirectionLaw, dim: usize) -> Result<()> {
    match k {
        ParallelKernel::Identity => Ok(()),
        ParallelKernel::Direct => {
            if law.is_sphere() && dim < 2 {
                Err(Error::InvalidArgument("direct sampling on the sphere needs d >= 2".into()))
            } else {
                Ok(())
            }
        }
        ParallelKernel::IndependentMetropolis | ParallelKernel::RandomWalkMetropolis { .. } => {
            if !law.is_sphere() {
                return Err(Error::Unsupported(
                    "Metropolis parallel kernels are defined for the sphere law only".into(),
                ));
            }
            if dim < 2 {
                return Err(Error::InvalidArgument("Metropolis parallel kernels need d >= 2".into()));
            }
            if let ParallelKernel::RandomWalkMetropolis { half_width } = k {
                if !(*half_width > 0.0 && half_width.is_finite()) {
                    return Err(Error::InvalidArgument(format!("random-walk half-width {half_width}")));
                }
            }
            Ok(())
        }
        ParallelKernel::Mixture { identity_weight, inner } => {
            check_weight(*identity_weight, "parallel mixture")?;
            validate_parallel(inner, law, dim)
        }
    }
}

fn validate_orthogonal(v: &OrthogonalVariant, law: DirectionLaw, dim: usize) -> Result<()> {
    match v {
        OrthogonalVariant::Identity | OrthogonalVariant::Full => Ok(()),
        OrthogonalVariant::Switch | OrthogonalVariant::PerpSwitch => {
            if dim < 2 {
                Err(Error::InvalidArgument("two-plane kernels need d >= 2".into()))
            } else {
                Ok(())
            }
        }
        OrthogonalVariant::RanP { p, angle } => {
            if *p == 0 || *p + 1 > dim {
                return Err(Error::InvalidArgument(format!(
                    "ran-p needs 1 <= p <= d - 1, got p = {p}, d = {dim}"
                )));
            }
            if let AngleLaw::Fixed(t) = angle {
                if !t.is_finite() {
                    return Err(Error::InvalidArgument("ran-p angle must be finite".into()));
                }
            }
            Ok(())
        }
        OrthogonalVariant::AutoRegressive { rho } => {
            if law.is_sphere() {
                return Err(Error::Unsupported(
                    "the auto-regressive kernel needs the Gaussian direction law".into(),
                ));
            }
            if !(-1.0..=1.0).contains(rho) {
                return Err(Error::InvalidArgument(format!("auto-regressive rho {rho} outside [-1, 1]")));
            }
            Ok(())
        }
        OrthogonalVariant::Mixture { identity_weight, inner } => {
            check_weight(*identity_weight, "orthogonal mixture")?;
            validate_orthogonal(inner, law, dim)
        }
    }
}

/// `ln` of the unnormalized density of `u = -y_∥` on `[0, 1]`.
fn log_parallel_density(u: f64, dim: usize) -> f64 {
    let power = 0.5 * (dim as f64 - 3.0);
    if power == 0.0 {
        u.ln()
    } else {
        u.ln() + power * (1.0 - u * u).ln()
    }
}

fn metropolis_accept<R: Rng + ?Sized>(u: f64, proposal: f64, dim: usize, rng: &mut R) -> f64 {
    let log_ratio = log_parallel_density(proposal, dim) - log_parallel_density(u, dim);
    if log_ratio.is_nan() {
        // both endpoints outside the support; keep the current value
        return u;
    }
    if log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio {
        proposal
    } else {
        u
    }
}

/// Applies `K^∥` to `y_par_in = -<y, n>`.
pub fn apply_parallel<R: Rng + ?Sized>(
    kernel: &ParallelKernel,
    law: DirectionLaw,
    dim: usize,
    y_par_in: f64,
    rng: &mut R,
) -> Result<f64> {
    match kernel {
        ParallelKernel::Identity => Ok(y_par_in),
        ParallelKernel::Direct => Ok(sample_rho(law, dim, rng)),
        ParallelKernel::IndependentMetropolis => {
            if !law.is_sphere() {
                return Err(Error::Unsupported("IMH with the Gaussian law".into()));
            }
            let u = (-y_par_in).clamp(0.0, 1.0);
            let proposal: f64 = rng.random();
            Ok(-metropolis_accept(u, proposal, dim, rng))
        }
        ParallelKernel::RandomWalkMetropolis { half_width } => {
            if !law.is_sphere() {
                return Err(Error::Unsupported("RWMH with the Gaussian law".into()));
            }
            let u = (-y_par_in).clamp(0.0, 1.0);
            let step = rng.random_range(-half_width..=*half_width);
            let proposal = (u + step).rem_euclid(1.0);
            Ok(-metropolis_accept(u, proposal, dim, rng))
        }
        ParallelKernel::Mixture { identity_weight, inner } => {
            if rng.random::<f64>() < *identity_weight {
                Ok(y_par_in)
            } else {
                apply_parallel(inner, law, dim, y_par_in, rng)
            }
        }
    }
}

/// Reusable buffers for the kernels.
#[derive(Debug, Clone, Default)]
pub struct KernelScratch {
    e1: Vec<f64>,
    e2: Vec<f64>,
    perp: Vec<f64>,
    noise: Vec<f64>,
}

impl KernelScratch {
    pub fn new(dim: usize) -> Self {
        Self {
            e1: vec![0.0; dim],
            e2: vec![0.0; dim],
            perp: vec![0.0; dim],
            noise: vec![0.0; dim],
        }
    }

    fn ensure(&mut self, dim: usize) {
        for v in [&mut self.e1, &mut self.e2, &mut self.perp, &mut self.noise] {
            v.resize(dim, 0.0);
        }
    }
}

/// Applies `K^⊥` to `y_perp` (orthogonal to `n`), writing into `out`.
pub fn apply_orthogonal<R: Rng + ?Sized>(
    kernel: &OrthogonalKernel,
    law: DirectionLaw,
    frame: &GradientFrame,
    y_perp: &[f64],
    out: &mut [f64],
    rng: &mut R,
) -> Result<()> {
    let mut scratch = KernelScratch::new(y_perp.len());
    apply_orthogonal_with(kernel, law, frame, y_perp, out, &mut scratch, rng)
}

pub(crate) fn apply_orthogonal_with<R: Rng + ?Sized>(
    kernel: &OrthogonalKernel,
    law: DirectionLaw,
    frame: &GradientFrame,
    y_perp: &[f64],
    out: &mut [f64],
    scratch: &mut KernelScratch,
    rng: &mut R,
) -> Result<()> {
    scratch.ensure(y_perp.len());
    apply_variant(&kernel.variant, law, frame, y_perp, out, scratch, rng)?;
    if kernel.polarity == Polarity::Positive && dot(y_perp, out) < 0.0 {
        scale(-1.0, out);
    }
    Ok(())
}

fn complement_dim(frame: &GradientFrame) -> usize {
    if frame.is_degenerate() {
        frame.dim()
    } else {
        frame.dim() - 1
    }
}

/// Applies the 2x2 map `[[a, b], [c, e]]` to the coefficients of `y` on the
/// plane spanned by `e1, e2`.
fn plane_map(y: &[f64], e1: &[f64], e2: &[f64], m: [[f64; 2]; 2], out: &mut [f64]) {
    let c1 = dot(y, e1);
    let c2 = dot(y, e2);
    let n1 = m[0][0] * c1 + m[0][1] * c2;
    let n2 = m[1][0] * c1 + m[1][1] * c2;
    out.copy_from_slice(y);
    axpy(n1 - c1, e1, out);
    axpy(n2 - c2, e2, out);
}

/// Haar `±1` on the one-dimensional complement.
fn line_flip<R: Rng + ?Sized>(y: &[f64], out: &mut [f64], rng: &mut R) {
    out.copy_from_slice(y);
    if rng.random::<bool>() {
        scale(-1.0, out);
    }
}

fn apply_variant<R: Rng + ?Sized>(
    variant: &OrthogonalVariant,
    law: DirectionLaw,
    frame: &GradientFrame,
    y: &[f64],
    out: &mut [f64],
    s: &mut KernelScratch,
    rng: &mut R,
) -> Result<()> {
    match variant {
        OrthogonalVariant::Identity => out.copy_from_slice(y),
        OrthogonalVariant::Switch | OrthogonalVariant::PerpSwitch => {
            if complement_dim(frame) < 2 {
                line_flip(y, out, rng);
                return Ok(());
            }
            fill_orthonormal_pair(frame, &mut s.e1, &mut s.e2, rng);
            let m = if *variant == OrthogonalVariant::Switch {
                [[0.0, 1.0], [1.0, 0.0]]
            } else {
                [[0.0, -1.0], [1.0, 0.0]]
            };
            plane_map(y, &s.e1, &s.e2, m, out);
        }
        OrthogonalVariant::RanP { p, angle } => {
            let k = complement_dim(frame);
            if *p > k {
                return Err(Error::InvalidArgument(format!(
                    "ran-p with p = {p} in a {k}-dimensional complement"
                )));
            }
            match *p {
                1 => {
                    complement_unit_vector(frame, &mut s.e1, rng);
                    out.copy_from_slice(y);
                    if rng.random::<bool>() {
                        let c = dot(y, &s.e1);
                        axpy(-2.0 * c, &s.e1, out);
                    }
                }
                2 => {
                    fill_orthonormal_pair(frame, &mut s.e1, &mut s.e2, rng);
                    let theta = match angle {
                        AngleLaw::Uniform => rng.random_range(0.0..std::f64::consts::TAU),
                        AngleLaw::Fixed(t) => *t,
                    };
                    let (sn, cs) = theta.sin_cos();
                    plane_map(y, &s.e1, &s.e2, [[cs, sn], [sn, -cs]], out);
                }
                p => {
                    let basis = random_complement_frame(frame, p, rng)?;
                    let o = haar_orthogonal(p, rng);
                    let coef: Vec<f64> = basis.iter().map(|b| dot(y, b)).collect();
                    out.copy_from_slice(y);
                    for (i, b) in basis.iter().enumerate() {
                        let new: f64 = (0..p).map(|j| o[i][j] * coef[j]).sum();
                        axpy(new - coef[i], b, out);
                    }
                }
            }
        }
        OrthogonalVariant::Full => match law {
            DirectionLaw::UniformSphere => {
                complement_unit_vector(frame, out, rng);
                scale(norm(y), out);
            }
            DirectionLaw::StandardGaussian => projected_gaussian(frame, out, rng),
        },
        OrthogonalVariant::AutoRegressive { rho } => {
            if law.is_sphere() {
                return Err(Error::Unsupported("auto-regressive kernel on the sphere".into()));
            }
            projected_gaussian(frame, &mut s.noise, rng);
            let c = (1.0 - rho * rho).max(0.0).sqrt();
            for ((o, yi), g) in out.iter_mut().zip(y).zip(&s.noise) {
                *o = rho * yi + c * g;
            }
        }
        OrthogonalVariant::Mixture { identity_weight, inner } => {
            if rng.random::<f64>() < *identity_weight {
                out.copy_from_slice(y);
            } else {
                apply_variant(inner, law, frame, y, out, s, rng)?;
            }
        }
    }
    Ok(())
}

/// Haar-distributed `p x p` orthogonal matrix (Gram–Schmidt on a Gaussian matrix).
fn haar_orthogonal<R: Rng + ?Sized>(p: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(p);
    while q.len() < p {
        let mut v = vec![0.0; p];
        fill_gaussian(&mut v, rng);
        for _ in 0..2 {
            for b in &q {
                let c = dot(&v, b);
                axpy(-c, b, &mut v);
            }
        }
        let n = norm(&v);
        if n < 1e-8 {
            continue;
        }
        scale(1.0 / n, &mut v);
        q.push(v);
    }
    q
}

/// Full event update `Q((x, y), ·)` for a fixed frame, writing into `out`.
pub fn assemble_direction<R: Rng + ?Sized>(
    spec: &KernelSpec,
    frame: &GradientFrame,
    y_in: &[f64],
    out: &mut [f64],
    rng: &mut R,
) -> Result<()> {
    let mut scratch = KernelScratch::new(y_in.len());
    assemble_direction_with(spec, frame, y_in, out, &mut scratch, rng)
}

pub(crate) fn assemble_direction_with<R: Rng + ?Sized>(
    spec: &KernelSpec,
    frame: &GradientFrame,
    y_in: &[f64],
    out: &mut [f64],
    scratch: &mut KernelScratch,
    rng: &mut R,
) -> Result<()> {
    if frame.is_degenerate() {
        sample_direction(spec.law, out, rng);
        return Ok(());
    }
    let dim = y_in.len();
    scratch.ensure(dim);
    let mut perp = std::mem::take(&mut scratch.perp);
    let par = frame.parallel(y_in);
    frame.perpendicular(y_in, &mut perp);

    let y_par_new = apply_parallel(&spec.parallel, spec.law, dim, (-par).min(0.0), rng)?;
    let res = apply_orthogonal_with(&spec.orthogonal, spec.law, frame, &perp, out, scratch, rng);
    scratch.perp = perp;
    res?;

    if spec.law.is_sphere() {
        let radius = (1.0 - y_par_new * y_par_new).max(0.0).sqrt();
        let r = norm(out);
        if r > 1e-12 {
            scale(radius / r, out);
        } else {
            complement_unit_vector(frame, out, rng);
            scale(radius, out);
        }
    }
    axpy(y_par_new, frame.normal(), out);
    Ok(())
}

/// Reflection of `y` across the hyperplane orthogonal to `n`.
pub fn reflect(frame: &GradientFrame, y: &[f64], out: &mut [f64]) {
    let p = frame.parallel(y);
    out.copy_from_slice(y);
    axpy(-2.0 * p, frame.normal(), out);
}

// ---- textual form used by configuration files ----

fn split_call(s: &str) -> Result<(&str, Vec<&str>)> {
    let s = s.trim();
    let Some(open) = s.find('(') else {
        return Ok((s, Vec::new()));
    };
    if !s.ends_with(')') {
        return Err(Error::InvalidArgument(format!("unbalanced parentheses in {s:?}")));
    }
    let name = s[..open].trim();
    let body = &s[open + 1..s.len() - 1];
    let mut args = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in body.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                args.push(body[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
        if depth < 0 {
            return Err(Error::InvalidArgument(format!("unbalanced parentheses in {s:?}")));
        }
    }
    if depth != 0 {
        return Err(Error::InvalidArgument(format!("unbalanced parentheses in {s:?}")));
    }
    args.push(body[start..].trim());
    Ok((name, args))
}

fn parse_num<T: FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::InvalidArgument(format!("{what}: cannot parse {s:?}")))
}

fn arity(name: &str, args: &[&str], n: usize) -> Result<()> {
    if args.len() == n {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} takes {n} argument(s), got {}",
            args.len()
        )))
    }
}

pub const PARALLEL_NAMES: &str = "identity, direct, imh, rwmh, rwmh(h), mix(w, inner)";
pub const ORTHOGONAL_NAMES: &str = "identity, full, switch, perp-switch, ranp(p), ranp(p, theta), ar(rho), mix(p_r, inner)";

impl FromStr for ParallelKernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = split_call(s)?;
        let k = match (name, args.len()) {
            ("identity", 0) => Self::Identity,
            ("direct", 0) => Self::Direct,
            ("imh", 0) => Self::IndependentMetropolis,
            ("rwmh", 0) => Self::RandomWalkMetropolis { half_width: 0.5 },
            ("rwmh", _) => {
                arity(name, &args, 1)?;
                Self::RandomWalkMetropolis {
                    half_width: parse_num(args[0], "rwmh half-width")?,
                }
            }
            ("mix", _) => {
                arity(name, &args, 2)?;
                Self::Mixture {
                    identity_weight: parse_num(args[0], "mix weight")?,
                    inner: Box::new(args[1].parse()?),
                }
            }
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "unknown parallel kernel {s:?}; expected one of {PARALLEL_NAMES}"
                )))
            }
        };
        Ok(k)
    }
}

impl fmt::Display for ParallelKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Identity => f.write_str("identity"),
            Self::Direct => f.write_str("direct"),
            Self::IndependentMetropolis => f.write_str("imh"),
            Self::RandomWalkMetropolis { half_width } => write!(f, "rwmh({half_width})"),
            Self::Mixture { identity_weight, inner } => write!(f, "mix({identity_weight},{inner})"),
        }
    }
}

impl FromStr for OrthogonalVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = split_call(s)?;
        let v = match (name, args.len()) {
            ("identity", 0) => Self::Identity,
            ("full", 0) => Self::Full,
            ("switch", 0) => Self::Switch,
            ("perp-switch", 0) => Self::PerpSwitch,
            ("ranp", 1) => Self::RanP {
                p: parse_num(args[0], "ranp dimension")?,
                angle: AngleLaw::Uniform,
            },
            ("ranp", 2) => Self::RanP {
                p: parse_num(args[0], "ranp dimension")?,
                angle: AngleLaw::Fixed(parse_num(args[1], "ranp angle")?),
            },
            ("ar", _) => {
                arity(name, &args, 1)?;
                Self::AutoRegressive {
                    rho: parse_num(args[0], "ar rho")?,
                }
            }
            ("mix", _) => {
                arity(name, &args, 2)?;
                Self::Mixture {
                    identity_weight: parse_num(args[0], "mix weight")?,
                    inner: Box::new(args[1].parse()?),
                }
            }
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "unknown orthogonal kernel {s:?}; expected one of {ORTHOGONAL_NAMES}"
                )))
            }
        };
        Ok(v)
    }
}

impl fmt::Display for OrthogonalVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Identity => f.write_str("identity"),
            Self::Full => f.write_str("full"),
            Self::Switch => f.write_str("switch"),
            Self::PerpSwitch => f.write_str("perp-switch"),
            Self::RanP {
                p,
                angle: AngleLaw::Uniform,
            } => write!(f, "ranp({p})"),
            Self::RanP {
                p,
                angle: AngleLaw::Fixed(t),
            } => write!(f, "ranp({p},{t})"),
            Self::AutoRegressive { rho } => write!(f, "ar({rho})"),
            Self::Mixture { identity_weight, inner } => write!(f, "mix({identity_weight},{inner})"),
        }
    }
}

impl FromStr for Polarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "naive" => Ok(Self::Naive),
            "positive" => Ok(Self::Positive),
            other => Err(Error::InvalidArgument(format!(
                "unknown polarity {other:?}; expected naive or positive"
            ))),
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Naive => "naive",
            Self::Positive => "positive",
        })
    }
}

impl FromStr for DirectionLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "sphere" => Ok(Self::UniformSphere),
            "gaussian" => Ok(Self::StandardGaussian),
            other => Err(Error::InvalidArgument(format!(
                "unknown direction law {other:?}; expected sphere or gaussian"
            ))),
        }
    }
}

impl fmt::Display for DirectionLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::UniformSphere => "sphere",
            Self::StandardGaussian => "gaussian",
        })
    }
}
