//! Compact convex feasible sets accessed through oracles.
//!
//! Every set exposes a linear minimization oracle ([`FeasibleSet::lmo`]), a
//! membership test with tolerance, a finite diameter bound, and, for boxes and
//! balls, the exact Euclidean projection.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::barrier::{self, BarrierSettings, BarrierSolution};
use crate::error::{check_dim, check_finite, Error, Result};
use crate::linalg::{dist, dot, norm};

/// Orthonormality tolerance applied when a spectrum is constructed.
const ORTHONORMAL_TOL: f64 = 1e-10;

/// Above this dimension the dense `Q` is never materialized implicitly.
const DENSE_Q_LIMIT: usize = 1000;

/// Spectral description of the positive definite matrix `Q = Σ λ_i v_i v_iᵀ`.
#[derive(Clone, Debug, PartialEq)]
pub struct EllipsoidSpectrum {
    eigenvalues: Vec<f64>,
    /// Row-major `n × n`; column `i` is the eigenvector for `eigenvalues[i]`.
    eigenvectors: Vec<f64>,
}

impl EllipsoidSpectrum {
    /// `eigenvectors` is row-major with the eigenvectors stored as columns.
    pub fn new(eigenvalues: Vec<f64>, eigenvectors: Vec<f64>) -> Result<Self> {
        let n = eigenvalues.len();
        if n == 0 {
            return Err(Error::InvalidSet("empty spectrum".into()));
        }
        check_dim(n * n, eigenvectors.len())?;
        check_finite(&eigenvalues, "eigenvalues")?;
        check_finite(&eigenvectors, "eigenvectors")?;
        if let Some(bad) = eigenvalues.iter().find(|&&l| l <= 0.0) {
            return Err(Error::InvalidSet(format!("non-positive eigenvalue {bad}")));
        }
        let spectrum = Self {
            eigenvalues,
            eigenvectors,
        };
        let residual = spectrum.orthonormality_residual();
        if residual > ORTHONORMAL_TOL {
            return Err(Error::InvalidSet(format!(
                "eigenvectors not orthonormal (residual {residual:e})"
            )));
        }
        Ok(spectrum)
    }

    /// Eigendecomposition of a dense symmetric positive definite matrix.
    pub fn from_dense(q: &DMatrix<f64>) -> Result<Self> {
        let n = q.nrows();
        if q.ncols() != n {
            return Err(Error::InvalidSet("Q must be square".into()));
        }
        let asym = (q - q.transpose()).amax();
        if asym > 1e-12 * q.amax().max(1.0) {
            return Err(Error::InvalidSet("Q must be symmetric".into()));
        }
        let eig = SymmetricEigen::new(q.clone());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut eigenvectors = vec![0.0; n * n];
        for (col, &src) in order.iter().enumerate() {
            for row in 0..n {
                eigenvectors[row * n + col] = eig.eigenvectors[(row, src)];
            }
        }
        Self::new(eigenvalues, eigenvectors)
    }

    pub fn dimension(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Row-major eigenvector matrix (eigenvectors are columns).
    pub fn eigenvectors(&self) -> &[f64] {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, i: usize) -> Vec<f64> {
        let n = self.dimension();
        (0..n).map(|r| self.eigenvectors[r * n + i]).collect()
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `max |VᵀV − I|` entrywise.
    pub fn orthonormality_residual(&self) -> f64 {
        let n = self.dimension();
        let v = &self.eigenvectors;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                let mut s = 0.0;
                for r in 0..n {
                    s += v[r * n + i] * v[r * n + j];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((s - target).abs());
            }
        }
        worst
    }

    /// Coordinates in the eigenbasis, `Vᵀx`.
    fn to_eigenbasis(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dimension();
        let mut y = vec![0.0; n];
        for (r, &xr) in x.iter().enumerate() {
            let row = &self.eigenvectors[r * n..(r + 1) * n];
            for (yi, &vri) in y.iter_mut().zip(row) {
                *yi += vri * xr;
            }
        }
        y
    }

    fn to_standard_basis(&self, y: &[f64]) -> Vec<f64> {
        let n = self.dimension();
        (0..n)
            .map(|r| dot(&self.eigenvectors[r * n..(r + 1) * n], y))
            .collect()
    }

    /// `Q x` through the spectrum.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.to_eigenbasis(x);
        for (yi, l) in y.iter_mut().zip(&self.eigenvalues) {
            *yi *= l;
        }
        self.to_standard_basis(&y)
    }

    /// `Q⁻¹ x` through the spectrum.
    pub fn apply_inverse(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.to_eigenbasis(x);
        for (yi, l) in y.iter_mut().zip(&self.eigenvalues) {
            *yi /= l;
        }
        self.to_standard_basis(&y)
    }

    /// `dᵀ Q d`
    pub fn quadratic_form(&self, d: &[f64]) -> f64 {
        self.to_eigenbasis(d)
            .iter()
            .zip(&self.eigenvalues)
            .map(|(y, l)| l * y * y)
            .sum()
    }

    /// Dense `Q = Σ λ_i v_i v_iᵀ`.
    pub fn dense(&self) -> DMatrix<f64> {
        let n = self.dimension();
        let v = DMatrix::from_row_slice(n, n, &self.eigenvectors);
        let mut scaled = v.clone();
        for (j, l) in self.eigenvalues.iter().enumerate() {
            scaled.column_mut(j).scale_mut(*l);
        }
        let q = &scaled * v.transpose();
        // symmetrize rounding noise
        (&q + q.transpose()) * 0.5
    }
}

/// Shape of a feasible set.
#[derive(Clone, Debug, PartialEq)]
pub enum SetKind {
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    /// Standard simplex `{x ≥ 0, Σx = 1}`.
    Simplex,
    /// `{x : (x−x̄)ᵀQ(x−x̄) ≤ 1}`
    Ellipsoid {
        center: Vec<f64>,
        spectrum: EllipsoidSpectrum,
    },
    /// `{x ≥ 0 : (x−x̄)ᵀQ(x−x̄) ≤ 1}`
    EllipsoidOrthant {
        center: Vec<f64>,
        spectrum: EllipsoidSpectrum,
    },
}

impl SetKind {
    pub fn name(&self) -> &'static str {
        match self {
            SetKind::Box { .. } => "box",
            SetKind::Ball { .. } => "ball",
            SetKind::Simplex => "simplex",
            SetKind::Ellipsoid { .. } => "ellipsoid",
            SetKind::EllipsoidOrthant { .. } => "ellipsoid_orthant",
        }
    }
}

/// A compact convex set with its oracles. Immutable after construction.
#[derive(Clone, Debug)]
pub struct FeasibleSet {
    kind: SetKind,
    dimension: usize,
    diameter_bound: f64,
    dense_q: Option<DMatrix<f64>>,
    barrier: BarrierSettings,
}

impl PartialEq for FeasibleSet {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.dimension == other.dimension
    }
}

impl FeasibleSet {
    pub fn new(kind: SetKind, dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidSet("dimension must be positive".into()));
        }
        let diameter_bound = match &kind {
            SetKind::Box { lower, upper } => {
                check_dim(dimension, lower.len())?;
                check_dim(dimension, upper.len())?;
                check_finite(lower, "box lower bound")?;
                check_finite(upper, "box upper bound")?;
                if lower.iter().zip(upper).any(|(l, u)| l > u) {
                    return Err(Error::InvalidSet("box requires lower <= upper".into()));
                }
                dist(lower, upper)
            }
            SetKind::Ball { center, radius } => {
                check_dim(dimension, center.len())?;
                check_finite(center, "ball center")?;
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::InvalidSet("ball radius must be positive".into()));
                }
                2.0 * radius
            }
            SetKind::Simplex => std::f64::consts::SQRT_2,
            SetKind::Ellipsoid { center, spectrum }
            | SetKind::EllipsoidOrthant { center, spectrum } => {
                check_dim(dimension, center.len())?;
                check_dim(dimension, spectrum.dimension())?;
                check_finite(center, "ellipsoid center")?;
                2.0 / spectrum.lambda_min().sqrt()
            }
        };
        let dense_q = match &kind {
            SetKind::EllipsoidOrthant { spectrum, .. } if dimension <= DENSE_Q_LIMIT => {
                Some(spectrum.dense())
            }
            _ => None,
        };
        let set = Self {
            kind,
            dimension,
            diameter_bound,
            dense_q,
            barrier: BarrierSettings::default(),
        };
        if let SetKind::EllipsoidOrthant { center, spectrum } = &set.kind {
            // fails early when the interior is empty
            barrier::start_point(center, spectrum)?;
        }
        Ok(set)
    }

    pub fn new_box(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = lower.len();
        Self::new(SetKind::Box { lower, upper }, n)
    }

    pub fn new_ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        let n = center.len();
        Self::new(SetKind::Ball { center, radius }, n)
    }

    pub fn new_simplex(dimension: usize) -> Result<Self> {
        Self::new(SetKind::Simplex, dimension)
    }

    pub fn new_ellipsoid(center: Vec<f64>, spectrum: EllipsoidSpectrum) -> Result<Self> {
        let n = center.len();
        Self::new(SetKind::Ellipsoid { center, spectrum }, n)
    }

    pub fn new_ellipsoid_orthant(center: Vec<f64>, spectrum: EllipsoidSpectrum) -> Result<Self> {
        let n = center.len();
        Self::new(SetKind::EllipsoidOrthant { center, spectrum }, n)
    }

    /// Replaces the barrier subsolver settings used by the ellipsoid-orthant LMO.
    pub fn with_barrier_settings(mut self, settings: BarrierSettings) -> Self {
        self.barrier = settings;
        self
    }

    pub fn kind(&self) -> &SetKind {
        &self.kind
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Upper bound on `max_{z,w∈C} ‖z−w‖`.
    pub fn diameter_bound(&self) -> f64 {
        self.diameter_bound
    }

    /// Deterministic feasible point returned by the LMO for `c = 0`.
    pub fn canonical_point(&self) -> Vec<f64> {
        match &self.kind {
            SetKind::Box { lower, .. } => lower.clone(),
            SetKind::Ball { center, .. } | SetKind::Ellipsoid { center, .. } => center.clone(),
            SetKind::Simplex => {
                let mut e = vec![0.0; self.dimension];
                e[0] = 1.0;
                e
            }
            SetKind::EllipsoidOrthant { center, spectrum } => barrier::start_point(center, spectrum)
                .expect("interior checked at construction"),
        }
    }

    /// Linear minimization oracle: a minimizer of `⟨c, z⟩` over the set.
    pub fn lmo(&self, c: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dimension, c.len())?;
        check_finite(c, "lmo direction")?;
        let point = match &self.kind {
            SetKind::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .zip(c)
                .map(|((&l, &u), &ci)| if ci >= 0.0 { l } else { u })
                .collect(),
            SetKind::Ball { center, radius } => {
                let nc = norm(c);
                if nc == 0.0 {
                    center.clone()
                } else {
                    center
                        .iter()
                        .zip(c)
                        .map(|(x, ci)| x - radius * (ci / nc))
                        .collect()
                }
            }
            SetKind::Simplex => {
                let mut j = 0;
                for (i, &ci) in c.iter().enumerate() {
                    if ci < c[j] {
                        j = i;
                    }
                }
                let mut e = vec![0.0; self.dimension];
                e[j] = 1.0;
                e
            }
            SetKind::Ellipsoid { center, spectrum } => ellipsoid_lmo(center, spectrum, c),
            SetKind::EllipsoidOrthant { .. } => self.lmo_with_report(c)?.point,
        };
        Ok(point)
    }

    /// Ellipsoid-orthant LMO with the barrier subsolver's diagnostics.
    pub fn lmo_with_report(&self, c: &[f64]) -> Result<BarrierSolution> {
        check_dim(self.dimension, c.len())?;
        check_finite(c, "lmo direction")?;
        match &self.kind {
            SetKind::EllipsoidOrthant { center, spectrum } => {
                let dense = match &self.dense_q {
                    Some(q) => std::borrow::Cow::Borrowed(q),
                    None => std::borrow::Cow::Owned(spectrum.dense()),
                };
                barrier::ellipsoid_orthant_lmo(center, spectrum, &dense, c, &self.barrier)
            }
            other => Err(Error::InvalidSet(format!(
                "barrier LMO only applies to ellipsoid_orthant, not {}",
                other.name()
            ))),
        }
    }

    /// Largest constraint violation at `x` (0 when feasible).
    ///
    /// Ball violations are measured as `‖x−c‖ − r`, ellipsoid violations as
    /// `q(x) − 1`, and bound violations in coordinate units.
    pub fn feasibility_residual(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dimension, x.len())?;
        let r = match &self.kind {
            SetKind::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .zip(x)
                .map(|((&l, &u), &xi)| (l - xi).max(xi - u))
                .fold(0.0, f64::max),
            SetKind::Ball { center, radius } => (dist(x, center) - radius).max(0.0),
            SetKind::Simplex => {
                let neg = x.iter().map(|&xi| -xi).fold(0.0, f64::max);
                let sum: f64 = x.iter().sum();
                neg.max((sum - 1.0).abs())
            }
            SetKind::Ellipsoid { center, spectrum } => {
                (quad(center, spectrum, x) - 1.0).max(0.0)
            }
            SetKind::EllipsoidOrthant { center, spectrum } => {
                let neg = x.iter().map(|&xi| -xi).fold(0.0, f64::max);
                neg.max(quad(center, spectrum, x) - 1.0)
            }
        };
        if r.is_nan() {
            return Err(Error::NonFinite("point"));
        }
        Ok(r)
    }

    /// Membership with slack `tol` on every defining constraint.
    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool> {
        Ok(self.feasibility_residual(x)? <= tol)
    }

    /// Smallest constraint slack at `x`; positive iff every inequality is
    /// strictly inactive. Equality constraints (simplex) are ignored.
    pub fn interior_slack(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dimension, x.len())?;
        let s = match &self.kind {
            SetKind::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .zip(x)
                .map(|((&l, &u), &xi)| (xi - l).min(u - xi))
                .fold(f64::INFINITY, f64::min),
            SetKind::Ball { center, radius } => radius - dist(x, center),
            SetKind::Simplex => x.iter().copied().fold(f64::INFINITY, f64::min),
            SetKind::Ellipsoid { center, spectrum } => 1.0 - quad(center, spectrum, x),
            SetKind::EllipsoidOrthant { center, spectrum } => x
                .iter()
                .copied()
                .fold(1.0 - quad(center, spectrum, x), f64::min),
        };
        Ok(s)
    }

    /// Exact Euclidean projection; only boxes and balls have one in closed form.
    pub fn exact_project(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dimension, v.len())?;
        check_finite(v, "projection input")?;
        match &self.kind {
            SetKind::Box { lower, upper } => Ok(v
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(&vi, (&l, &u))| vi.clamp(l, u))
                .collect()),
            SetKind::Ball { center, radius } => {
                let d = dist(v, center);
                if d <= *radius {
                    Ok(v.to_vec())
                } else {
                    Ok(center
                        .iter()
                        .zip(v)
                        .map(|(c, vi)| c + radius * (vi - c) / d)
                        .collect())
                }
            }
            other => Err(Error::NoClosedFormProjection(other.name())),
        }
    }

    pub fn has_exact_projection(&self) -> bool {
        matches!(self.kind, SetKind::Box { .. } | SetKind::Ball { .. })
    }

    /// Random feasible points: convex combinations of the canonical point and
    /// LMO outputs for Gaussian directions.
    pub fn sample_points<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        count: usize,
    ) -> Result<Vec<Vec<f64>>> {
        let n = self.dimension;
        let vertex_count = (n + 2).clamp(3, 8);
        let mut vertices = vec![self.canonical_point()];
        for _ in 0..vertex_count {
            let c: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
            vertices.push(self.lmo(&c)?);
        }
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let weights: Vec<f64> = (0..vertices.len()).map(|_| Exp1.sample(rng)).collect();
            let total: f64 = weights.iter().sum();
            let mut p = vec![0.0; n];
            for (w, vtx) in weights.iter().zip(&vertices) {
                for (pi, vi) in p.iter_mut().zip(vtx) {
                    *pi += (w / total) * vi;
                }
            }
            out.push(p);
        }
        Ok(out)
    }
}

fn quad(center: &[f64], spectrum: &EllipsoidSpectrum, x: &[f64]) -> f64 {
    let d: Vec<f64> = x.iter().zip(center).map(|(a, b)| a - b).collect();
    spectrum.quadratic_form(&d)
}

fn ellipsoid_lmo(center: &[f64], spectrum: &EllipsoidSpectrum, c: &[f64]) -> Vec<f64> {
    let nc = norm(c);
    if nc == 0.0 {
        return center.to_vec();
    }
    let unit: Vec<f64> = c.iter().map(|ci| ci / nc).collect();
    let qinv_c = spectrum.apply_inverse(&unit);
    let denom = dot(&unit, &qinv_c).sqrt();
    center
        .iter()
        .zip(&qinv_c)
        .map(|(x, d)| x - d / denom)
        .collect()
}

/// JSON document describing a feasible set.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetSpec {
    Box {
        dimension: usize,
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    Ball {
        dimension: usize,
        center: Vec<f64>,
        radius: f64,
    },
    Simplex {
        dimension: usize,
    },
    Ellipsoid {
        dimension: usize,
        center: Vec<f64>,
        #[serde(flatten)]
        matrix: QuadraticSpec,
    },
    EllipsoidOrthant {
        dimension: usize,
        center: Vec<f64>,
        #[serde(flatten)]
        matrix: QuadraticSpec,
    },
}

/// Either a spectrum (eigenvector rows) or, for `n ≤ 100`, a dense `Q`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum QuadraticSpec {
    Spectral {
        eigenvalues: Vec<f64>,
        /// Row-major rows of the eigenvector matrix (eigenvectors are columns).
        eigenvectors: Vec<Vec<f64>>,
    },
    Dense {
        #[serde(rename = "Q")]
        q: Vec<Vec<f64>>,
    },
}

const DENSE_JSON_LIMIT: usize = 100;

impl QuadraticSpec {
    fn into_spectrum(self, n: usize) -> Result<EllipsoidSpectrum> {
        match self {
            QuadraticSpec::Spectral {
                eigenvalues,
                eigenvectors,
            } => {
                if eigenvectors.len() != n || eigenvectors.iter().any(|r| r.len() != n) {
                    return Err(Error::InvalidSet(format!(
                        "eigenvectors must be {n}x{n}"
                    )));
                }
                EllipsoidSpectrum::new(eigenvalues, eigenvectors.concat())
            }
            QuadraticSpec::Dense { q } => {
                if n > DENSE_JSON_LIMIT {
                    return Err(Error::InvalidSet(format!(
                        "dense Q accepted only for n <= {DENSE_JSON_LIMIT}"
                    )));
                }
                if q.len() != n || q.iter().any(|r| r.len() != n) {
                    return Err(Error::InvalidSet(format!("Q must be {n}x{n}")));
                }
                EllipsoidSpectrum::from_dense(&DMatrix::from_row_slice(n, n, &q.concat()))
            }
        }
    }

    fn from_spectrum(spectrum: &EllipsoidSpectrum) -> Self {
        let n = spectrum.dimension();
        QuadraticSpec::Spectral {
            eigenvalues: spectrum.eigenvalues.clone(),
            eigenvectors: spectrum.eigenvectors.chunks(n).map(<[f64]>::to_vec).collect(),
        }
    }
}

impl TryFrom<SetSpec> for FeasibleSet {
    type Error = Error;

    fn try_from(spec: SetSpec) -> Result<Self> {
        match spec {
            SetSpec::Box {
                dimension,
                lower,
                upper,
            } => FeasibleSet::new(SetKind::Box { lower, upper }, dimension),
            SetSpec::Ball {
                dimension,
                center,
                radius,
            } => FeasibleSet::new(SetKind::Ball { center, radius }, dimension),
            SetSpec::Simplex { dimension } => FeasibleSet::new(SetKind::Simplex, dimension),
            SetSpec::Ellipsoid {
                dimension,
                center,
                matrix,
            } => {
                let spectrum = matrix.into_spectrum(dimension)?;
                FeasibleSet::new(SetKind::Ellipsoid { center, spectrum }, dimension)
            }
            SetSpec::EllipsoidOrthant {
                dimension,
                center,
                matrix,
            } => {
                let spectrum = matrix.into_spectrum(dimension)?;
                FeasibleSet::new(SetKind::EllipsoidOrthant { center, spectrum }, dimension)
            }
        }
    }
}

impl From<&FeasibleSet> for SetSpec {
    fn from(set: &FeasibleSet) -> Self {
        let dimension = set.dimension;
        match &set.kind {
            SetKind::Box { lower, upper } => SetSpec::Box {
                dimension,
                lower: lower.clone(),
                upper: upper.clone(),
            },
            SetKind::Ball { center, radius } => SetSpec::Ball {
                dimension,
                center: center.clone(),
                radius: *radius,
            },
            SetKind::Simplex => SetSpec::Simplex { dimension },
            SetKind::Ellipsoid { center, spectrum } => SetSpec::Ellipsoid {
                dimension,
                center: center.clone(),
                matrix: QuadraticSpec::from_spectrum(spectrum),
            },
            SetKind::EllipsoidOrthant { center, spectrum } => SetSpec::EllipsoidOrthant {
                dimension,
                center: center.clone(),
                matrix: QuadraticSpec::from_spectrum(spectrum),
            },
        }
    }
}

impl Serialize for FeasibleSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SetSpec::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for FeasibleSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let spec = SetSpec::deserialize(d)?;
        FeasibleSet::try_from(spec).map_err(serde::de::Error::custom)
    }
}

impl FeasibleSet {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}
