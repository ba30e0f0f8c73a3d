//! Objectives with subgradient oracles, and problem instances pairing an
//! objective with a feasible set.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, check_finite, Error, Result};
use crate::linalg::{dot, norm};
use crate::projection::FEASIBILITY_TOL;
use crate::sets::{EllipsoidSpectrum, FeasibleSet, SetKind};

/// Instance document schema version.
pub const INSTANCE_SCHEMA: u32 = 1;

/// Retry budget for instance generation.
const MAX_GENERATION_ATTEMPTS: u32 = 16;

/// A convex objective accessed through value and subgradient oracles.
pub trait Objective: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;

    /// Returns `s ∈ ∂_ε f(x)` together with the `ε` it actually satisfies,
    /// which never exceeds the requested one.
    fn subgradient(&self, x: &[f64], eps: f64) -> (Vec<f64>, f64);

    /// Whether `0 ∈ ∂f(x)`.
    fn is_stationary(&self, x: &[f64]) -> bool;
}

/// Built-in objectives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectiveSpec {
    /// `‖x‖₁`
    L1,
    /// `‖x − p‖₁`
    ShiftedL1 { p: Vec<f64> },
}

impl ObjectiveSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ObjectiveSpec::L1 => "l1",
            ObjectiveSpec::ShiftedL1 { .. } => "shifted_l1",
        }
    }

    fn shift(&self) -> Option<&[f64]> {
        match self {
            ObjectiveSpec::L1 => None,
            ObjectiveSpec::ShiftedL1 { p } => Some(p),
        }
    }

    fn residual<'a>(&'a self, x: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
        let p = self.shift();
        x.iter()
            .enumerate()
            .map(move |(i, xi)| p.map_or(*xi, |p| xi - p[i]))
    }
}

impl Objective for ObjectiveSpec {
    fn value(&self, x: &[f64]) -> f64 {
        self.residual(x).map(f64::abs).sum()
    }

    fn subgradient(&self, x: &[f64], _eps: f64) -> (Vec<f64>, f64) {
        (self.residual(x).map(sign).collect(), 0.0)
    }

    fn is_stationary(&self, x: &[f64]) -> bool {
        self.residual(x).all(|r| r == 0.0)
    }
}

/// `l1_value(x) = ‖x‖₁`
pub fn l1_value(x: &[f64]) -> f64 {
    ObjectiveSpec::L1.value(x)
}

/// Componentwise sign vector, an exact subgradient of `‖·‖₁`.
pub fn l1_subgradient(x: &[f64]) -> Vec<f64> {
    x.iter().copied().map(sign).collect()
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Parameters of the random sparse-recovery instance family
/// `min ‖x‖₁` over `{x ≥ 0, (x − x̄)ᵀQ(x − x̄) ≤ 1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EllipsoidL1Spec {
    pub n: usize,
    pub seed: u64,
    /// Range of the smallest eigenvalue `λ_n`.
    pub lambda_n_range: [f64; 2],
    /// Range of the remaining eigenvalues.
    pub lambda_rest_range: [f64; 2],
    /// `‖u‖` is drawn from this range scaled by `1/√λ_n`.
    pub u_norm_range: [f64; 2],
    /// Range of the entries of `u` before rescaling.
    pub u_entry_range: [f64; 2],
}

impl Default for EllipsoidL1Spec {
    fn default() -> Self {
        Self {
            n: 10,
            seed: 0,
            lambda_n_range: [1e-6, 1e-2],
            lambda_rest_range: [10.0, 1e3],
            u_norm_range: [0.8, 1.0],
            u_entry_range: [0.1, 1.0],
        }
    }
}

impl EllipsoidL1Spec {
    pub fn new(n: usize, seed: u64) -> Self {
        Self {
            n,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParams(format!(
                "instance dimension must be at least 2, got {}",
                self.n
            )));
        }
        let ranges = [
            ("lambda_n_range", self.lambda_n_range),
            ("lambda_rest_range", self.lambda_rest_range),
            ("u_norm_range", self.u_norm_range),
            ("u_entry_range", self.u_entry_range),
        ];
        for (name, [lo, hi]) in ranges {
            if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo <= hi) {
                return Err(Error::InvalidParams(format!("{name} must satisfy 0 < lo <= hi")));
            }
        }
        if self.u_norm_range[1] > 1.0 {
            return Err(Error::InvalidParams("u_norm_range must lie in (0, 1]".into()));
        }
        if self.lambda_n_range[1] >= self.lambda_rest_range[0] {
            return Err(Error::InvalidParams(
                "lambda_n_range must lie below lambda_rest_range".into(),
            ));
        }
        Ok(())
    }
}

/// Provenance of a generated instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorInfo {
    pub spec: EllipsoidL1Spec,
    /// Index of the RNG stream that produced the accepted instance.
    pub stream: u64,
    pub u: Vec<f64>,
    pub xi: f64,
    /// `(x̃ − x̄)ᵀQ(x̃ − x̄)` for the sparse point `x̃ = ξ e_n`.
    pub sparse_point_quadratic: f64,
    /// `x̄ᵀQx̄`, greater than one when `0 ∉ C`.
    pub origin_quadratic: f64,
}

/// An objective, a feasible set, a start point, and optional known answers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub schema: u32,
    pub objective: ObjectiveSpec,
    pub set: FeasibleSet,
    pub start: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_star: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_star: Option<Vec<f64>>,
    /// A known feasible point, used as a best-known value when `f*` is not.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_point: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorInfo>,
}

impl ProblemInstance {
    pub fn new(objective: ObjectiveSpec, set: FeasibleSet, start: Vec<f64>) -> Result<Self> {
        let inst = Self {
            schema: INSTANCE_SCHEMA,
            objective,
            set,
            start,
            f_star: None,
            x_star: None,
            reference_point: None,
            generator: None,
        };
        inst.validate()?;
        Ok(inst)
    }

    /// Attaches a known minimizer; `f*` is its objective value.
    pub fn with_solution(mut self, x_star: Vec<f64>) -> Result<Self> {
        self.f_star = Some(self.objective.value(&x_star));
        self.x_star = Some(x_star);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != INSTANCE_SCHEMA {
            return Err(Error::InvalidParams(format!(
                "unsupported instance schema {}",
                self.schema
            )));
        }
        let n = self.set.dimension();
        if let Some(p) = self.objective.shift() {
            check_dim(n, p.len())?;
            check_finite(p, "objective shift")?;
        }
        check_dim(n, self.start.len())?;
        check_finite(&self.start, "start point")?;
        let residual = self.set.feasibility_residual(&self.start)?;
        if residual > FEASIBILITY_TOL {
            return Err(Error::Infeasible { residual });
        }
        if let Some(x) = &self.x_star {
            check_dim(n, x.len())?;
            if !self.set.contains(x, FEASIBILITY_TOL)? {
                return Err(Error::InvalidParams("x_star is not feasible".into()));
            }
            if let Some(f) = self.f_star {
                if (self.objective.value(x) - f).abs() > 1e-10 {
                    return Err(Error::InvalidParams("f_star differs from f(x_star)".into()));
                }
            }
        }
        if let Some(x) = &self.reference_point {
            check_dim(n, x.len())?;
        }
        Ok(())
    }

    /// Objective value at the reference point, if one is attached.
    pub fn reference_value(&self) -> Option<f64> {
        self.reference_point.as_deref().map(|x| self.objective.value(x))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let inst: Self = serde_json::from_str(text)?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// `‖x − p‖₁` over a box, with `x* = clamp(p)` attached.
pub fn box_l1_problem(p: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> Result<ProblemInstance> {
    let set = FeasibleSet::new_box(lower.clone(), upper.clone())?;
    check_dim(set.dimension(), p.len())?;
    let x_star: Vec<f64> = p
        .iter()
        .zip(lower.iter().zip(&upper))
        .map(|(pi, (lo, hi))| pi.clamp(*lo, *hi))
        .collect();
    ProblemInstance::new(ObjectiveSpec::ShiftedL1 { p }, set, lower)?.with_solution(x_star)
}

/// Draws an instance of the sparse-recovery family. Construction:
/// `v_n = u/‖u‖`, `λ_n < 1/‖u‖²`, `ξ = 1/√λ_n`, `x̄ = u + ξ e_n`, so that
/// `ξ e_n ∈ C` and `0 ∉ C`. Both claims are checked; a failing draw is
/// retried on the next RNG stream.
pub fn generate_instance(spec: &EllipsoidL1Spec) -> Result<ProblemInstance> {
    spec.validate()?;
    let mut last = String::new();
    for stream in 0..MAX_GENERATION_ATTEMPTS as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(stream);
        match draw(spec, &mut rng, stream) {
            Ok(inst) => return Ok(inst),
            Err(e) => last = e.to_string(),
        }
    }
    Err(Error::Generation {
        attempts: MAX_GENERATION_ATTEMPTS,
        message: last,
    })
}

fn uniform<R: Rng>(rng: &mut R, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

fn draw(spec: &EllipsoidL1Spec, rng: &mut ChaCha8Rng, stream: u64) -> Result<ProblemInstance> {
    let n = spec.n;
    let lambda_n = uniform(rng, spec.lambda_n_range);
    let mut eigenvalues: Vec<f64> = (0..n - 1)
        .map(|_| uniform(rng, spec.lambda_rest_range))
        .collect();
    eigenvalues.sort_by(|a, b| b.total_cmp(a));
    eigenvalues.push(lambda_n);

    let mut u: Vec<f64> = (0..n).map(|_| uniform(rng, spec.u_entry_range)).collect();
    let target = uniform(rng, spec.u_norm_range) / lambda_n.sqrt();
    let scale = target / norm(&u);
    u.iter_mut().for_each(|x| *x *= scale);
    let u_norm = norm(&u);

    // columns[n-1] = u/‖u‖; the others complete an orthonormal basis
    let mut columns: Vec<Vec<f64>> = vec![u.iter().map(|x| x / u_norm).collect()];
    while columns.len() < n {
        let mut g: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        for _ in 0..2 {
            for c in &columns {
                let proj = dot(&g, c);
                g.iter_mut().zip(c).for_each(|(gi, ci)| *gi -= proj * ci);
            }
        }
        let gn = norm(&g);
        if gn < 1e-8 {
            continue;
        }
        columns.push(g.into_iter().map(|x| x / gn).collect());
    }
    columns.rotate_left(1);
    let mut eigenvectors = vec![0.0; n * n];
    for (j, col) in columns.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            eigenvectors[i * n + j] = *v;
        }
    }
    let spectrum = EllipsoidSpectrum::new(eigenvalues, eigenvectors)?;

    let xi = 1.0 / lambda_n.sqrt();
    let mut center = u.clone();
    center[n - 1] += xi;
    let set = FeasibleSet::new_ellipsoid_orthant(center.clone(), spectrum)?;

    let mut sparse = vec![0.0; n];
    sparse[n - 1] = xi;
    let (sparse_q, origin_q) = match set.kind() {
        SetKind::EllipsoidOrthant { spectrum, .. } => {
            let d: Vec<f64> = sparse.iter().zip(&center).map(|(a, b)| a - b).collect();
            (spectrum.quadratic_form(&d), spectrum.quadratic_form(&center))
        }
        _ => unreachable!(),
    };
    if !set.contains(&sparse, FEASIBILITY_TOL)? || sparse_q >= 1.0 {
        return Err(Error::Internal(format!(
            "sparse point outside C (quadratic {sparse_q})"
        )));
    }
    if set.contains(&vec![0.0; n], 0.0)? {
        return Err(Error::Internal(format!(
            "origin inside C (quadratic {origin_q})"
        )));
    }

    let mut inst = ProblemInstance::new(ObjectiveSpec::L1, set, center)?;
    inst.reference_point = Some(sparse);
    inst.generator = Some(GeneratorInfo {
        spec: spec.clone(),
        stream,
        u,
        xi,
        sparse_point_quadratic: sparse_q,
        origin_quadratic: origin_q,
    });
    Ok(inst)
}
