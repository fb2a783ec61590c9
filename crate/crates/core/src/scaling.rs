//! Normalization sequences and predicted limit laws for every combination
//! vector of a classified replacement matrix.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectral::{stationary_second_moment, Family, StructureClass, REPEAT_TOL};
use crate::urn::dot;

/// Above this `n`, `pi_n` sums `ln_1p` terms instead of multiplying.
pub const PI_N_DIRECT_LIMIT: u64 = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScalingError {
    #[error("factor 1 + {lambda}/{j} is not positive")]
    Domain { lambda: f64, j: u64 },
    #[error("ratio undefined at n = 0")]
    ZeroN,
    #[error("{0} is a negative integer; Gamma(lambda + 1) has a pole")]
    NegativeInteger(f64),
    #[error("unsupported matrices have no predicted laws")]
    Unsupported,
}

/// `prod_{j=0}^{n-1} (1 + lambda / (j + 1))`.
pub fn pi_n(lambda: f64, n: u64) -> Result<f64, ScalingError> {
    if n > 0 && lambda <= -1.0 {
        // The first factor 1 + lambda is already non-positive.
        return Err(ScalingError::Domain { lambda, j: 1 });
    }
    if n <= PI_N_DIRECT_LIMIT {
        let mut p = 1.0;
        for j in 1..=n {
            p *= 1.0 + lambda / j as f64;
        }
        Ok(p)
    } else {
        let log: f64 = (1..=n).map(|j| libm::log1p(lambda / j as f64)).sum();
        Ok(log.exp())
    }
}

/// `Pi_n(lambda) * Gamma(lambda + 1) / n^lambda`, which tends to 1.
pub fn euler_ratio(lambda: f64, n: u64) -> Result<f64, ScalingError> {
    if n == 0 {
        return Err(ScalingError::ZeroN);
    }
    if lambda < 0.0 && lambda.fract() == 0.0 {
        return Err(ScalingError::NegativeInteger(lambda));
    }
    let nf = n as f64;
    Ok(pi_n(lambda, n)? * libm::tgamma(lambda + 1.0) / nf.powf(lambda))
}

/// Sequence the combination `C_n . v` is divided by.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "a")]
pub enum Normalization {
    /// `n + 1`.
    MassLinear,
    /// `n^a`.
    Power(f64),
    /// `sqrt(n)`.
    SqrtN,
    /// `sqrt(n log n)`.
    SqrtNLogN,
    /// `n^(a/2)`.
    HalfPower(f64),
    /// `sqrt(n^a log n)`.
    SqrtPowerLog(f64),
    /// `n^a log n`.
    PowerLog(f64),
    /// `Pi_n(a)`.
    PiN(f64),
}

impl Normalization {
    /// Value at trial `n`. Logarithmic forms are undefined below `n = 2`
    /// and evaluate to NaN there.
    pub fn eval(&self, n: u64) -> f64 {
        let nf = n as f64;
        let ln = if n >= 2 { nf.ln() } else { f64::NAN };
        match *self {
            Normalization::MassLinear => nf + 1.0,
            Normalization::Power(a) => nf.powf(a),
            Normalization::SqrtN => nf.sqrt(),
            Normalization::SqrtNLogN => (nf * ln).sqrt(),
            Normalization::HalfPower(a) => nf.powf(a / 2.0),
            Normalization::SqrtPowerLog(a) => (nf.powf(a) * ln).sqrt(),
            Normalization::PowerLog(a) => nf.powf(a) * ln,
            Normalization::PiN(a) => pi_n(a, n).unwrap_or(f64::NAN),
        }
    }
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Normalization::MassLinear => write!(f, "n+1"),
            Normalization::Power(a) => write!(f, "n^{a}"),
            Normalization::SqrtN => write!(f, "sqrt(n)"),
            Normalization::SqrtNLogN => write!(f, "sqrt(n log n)"),
            Normalization::HalfPower(a) => write!(f, "n^({a}/2)"),
            Normalization::SqrtPowerLog(a) => write!(f, "sqrt(n^{a} log n)"),
            Normalization::PowerLog(a) => write!(f, "n^{a} log n"),
            Normalization::PiN(a) => write!(f, "Pi_n({a})"),
        }
    }
}

/// Named almost-sure limit variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LimitVariable {
    /// Limit of the non-dominant mass over `n^s`.
    U,
    /// Limit of a non-principal eigen-track.
    V,
    /// Dirichlet marginal of the identity urn.
    Dirichlet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum LimitKind {
    /// The normalized track equals `value` at every `n`.
    DeterministicConstant { value: f64 },
    /// Almost-sure, non-degenerate random limit.
    AsRandomVariable {
        variable: LimitVariable,
        positive: bool,
        /// Exact mean and variance when known (identity urn).
        mean: Option<f64>,
        variance: Option<f64>,
    },
    /// `N(0, variance)` in distribution.
    Normal { variance: f64 },
    /// `N(0, coefficient * U)` in distribution.
    NormalMixture { coefficient: f64 },
    /// The raw track never moves from `value`.
    ExactlyConstantTrack { value: f64 },
}

impl LimitKind {
    pub fn name(&self) -> &'static str {
        match self {
            LimitKind::DeterministicConstant { .. } => "DeterministicConstant",
            LimitKind::AsRandomVariable { .. } => "ASRandomVariable",
            LimitKind::Normal { .. } => "Normal",
            LimitKind::NormalMixture { .. } => "NormalMixture",
            LimitKind::ExactlyConstantTrack { .. } => "ExactlyConstantTrack",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawPrediction {
    pub label: String,
    pub vector: Vec<f64>,
    pub normalization: Normalization,
    pub limit: LimitKind,
    /// Depends on the stationary law of a periodic block.
    pub unverified: bool,
}

impl LawPrediction {
    fn new(label: &str, vector: &[f64], normalization: Normalization, limit: LimitKind) -> Self {
        Self { label: label.to_string(), vector: vector.to_vec(), normalization, limit, unverified: false }
    }
}

/// Regime of an eigen-track with eigenvalue `a` whose increments have
/// stationary second moment `moment`: below 1/2 Gaussian at `sqrt(n)`, at
/// 1/2 Gaussian at `sqrt(n log n)`, above 1/2 an a.s. limit at `n^a`, and
/// frozen when `a = 0`.
fn eigen_regime(label: &str, v: &[f64], a: f64, moment: f64, initial: &[f64]) -> LawPrediction {
    if a.abs() < REPEAT_TOL {
        return LawPrediction::new(
            label,
            v,
            Normalization::Power(0.0),
            LimitKind::ExactlyConstantTrack { value: dot(initial, v) },
        );
    }
    if a < 0.5 - REPEAT_TOL {
        LawPrediction::new(
            label,
            v,
            Normalization::SqrtN,
            LimitKind::Normal { variance: a * a / (1.0 - 2.0 * a) * moment },
        )
    } else if a <= 0.5 + REPEAT_TOL {
        LawPrediction::new(label, v, Normalization::SqrtNLogN, LimitKind::Normal { variance: a * a * moment })
    } else {
        LawPrediction::new(
            label,
            v,
            Normalization::Power(a),
            LimitKind::AsRandomVariable { variable: LimitVariable::V, positive: false, mean: None, variance: None },
        )
    }
}

/// Track `S_n xi` of the non-dominant block: mixture of normals scaled by
/// `U` below 1/2, a.s. limit above.
fn mixture_regime(label: &str, v: &[f64], s: f64, lambda: f64, moment: f64, initial: &[f64]) -> LawPrediction {
    if lambda.abs() < REPEAT_TOL {
        return LawPrediction::new(
            label,
            v,
            Normalization::Power(0.0),
            LimitKind::ExactlyConstantTrack { value: dot(initial, v) },
        );
    }
    let sl2 = s * s * lambda * lambda;
    if lambda < 0.5 - REPEAT_TOL {
        LawPrediction::new(
            label,
            v,
            Normalization::HalfPower(s),
            LimitKind::NormalMixture { coefficient: sl2 / (s * (1.0 - 2.0 * lambda)) * moment },
        )
    } else if lambda <= 0.5 + REPEAT_TOL {
        LawPrediction::new(
            label,
            v,
            Normalization::SqrtPowerLog(s),
            LimitKind::NormalMixture { coefficient: sl2 * moment },
        )
    } else {
        LawPrediction::new(
            label,
            v,
            Normalization::Power(s * lambda),
            LimitKind::AsRandomVariable { variable: LimitVariable::V, positive: false, mean: None, variance: None },
        )
    }
}

fn mass(v: &[f64]) -> LawPrediction {
    LawPrediction::new("one", v, Normalization::MassLinear, LimitKind::DeterministicConstant { value: 1.0 })
}

fn positive_limit(label: &str, v: &[f64], s: f64, variable: LimitVariable) -> LawPrediction {
    LawPrediction::new(
        label,
        v,
        Normalization::Power(s),
        LimitKind::AsRandomVariable { variable, positive: true, mean: None, variance: None },
    )
}

/// Lower half of a canonical four-vector or lower two coordinates of a
/// canonical three-vector, read back from original coordinates.
fn canonical_tail(class: &StructureClass, v: &[f64], from: usize) -> Vec<f64> {
    class.permutation[from..].iter().map(|&orig| v[orig]).collect()
}

/// Complete regime table for `class`, one prediction per combination vector.
pub fn predict(class: &StructureClass, initial: &[f64]) -> Result<Vec<LawPrediction>, ScalingError> {
    let vec_of = |label: &str| class.vector(label).map(|v| v.to_vec()).ok_or(ScalingError::Unsupported);
    let mut out = Vec::with_capacity(class.k);
    match class.family {
        Family::Unsupported => return Err(ScalingError::Unsupported),
        Family::Identity => {
            out.push(mass(&vec_of("one")?));
            for i in 0..class.k - 1 {
                let label = format!("e{i}");
                let v = vec_of(&label)?;
                let c = dot(initial, &v);
                let limit = if c == 0.0 || c == 1.0 {
                    LimitKind::DeterministicConstant { value: c }
                } else {
                    // Beta(c, 1 - c) marginal of Dirichlet(C_0), total parameter 1.
                    LimitKind::AsRandomVariable {
                        variable: LimitVariable::Dirichlet,
                        positive: true,
                        mean: Some(c),
                        variance: Some(c * (1.0 - c) / 2.0),
                    }
                };
                out.push(LawPrediction::new(&label, &v, Normalization::MassLinear, limit));
            }
        }
        Family::TwoIrreducible => {
            let lambda = class.lambda.unwrap();
            let xi = vec_of("xi")?;
            let moment = stationary_second_moment(class.pi_r.as_ref().unwrap(), &xi);
            out.push(mass(&vec_of("one")?));
            out.push(eigen_regime("xi", &xi, lambda, moment, initial));
        }
        Family::TwoTriangular => {
            out.push(mass(&vec_of("one")?));
            out.push(positive_limit("xi", &vec_of("xi")?, class.s.unwrap(), LimitVariable::V));
        }
        Family::ThreeOneDominant => {
            let (s, lambda) = (class.s.unwrap(), class.lambda.unwrap());
            let moment = stationary_second_moment(class.pi_q.as_ref().unwrap(), class.xi.as_ref().unwrap());
            out.push(mass(&vec_of("one")?));
            out.push(positive_limit("u", &vec_of("u")?, s, LimitVariable::U));
            out.push(mixture_regime("xi", &vec_of("xi")?, s, lambda, moment, initial));
        }
        Family::ThreeTwoDominantDiag => {
            let (s, lambda) = (class.s.unwrap(), class.lambda.unwrap());
            let v2 = vec_of("v2")?;
            let moment = stationary_second_moment(class.pi_p.as_ref().unwrap(), &canonical_tail(class, &v2, 1));
            out.push(mass(&vec_of("one")?));
            out.push(positive_limit("t1", &vec_of("t1")?, s, LimitVariable::V));
            let mut p = eigen_regime("v2", &v2, lambda, moment, initial);
            p.unverified = class.periodic_block;
            out.push(p);
        }
        Family::ThreeTwoDominantJordan => {
            let s = class.s.unwrap();
            let t2 = vec_of("t2")?;
            let moment = stationary_second_moment(class.pi_p.as_ref().unwrap(), &canonical_tail(class, &t2, 1));
            out.push(mass(&vec_of("one")?));
            out.push(positive_limit("t1", &vec_of("t1")?, s, LimitVariable::V));
            let mut p = if s < 0.5 {
                LawPrediction::new(
                    "t2",
                    &t2,
                    Normalization::SqrtN,
                    LimitKind::Normal { variance: s * s / (1.0 - 2.0 * s) * moment },
                )
            } else {
                LawPrediction::new(
                    "t2",
                    &t2,
                    Normalization::PowerLog(s),
                    LimitKind::AsRandomVariable {
                        variable: LimitVariable::V,
                        positive: false,
                        mean: None,
                        variance: None,
                    },
                )
            };
            p.unverified = class.periodic_block;
            out.push(p);
        }
        Family::FourBlockDiag | Family::FourBlockJordan => {
            let (s, lambda, beta) = (class.s.unwrap(), class.lambda.unwrap(), class.beta.unwrap());
            let q_moment = stationary_second_moment(class.pi_q.as_ref().unwrap(), class.xi.as_ref().unwrap());
            let pi_p = class.pi_p.as_ref().unwrap();
            out.push(mass(&vec_of("one")?));
            if class.family == Family::FourBlockDiag {
                out.push(positive_limit("v1", &vec_of("v1")?, s, LimitVariable::U));
                out.push(mixture_regime("v2", &vec_of("v2")?, s, lambda, q_moment, initial));
                let v3 = vec_of("v3")?;
                let moment = stationary_second_moment(pi_p, &canonical_tail(class, &v3, 2));
                let mut p = eigen_regime("v3", &v3, beta, moment, initial);
                p.unverified = class.periodic_block;
                out.push(p);
            } else {
                // t1 and t2 are the eigenvectors for s and s*lambda, in the
                // order fixed by which one beta repeats.
                let beta_is_s = (beta - s).abs() < REPEAT_TOL;
                let t1 = vec_of("t1")?;
                let t2 = vec_of("t2")?;
                if beta_is_s {
                    out.push(mixture_regime("t1", &t1, s, lambda, q_moment, initial));
                    out.push(positive_limit("t2", &t2, s, LimitVariable::U));
                } else {
                    out.push(positive_limit("t1", &t1, s, LimitVariable::U));
                    out.push(mixture_regime("t2", &t2, s, lambda, q_moment, initial));
                }

                let t3 = vec_of("t3")?;
                let p = if beta.abs() < REPEAT_TOL {
                    LawPrediction::new(
                        "t3",
                        &t3,
                        Normalization::HalfPower(s),
                        LimitKind::NormalMixture { coefficient: q_moment / s },
                    )
                } else if beta < 0.5 - REPEAT_TOL {
                    let moment = stationary_second_moment(pi_p, &canonical_tail(class, &t3, 2));
                    let mut p = LawPrediction::new(
                        "t3",
                        &t3,
                        Normalization::SqrtN,
                        LimitKind::Normal { variance: beta * beta / (1.0 - 2.0 * beta) * moment },
                    );
                    p.unverified = class.periodic_block;
                    p
                } else {
                    let variable = if beta_is_s { LimitVariable::U } else { LimitVariable::V };
                    LawPrediction::new(
                        "t3",
                        &t3,
                        Normalization::PowerLog(beta),
                        LimitKind::AsRandomVariable { variable, positive: beta_is_s, mean: None, variance: None },
                    )
                };
                out.push(p);
            }
        }
    }
    Ok(out)
}
