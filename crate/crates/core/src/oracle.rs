//! Exact ground truth for small horizons.
//!
//! Every draw sequence is enumerated with its exact path probability. Nothing
//! here calls the simulator; the one-step update is re-derived from the
//! replacement rows so the two can be compared against each other.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scaling::{pi_n, ScalingError};
use crate::spectral::{Family, StructureClass, RESIDUAL_TOL};
use crate::urn::{dot, ReplacementSpec};

/// Largest horizon `exact_distribution` accepts.
pub const MAX_STEPS: u64 = 12;
/// Largest horizon for the conditional moment checks.
pub const MAX_CHECK_STEPS: u64 = 10;
/// Compositions equal after rounding to this grid are merged.
const MERGE_GRID: f64 = 1e12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("horizon {n} exceeds the enumeration budget {max}")]
    TooManySteps { n: u64, max: u64 },
    #[error("{0} colors exceeds the enumeration budget of 4")]
    TooManyColors(usize),
    #[error("vector is not an eigenvector for {value}: residual {residual:e}")]
    NotEigenvector { value: f64, residual: f64 },
    #[error("check does not apply to {0:?}")]
    WrongFamily(Family),
    #[error("vector length {len} does not match {k} colors")]
    Length { len: usize, k: usize },
    #[error(transparent)]
    Scaling(#[from] ScalingError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeAtom {
    pub composition: Vec<f64>,
    pub prob: f64,
}

fn merge_key(c: &[f64]) -> Vec<i64> {
    c.iter().map(|x| (x * MERGE_GRID).round() as i64).collect()
}

/// Children of `composition`: `(color, probability, child)` for every color
/// with positive mass.
fn children(spec: &ReplacementSpec, composition: &[f64]) -> Vec<(usize, f64, Vec<f64>)> {
    let total: f64 = composition.iter().sum();
    (0..spec.k())
        .filter(|&i| composition[i] > 0.0)
        .map(|i| {
            let child = composition.iter().zip(spec.row(i)).map(|(c, r)| c + r).collect();
            (i, composition[i] / total, child)
        })
        .collect()
}

fn check_budget(spec: &ReplacementSpec, n: u64, max: u64) -> Result<(), OracleError> {
    if spec.k() > 4 {
        return Err(OracleError::TooManyColors(spec.k()));
    }
    if n > max {
        return Err(OracleError::TooManySteps { n, max });
    }
    Ok(())
}

/// Merged distribution at every level `0..=n`.
fn levels(spec: &ReplacementSpec, n: u64) -> Vec<Vec<OutcomeAtom>> {
    let mut out = vec![vec![OutcomeAtom { composition: spec.initial().to_vec(), prob: 1.0 }]];
    for _ in 0..n {
        let mut next: BTreeMap<Vec<i64>, OutcomeAtom> = BTreeMap::new();
        for atom in out.last().unwrap() {
            for (_, p, child) in children(spec, &atom.composition) {
                next.entry(merge_key(&child))
                    .and_modify(|a| a.prob += atom.prob * p)
                    .or_insert(OutcomeAtom { composition: child, prob: atom.prob * p });
            }
        }
        out.push(next.into_values().collect());
    }
    out
}

/// Exact law of the composition after `n` trials.
pub fn exact_distribution(spec: &ReplacementSpec, n: u64) -> Result<Vec<OutcomeAtom>, OracleError> {
    check_budget(spec, n, MAX_STEPS)?;
    Ok(levels(spec, n).pop().unwrap())
}

fn eigen_residual(spec: &ReplacementSpec, v: &[f64], value: f64) -> Result<(), OracleError> {
    if v.len() != spec.k() {
        return Err(OracleError::Length { len: v.len(), k: spec.k() });
    }
    let residual = spec.apply(v).iter().zip(v).fold(0.0f64, |m, (rv, x)| m.max((rv - value * x).abs()));
    if residual >= RESIDUAL_TOL {
        return Err(OracleError::NotEigenvector { value, residual });
    }
    Ok(())
}

/// `E[C_n . v]` computed from the exact distribution.
pub fn exact_mean_linear(spec: &ReplacementSpec, v: &[f64], value: f64, n: u64) -> Result<f64, OracleError> {
    eigen_residual(spec, v, value)?;
    let atoms = exact_distribution(spec, n)?;
    Ok(atoms.iter().map(|a| a.prob * dot(&a.composition, v)).sum())
}

/// Largest `|E[C_m . v] - Pi_m(value) C_0 . v|` over `m <= n`.
pub fn martingale_mean_deviation(spec: &ReplacementSpec, v: &[f64], value: f64, n: u64) -> Result<f64, OracleError> {
    eigen_residual(spec, v, value)?;
    check_budget(spec, n, MAX_STEPS)?;
    let start = dot(spec.initial(), v);
    let mut worst = 0.0f64;
    for (m, level) in levels(spec, n).iter().enumerate() {
        let mean: f64 = level.iter().map(|a| a.prob * dot(&a.composition, v)).sum();
        worst = worst.max((mean - pi_n(value, m as u64)? * start).abs());
    }
    Ok(worst)
}

/// One-step second-moment identity for every pure eigen-martingale
/// `T_m = C_m . v / Pi_m(a)` of the class:
///
/// `E[T_{m+1}^2 | F_m] = T_m^2 + (a / Pi_{m+1}(a))^2 [C_m . v^2 / (m+1) - (C_m . v / (m+1))^2]`.
///
/// The left side is summed over the exact children of every reachable
/// composition; returns the largest discrepancy over `m < n`.
pub fn exact_conditional_variance_check(
    spec: &ReplacementSpec,
    class: &StructureClass,
    n: u64,
) -> Result<f64, OracleError> {
    if class.family == Family::Unsupported || class.family.is_jordan() {
        return Err(OracleError::WrongFamily(class.family));
    }
    check_budget(spec, n, MAX_CHECK_STEPS)?;
    let tracks: Vec<_> = class.eigenpairs.iter().filter(|e| e.label != "one").collect();
    if tracks.is_empty() {
        return Err(OracleError::WrongFamily(class.family));
    }
    let all = levels(spec, n);
    let mut worst = 0.0f64;
    for e in tracks {
        eigen_residual(spec, &e.vector, e.value)?;
        let a = e.value;
        let sq: Vec<f64> = e.vector.iter().map(|x| x * x).collect();
        for (m, level) in all.iter().enumerate().take(n as usize) {
            let m = m as u64;
            let (pi_m, pi_next) = (pi_n(a, m)?, pi_n(a, m + 1)?);
            let denom = (m + 1) as f64;
            for atom in level {
                let cv = dot(&atom.composition, &e.vector);
                let lhs: f64 = children(spec, &atom.composition)
                    .iter()
                    .map(|(_, p, child)| p * (dot(child, &e.vector) / pi_next).powi(2))
                    .sum();
                let t = cv / pi_m;
                let rhs = t * t + (a / pi_next).powi(2) * (dot(&atom.composition, &sq) / denom - (cv / denom).powi(2));
                worst = worst.max((lhs - rhs).abs());
            }
        }
    }
    Ok(worst)
}

/// Vectors `(g, h, a)` with `R g = h + a g` defining the compensated
/// martingale of a Jordan family: `(t2, t1, s)` for three colors and
/// `(t3, t2, beta)` for four.
pub fn jordan_chain(class: &StructureClass) -> Result<(Vec<f64>, Vec<f64>, f64), OracleError> {
    let pick = |l: &str| class.vector(l).map(|v| v.to_vec()).ok_or(OracleError::WrongFamily(class.family));
    match class.family {
        Family::ThreeTwoDominantJordan => Ok((pick("t2")?, pick("t1")?, class.s.unwrap())),
        Family::FourBlockJordan => Ok((pick("t3")?, pick("t2")?, class.beta.unwrap())),
        other => Err(OracleError::WrongFamily(other)),
    }
}

/// Compensated martingale for a Jordan chain `R g = h + a g`:
///
/// `X_m = C_m . g / Pi_m(a) - sum_{j=0}^{m-1} C_j . h / ((j+1) Pi_{j+1}(a))`.
///
/// Walks the full (unmerged) draw tree carrying `X` along each path and
/// returns the largest `|E[X_{m+1} | F_m] - X_m|` over all nodes at depth
/// `m < n`. `lead_override` replaces `g`, for negative controls.
pub fn compensated_martingale_check(
    spec: &ReplacementSpec,
    class: &StructureClass,
    n: u64,
    lead_override: Option<&[f64]>,
) -> Result<f64, OracleError> {
    let (g, h, a) = jordan_chain(class)?;
    check_budget(spec, n, MAX_CHECK_STEPS)?;
    let g = lead_override.map(|v| v.to_vec()).unwrap_or(g);
    if g.len() != spec.k() {
        return Err(OracleError::Length { len: g.len(), k: spec.k() });
    }
    let pis: Vec<f64> = (0..=n + 1).map(|m| pi_n(a, m)).collect::<Result<_, _>>()?;

    struct Walk<'a> {
        spec: &'a ReplacementSpec,
        g: &'a [f64],
        h: &'a [f64],
        pis: &'a [f64],
        n: u64,
        worst: f64,
    }

    impl Walk<'_> {
        /// `compensator` is the sum over `j < m` along the path so far.
        fn visit(&mut self, comp: &[f64], m: u64, compensator: f64) {
            if m >= self.n {
                return;
            }
            let (pi_m, pi_next) = (self.pis[m as usize], self.pis[m as usize + 1]);
            let x_m = dot(comp, self.g) / pi_m - compensator;
            let next_comp = compensator + dot(comp, self.h) / ((m + 1) as f64 * pi_next);
            let mut expected = 0.0;
            for (_, p, child) in children(self.spec, comp) {
                expected += p * (dot(&child, self.g) / pi_next - next_comp);
                self.visit(&child, m + 1, next_comp);
            }
            self.worst = self.worst.max((expected - x_m).abs());
        }
    }

    let mut walk = Walk { spec, g: &g, h: &h, pis: &pis, n, worst: 0.0 };
    walk.visit(spec.initial(), 0, 0.0);
    let worst = walk.worst;
    Ok(worst)
}

/// For the one-dominant family: on every edge that draws a non-dominant
/// color, `S_{m+1} xi - S_m xi = lambda s (chi xi)`; on dominant draws the
/// track does not move. Returns the largest violation over depth `< n`.
pub fn evolution_identity_check(spec: &ReplacementSpec, class: &StructureClass, n: u64) -> Result<f64, OracleError> {
    if class.family != Family::ThreeOneDominant {
        return Err(OracleError::WrongFamily(class.family));
    }
    check_budget(spec, n, MAX_STEPS)?;
    let xi = class.vector("xi").unwrap();
    let factor = class.s.unwrap() * class.lambda.unwrap();
    let mut worst = 0.0f64;
    for level in levels(spec, n).iter().take(n as usize) {
        for atom in level {
            let before = dot(&atom.composition, xi);
            for (color, _, child) in children(spec, &atom.composition) {
                let jump = dot(&child, xi) - before;
                let expected = if class.non_dominant.contains(&color) { factor * xi[color] } else { 0.0 };
                worst = worst.max((jump - expected).abs());
            }
        }
    }
    Ok(worst)
}

/// Total variation between an exact law and the empirical law of `samples`.
/// Samples are matched to atoms within `1e-9`; unmatched samples count as
/// mass outside the support.
pub fn empirical_total_variation(exact: &[OutcomeAtom], samples: &[Vec<f64>]) -> f64 {
    let key = |c: &[f64]| -> Vec<i64> { c.iter().map(|x| (x * 1e9).round() as i64).collect() };
    let index: BTreeMap<Vec<i64>, usize> = exact.iter().enumerate().map(|(i, a)| (key(&a.composition), i)).collect();
    let mut counts = vec![0usize; exact.len()];
    let mut unmatched = 0usize;
    for s in samples {
        let hit = index
            .get(&key(s))
            .copied()
            .or_else(|| exact.iter().position(|a| a.composition.iter().zip(s).all(|(x, y)| (x - y).abs() <= 1e-9)));
        match hit {
            Some(i) => counts[i] += 1,
            None => unmatched += 1,
        }
    }
    let m = samples.len() as f64;
    let inside: f64 = exact.iter().zip(&counts).map(|(a, &c)| (a.prob - c as f64 / m).abs()).sum();
    0.5 * (inside + unmatched as f64 / m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::classify;

    fn spec(rows: &[&[f64]], c0: &[f64]) -> ReplacementSpec {
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        ReplacementSpec::new(&rows, c0).unwrap()
    }

    fn jordan_reference() -> ReplacementSpec {
        spec(&[&[0.5, 0.45, 0.05], &[0.0, 0.75, 0.25], &[0.0, 0.25, 0.75]], &[0.4, 0.3, 0.3])
    }

    #[test]
    fn single_step_distribution() {
        let r = spec(&[&[0.5, 0.5], &[0.0, 1.0]], &[0.5, 0.5]);
        let atoms = exact_distribution(&r, 1).unwrap();
        assert_eq!(atoms.len(), 2);
        for a in &atoms {
            assert_eq!(a.prob, 0.5);
            assert!(a.composition == vec![1.0, 1.0] || a.composition == vec![0.5, 1.5]);
        }
    }

    #[test]
    fn absorbing_and_empty_cases() {
        let id = spec(&[&[1.0, 0.0], &[0.0, 1.0]], &[1.0, 0.0]);
        assert_eq!(exact_distribution(&id, 2).unwrap(), vec![OutcomeAtom { composition: vec![3.0, 0.0], prob: 1.0 }]);
        let r = jordan_reference();
        assert_eq!(
            exact_distribution(&r, 0).unwrap(),
            vec![OutcomeAtom { composition: vec![0.4, 0.3, 0.3], prob: 1.0 }]
        );
        assert!(matches!(exact_distribution(&r, 13), Err(OracleError::TooManySteps { .. })));
    }

    #[test]
    fn probabilities_sum_to_one() {
        let r = spec(
            &[&[0.25, 0.25, 0.5, 0.0], &[0.25, 0.25, 0.0, 0.5], &[0.0, 0.0, 0.5, 0.5], &[0.0, 0.0, 0.5, 0.5]],
            &[0.25, 0.25, 0.25, 0.25],
        );
        for level in levels(&r, 9) {
            let total: f64 = level.iter().map(|a| a.prob).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn martingale_means_for_triangular_white() {
        let r = spec(&[&[0.5, 0.5], &[0.0, 1.0]], &[0.5, 0.5]);
        assert_eq!(exact_mean_linear(&r, &[1.0, 0.0], 0.5, 2).unwrap(), 0.9375);
        assert_eq!(exact_mean_linear(&r, &[1.0, 0.0], 0.5, 1).unwrap(), 0.75);
        let mass = exact_mean_linear(&r, &[1.0, 1.0], 1.0, 7).unwrap();
        assert!((mass - 8.0).abs() < 1e-12);
        assert!(matches!(exact_mean_linear(&r, &[0.0, 1.0], 0.5, 2), Err(OracleError::NotEigenvector { .. })));
    }

    #[test]
    fn conditional_variance_identity() {
        let r = spec(&[&[0.45, 0.05, 0.5], &[0.1, 0.4, 0.5], &[0.0, 0.0, 1.0]], &[0.3, 0.2, 0.5]);
        let class = classify(&r).unwrap();
        assert!(exact_conditional_variance_check(&r, &class, 8).unwrap() < 1e-10);

        let r = spec(&[&[0.75, 0.25], &[0.375, 0.625]], &[0.5, 0.5]);
        let class = classify(&r).unwrap();
        assert!(exact_conditional_variance_check(&r, &class, 8).unwrap() < 1e-10);

        let r = spec(&[&[0.5, 0.5], &[0.5, 0.5]], &[0.75, 0.25]);
        let class = classify(&r).unwrap();
        assert!(exact_conditional_variance_check(&r, &class, 8).unwrap() < 1e-12);

        let r = jordan_reference();
        let class = classify(&r).unwrap();
        assert!(matches!(exact_conditional_variance_check(&r, &class, 4), Err(OracleError::WrongFamily(_))));
    }

    #[test]
    fn compensated_martingale_reference() {
        let r = jordan_reference();
        let class = classify(&r).unwrap();
        assert!(compensated_martingale_check(&r, &class, 6, None).unwrap() < 1e-10);
        assert_eq!(compensated_martingale_check(&r, &class, 0, None).unwrap(), 0.0);

        let mut bad = class.vector("t2").unwrap().to_vec();
        bad[1] += 1e-3;
        assert!(compensated_martingale_check(&r, &class, 6, Some(&bad)).unwrap() > 1e-5);
    }

    #[test]
    fn compensated_martingale_four_color() {
        let r = spec(
            &[&[0.25, 0.25, 0.5, 0.0], &[0.25, 0.25, 0.0, 0.5], &[0.0, 0.0, 0.5, 0.5], &[0.0, 0.0, 0.5, 0.5]],
            &[0.25, 0.25, 0.25, 0.25],
        );
        let class = classify(&r).unwrap();
        assert!(compensated_martingale_check(&r, &class, 6, None).unwrap() < 1e-10);
    }

    #[test]
    fn evolution_identity_holds_on_every_edge() {
        let r = spec(&[&[0.45, 0.05, 0.5], &[0.1, 0.4, 0.5], &[0.0, 0.0, 1.0]], &[0.3, 0.2, 0.5]);
        let class = classify(&r).unwrap();
        assert!(evolution_identity_check(&r, &class, 8).unwrap() < 1e-12);
    }

    #[test]
    fn total_variation_of_exact_samples_is_small() {
        let exact = vec![
            OutcomeAtom { composition: vec![1.0, 1.0], prob: 0.5 },
            OutcomeAtom { composition: vec![0.5, 1.5], prob: 0.5 },
        ];
        let samples = vec![vec![1.0, 1.0], vec![0.5, 1.5], vec![1.0, 1.0], vec![0.5, 1.5]];
        assert_eq!(empirical_total_variation(&exact, &samples), 0.0);
        let skewed = vec![vec![1.0, 1.0]; 4];
        assert_eq!(empirical_total_variation(&exact, &skewed), 0.5);
        let outside = vec![vec![9.0, 9.0]; 4];
        assert_eq!(empirical_total_variation(&exact, &outside), 1.0);
    }
}
