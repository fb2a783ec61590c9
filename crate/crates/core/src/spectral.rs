//! Structural classification of small replacement matrices and their
//! spectral data.
//!
//! Every supported family is block upper triangular after relabeling the
//! colors, with 2×2 irreducible diagonal blocks whose spectra are available
//! in closed form: a 2×2 stochastic matrix has eigenvalues `1` and
//! `trace - 1`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::urn::{dot, ReplacementSpec};

/// Two eigenvalues closer than this are treated as equal.
pub const REPEAT_TOL: f64 = 1e-9;
/// Entries with magnitude at or below this are structural zeros.
pub const ZERO_TOL: f64 = 1e-12;
/// Residual bound for stored eigenpairs and Jordan bases.
pub const RESIDUAL_TOL: f64 = 1e-10;

pub type Mat2 = [[f64; 2]; 2];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("cannot normalize the zero vector")]
    ZeroVector,
    #[error("matrix is the identity; there is no non-principal eigenpair")]
    IdentityMatrix,
    #[error("matrix is reducible (an off-diagonal entry is zero)")]
    Reducible,
    #[error("{0:?} has no Jordan basis")]
    NotJordan(Family),
    #[error("generalized eigenvector equation is inconsistent; misclassified matrix")]
    InconsistentJordan,
    #[error("Jordan basis residual {0:e} exceeds tolerance")]
    JordanResidual(f64),
    #[error("initial composition puts no mass on the non-dominant colors {0:?}")]
    DegenerateStart(Vec<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    Identity,
    TwoIrreducible,
    TwoTriangular,
    ThreeOneDominant,
    ThreeTwoDominantDiag,
    ThreeTwoDominantJordan,
    FourBlockDiag,
    FourBlockJordan,
    Unsupported,
}

impl Family {
    pub fn is_jordan(self) -> bool {
        matches!(self, Family::ThreeTwoDominantJordan | Family::FourBlockJordan)
    }
}

/// Scales `v` so that `max |v_i| = 1` and its first nonzero coordinate is
/// positive.
pub fn normalize_eigvec(v: &[f64]) -> Result<Vec<f64>, SpectralError> {
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if !(max > 0.0) {
        return Err(SpectralError::ZeroVector);
    }
    let first = v.iter().copied().find(|x| x.abs() > ZERO_TOL * max).unwrap_or(max);
    let scale = if first < 0.0 { -max } else { max };
    Ok(v.iter().map(|x| x / scale).collect())
}

/// Non-principal eigenvalue and normalized right eigenvector of a 2×2
/// stochastic matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenpair2 {
    pub lambda: f64,
    pub xi: [f64; 2],
}

pub fn eigenpair_2x2(m: &Mat2) -> Result<Eigenpair2, SpectralError> {
    let (a, b) = (m[0][1], m[1][0]);
    if a.abs() <= ZERO_TOL && b.abs() <= ZERO_TOL {
        return Err(SpectralError::IdentityMatrix);
    }
    let lambda = m[0][0] + m[1][1] - 1.0;
    // First row of M - lambda I is (b, a).
    let xi = normalize_eigvec(&[a, -b])?;
    Ok(Eigenpair2 { lambda, xi: [xi[0], xi[1]] })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stationary2 {
    pub pi: [f64; 2],
    pub aperiodic: bool,
}

/// Stationary distribution of an irreducible 2×2 stochastic matrix
/// `[[1 - a, a], [b, 1 - b]]`, which is `(b, a) / (a + b)`.
pub fn stationary_2x2(m: &Mat2) -> Result<Stationary2, SpectralError> {
    let (a, b) = (m[0][1], m[1][0]);
    if a <= ZERO_TOL && b <= ZERO_TOL {
        return Err(SpectralError::IdentityMatrix);
    }
    if a <= ZERO_TOL || b <= ZERO_TOL {
        return Err(SpectralError::Reducible);
    }
    let lambda = m[0][0] + m[1][1] - 1.0;
    Ok(Stationary2 { pi: [b / (a + b), a / (a + b)], aperiodic: (lambda + 1.0).abs() > REPEAT_TOL })
}

/// Outcome of solving a possibly singular 2×2 system.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Solve2 {
    Unique([f64; 2]),
    /// Rank one and consistent; minimum-norm particular solution.
    Particular([f64; 2]),
    Inconsistent,
}

fn solve2(a: &Mat2, b: [f64; 2]) -> Solve2 {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let scale = a.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    if det.abs() > REPEAT_TOL * scale * scale {
        return Solve2::Unique([(b[0] * a[1][1] - a[0][1] * b[1]) / det, (a[0][0] * b[1] - b[0] * a[1][0]) / det]);
    }
    let n0 = a[0][0].hypot(a[0][1]);
    let n1 = a[1][0].hypot(a[1][1]);
    if n0.max(n1) <= ZERO_TOL {
        return if b[0].abs().max(b[1].abs()) <= REPEAT_TOL {
            Solve2::Particular([0.0, 0.0])
        } else {
            Solve2::Inconsistent
        };
    }
    let (r, norm) = if n0 >= n1 { (0, n0) } else { (1, n1) };
    let row = a[r];
    let u = [b[r] * row[0] / (norm * norm), b[r] * row[1] / (norm * norm)];
    let resid = (a[0][0] * u[0] + a[0][1] * u[1] - b[0]).abs().max((a[1][0] * u[0] + a[1][1] * u[1] - b[1]).abs());
    if resid <= REPEAT_TOL * scale.max(b[0].abs().max(b[1].abs())) {
        Solve2::Particular(u)
    } else {
        Solve2::Inconsistent
    }
}

/// Left null vector of a rank-one 2×2 matrix.
fn left_null(a: &Mat2) -> [f64; 2] {
    // w A = 0: w is orthogonal to both columns.
    let c0 = [a[0][0], a[1][0]];
    let c1 = [a[0][1], a[1][1]];
    let c = if c0[0].hypot(c0[1]) >= c1[0].hypot(c1[1]) { c0 } else { c1 };
    [c[1], -c[0]]
}

/// A combination vector with the name used in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedVector {
    pub label: String,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eigenpair {
    pub label: String,
    pub value: f64,
    pub vector: Vec<f64>,
}

/// Columns `t_1..t_K` with `R T = T J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JordanBasis {
    pub columns: Vec<Vec<f64>>,
    pub j: Vec<Vec<f64>>,
}

impl JordanBasis {
    /// `max |(R T - T J)_{ij}|`.
    pub fn residual(&self, spec: &ReplacementSpec) -> f64 {
        let k = spec.k();
        let mut worst = 0.0f64;
        for (col, t) in self.columns.iter().enumerate() {
            let rt = spec.apply(t);
            for (i, rti) in rt.iter().enumerate() {
                let tj: f64 = (0..k).map(|m| self.columns[m][i] * self.j[m][col]).sum();
                worst = worst.max((rti - tj).abs());
            }
        }
        worst
    }
}

/// Family membership plus all spectral data needed for predictions.
///
/// Block vectors (`xi`, `nu`, `p`, `pi_p`, `pi_q`) are in the canonical
/// color order; full-length vectors are in the caller's color order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureClass {
    pub family: Family,
    pub k: usize,
    /// `permutation[i]` is the original index of canonical color `i`.
    pub permutation: Vec<usize>,
    pub s: Option<f64>,
    pub lambda: Option<f64>,
    pub beta: Option<f64>,
    pub pi_r: Option<Vec<f64>>,
    pub pi_p: Option<Vec<f64>>,
    pub pi_q: Option<Vec<f64>>,
    pub xi: Option<Vec<f64>>,
    pub nu: Option<Vec<f64>>,
    pub p: Option<Vec<f64>>,
    pub eigenpairs: Vec<Eigenpair>,
    pub jordan: Option<JordanBasis>,
    pub combination_vectors: Vec<NamedVector>,
    /// Mixing vector whose track divided by `n^s` estimates `U`.
    pub mixing_vector: Option<Vec<f64>>,
    /// Original indices of the non-dominant colors.
    pub non_dominant: Vec<usize>,
    /// A diagonal block is periodic; predictions that rely on its
    /// stationary law are flagged unverified.
    pub periodic_block: bool,
    pub notes: Vec<String>,
}

impl StructureClass {
    fn new(family: Family, k: usize, permutation: Vec<usize>) -> Self {
        Self {
            family,
            k,
            permutation,
            s: None,
            lambda: None,
            beta: None,
            pi_r: None,
            pi_p: None,
            pi_q: None,
            xi: None,
            nu: None,
            p: None,
            eigenpairs: Vec::new(),
            jordan: None,
            combination_vectors: Vec::new(),
            mixing_vector: None,
            non_dominant: Vec::new(),
            periodic_block: false,
            notes: Vec::new(),
        }
    }

    fn unsupported(k: usize, reason: impl Into<String>) -> Self {
        let mut c = Self::new(Family::Unsupported, k, (0..k).collect());
        c.notes.push(reason.into());
        c
    }

    pub fn vector(&self, label: &str) -> Option<&[f64]> {
        self.combination_vectors.iter().find(|v| v.label == label).map(|v| v.vector.as_slice())
    }

    /// Largest `|R v - a v|` over the stored eigenpairs.
    pub fn eigen_residual(&self, spec: &ReplacementSpec) -> f64 {
        self.eigenpairs
            .iter()
            .map(|e| {
                spec.apply(&e.vector).iter().zip(&e.vector).fold(0.0f64, |m, (rv, v)| m.max((rv - e.value * v).abs()))
            })
            .fold(0.0, f64::max)
    }

    /// `|det|` of the matrix whose columns are the combination vectors.
    pub fn combination_determinant(&self) -> f64 {
        let cols: Vec<Vec<f64>> = self.combination_vectors.iter().map(|v| v.vector.clone()).collect();
        determinant(&cols).abs()
    }

    fn to_original(&self, canonical: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; canonical.len()];
        for (i, &orig) in self.permutation.iter().enumerate() {
            out[orig] = canonical[i];
        }
        out
    }

    fn push_vector(&mut self, label: &str, canonical: &[f64]) {
        let vector = self.to_original(canonical);
        self.combination_vectors.push(NamedVector { label: label.to_string(), vector });
    }

    fn push_eigenpair(&mut self, label: &str, value: f64, canonical: &[f64]) {
        let vector = self.to_original(canonical);
        self.eigenpairs.push(Eigenpair { label: label.to_string(), value, vector });
    }
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant(cols: &[Vec<f64>]) -> f64 {
    let n = cols.len();
    if n == 0 || cols.iter().any(|c| c.len() != n) {
        return 0.0;
    }
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect();
    let mut det = 1.0;
    for c in 0..n {
        let piv = (c..n).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs())).unwrap();
        if a[piv][c] == 0.0 {
            return 0.0;
        }
        if piv != c {
            a.swap(piv, c);
            det = -det;
        }
        det *= a[c][c];
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            let pivot_row = a[c].clone();
            for (x, y) in a[r][c..].iter_mut().zip(&pivot_row[c..]) {
                *x -= f * y;
            }
        }
    }
    det
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == k {
            out.push(prefix.clone());
            return;
        }
        for c in 0..k {
            if !prefix.contains(&c) {
                prefix.push(c);
                rec(prefix, k, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(k), k, &mut out);
    out
}

fn is_zero(x: f64) -> bool {
    x.abs() <= ZERO_TOL
}

fn block(m: &[Vec<f64>], r: usize, c: usize) -> Mat2 {
    [[m[r][c], m[r][c + 1]], [m[r + 1][c], m[r + 1][c + 1]]]
}

fn irreducible(b: &Mat2) -> bool {
    b[0][1] > ZERO_TOL && b[1][0] > ZERO_TOL
}

fn in_unit_interval(s: f64) -> bool {
    s > ZERO_TOL && s < 1.0 - ZERO_TOL
}

/// Result of testing one relabeling against the family patterns.
enum Attempt {
    Match(Box<StructureClass>),
    Reject(String),
    NoMatch,
}

/// Detects the family of `spec` and fills its spectral data.
///
/// All `K!` relabelings are tried in lexicographic order; the first one that
/// puts the matrix into a supported canonical form wins. Matrices outside
/// every family come back as [`Family::Unsupported`], which is not an error.
pub fn classify(spec: &ReplacementSpec) -> Result<StructureClass, SpectralError> {
    let k = spec.k();
    let is_identity = (0..k).all(|i| (0..k).all(|j| is_zero(spec.entry(i, j) - if i == j { 1.0 } else { 0.0 })));
    if is_identity {
        let mut class = StructureClass::new(Family::Identity, k, (0..k).collect());
        let one = vec![1.0; k];
        class.push_eigenpair("one", 1.0, &one);
        class.push_vector("one", &one);
        for i in 0..k - 1 {
            let mut e = vec![0.0; k];
            e[i] = 1.0;
            class.push_eigenpair(&format!("e{i}"), 1.0, &e);
            class.push_vector(&format!("e{i}"), &e);
        }
        return Ok(class);
    }
    if !(2..=4).contains(&k) {
        return Ok(StructureClass::unsupported(k, format!("{k} colors is outside the supported range 2..=4")));
    }

    let mut first_reject = None;
    for perm in permutations(k) {
        let m: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| spec.entry(perm[i], perm[j])).collect()).collect();
        let attempt = match k {
            2 => try_two(&m, &perm),
            3 => try_three(&m, &perm),
            _ => try_four(&m, &perm),
        };
        match attempt {
            Attempt::Match(class) => {
                let mass: f64 = class.non_dominant.iter().map(|&i| spec.initial()[i]).sum();
                if !class.non_dominant.is_empty() && mass <= 0.0 {
                    return Err(SpectralError::DegenerateStart(class.non_dominant.clone()));
                }
                return Ok(*class);
            }
            Attempt::Reject(reason) => {
                first_reject.get_or_insert(reason);
            }
            Attempt::NoMatch => {}
        }
    }
    Ok(StructureClass::unsupported(
        k,
        first_reject.unwrap_or_else(|| "no relabeling matches a supported block structure".to_string()),
    ))
}

fn try_two(m: &[Vec<f64>], perm: &[usize]) -> Attempt {
    let b = block(m, 0, 0);
    if irreducible(&b) {
        let eig = match eigenpair_2x2(&b) {
            Ok(e) => e,
            Err(_) => return Attempt::NoMatch,
        };
        let stat = stationary_2x2(&b).expect("irreducible block");
        if !stat.aperiodic {
            return Attempt::Reject("periodic two-color matrix (eigenvalue -1)".into());
        }
        let mut c = StructureClass::new(Family::TwoIrreducible, 2, perm.to_vec());
        c.lambda = Some(eig.lambda);
        c.xi = Some(eig.xi.to_vec());
        c.pi_r = Some(c.to_original(&stat.pi));
        c.push_eigenpair("one", 1.0, &[1.0, 1.0]);
        c.push_eigenpair("xi", eig.lambda, &eig.xi);
        c.push_vector("one", &[1.0, 1.0]);
        c.push_vector("xi", &eig.xi);
        return Attempt::Match(Box::new(c));
    }
    if is_zero(b[1][0]) && b[0][1] > ZERO_TOL {
        let s = b[0][0];
        if !in_unit_interval(s) {
            return Attempt::Reject(format!("triangular two-color matrix needs 0 < s < 1, got s = {s}"));
        }
        let mut c = StructureClass::new(Family::TwoTriangular, 2, perm.to_vec());
        c.s = Some(s);
        c.xi = Some(vec![1.0, 0.0]);
        c.push_eigenpair("one", 1.0, &[1.0, 1.0]);
        c.push_eigenpair("xi", s, &[1.0, 0.0]);
        c.push_vector("one", &[1.0, 1.0]);
        c.push_vector("xi", &[1.0, 0.0]);
        c.non_dominant = vec![perm[0]];
        return Attempt::Match(Box::new(c));
    }
    Attempt::NoMatch
}

fn try_three(m: &[Vec<f64>], perm: &[usize]) -> Attempt {
    // One dominant color: [[sQ, (1-s)1], [0 0 1]].
    if is_zero(m[2][0]) && is_zero(m[2][1]) && !is_zero(m[0][0] + m[0][1] - 1.0) {
        let s = m[0][0] + m[0][1];
        let s1 = m[1][0] + m[1][1];
        if (s - s1).abs() <= REPEAT_TOL && s > ZERO_TOL {
            let q: Mat2 = [[m[0][0] / s, m[0][1] / s], [m[1][0] / s, m[1][1] / s]];
            if irreducible(&q) {
                if !in_unit_interval(s) {
                    return Attempt::Reject(format!("one-dominant matrix needs 0 < s < 1, got {s}"));
                }
                let stat = stationary_2x2(&q).expect("irreducible");
                if !stat.aperiodic {
                    return Attempt::Reject("non-dominant block Q is periodic (eigenvalue -1)".into());
                }
                let eig = eigenpair_2x2(&q).expect("irreducible");
                let mut c = StructureClass::new(Family::ThreeOneDominant, 3, perm.to_vec());
                c.s = Some(s);
                c.lambda = Some(eig.lambda);
                c.xi = Some(eig.xi.to_vec());
                c.pi_q = Some(stat.pi.to_vec());
                let xi3 = [eig.xi[0], eig.xi[1], 0.0];
                c.push_eigenpair("one", 1.0, &[1.0; 3]);
                c.push_eigenpair("u", s, &[1.0, 1.0, 0.0]);
                c.push_eigenpair("xi", s * eig.lambda, &xi3);
                c.push_vector("one", &[1.0; 3]);
                c.push_vector("u", &[1.0, 1.0, 0.0]);
                c.push_vector("xi", &xi3);
                c.mixing_vector = Some(c.to_original(&[1.0, 1.0, 0.0]));
                c.non_dominant = vec![perm[0], perm[1]];
                return Attempt::Match(Box::new(c));
            }
        }
    }

    // Two dominant colors: [[s, (1-s)p], [0, P]].
    if is_zero(m[1][0]) && is_zero(m[2][0]) {
        let pm = block(m, 1, 1);
        if !irreducible(&pm) {
            return Attempt::NoMatch;
        }
        let s = m[0][0];
        if !in_unit_interval(s) {
            return Attempt::Reject(format!("two-dominant matrix needs 0 < s < 1, got {s}"));
        }
        let p = [m[0][1] / (1.0 - s), m[0][2] / (1.0 - s)];
        let eig = eigenpair_2x2(&pm).expect("irreducible");
        let stat = stationary_2x2(&pm).expect("irreducible");
        let lambda = eig.lambda;
        let xi = eig.xi;
        let p_xi = p[0] * xi[0] + p[1] * xi[1];

        let jordan = (lambda - s).abs() < REPEAT_TOL && p_xi.abs() >= REPEAT_TOL;
        let family = if jordan { Family::ThreeTwoDominantJordan } else { Family::ThreeTwoDominantDiag };
        let mut c = StructureClass::new(family, 3, perm.to_vec());
        c.s = Some(s);
        c.lambda = Some(lambda);
        c.xi = Some(xi.to_vec());
        c.pi_p = Some(stat.pi.to_vec());
        c.p = Some(p.to_vec());
        c.non_dominant = vec![perm[0]];
        if !stat.aperiodic {
            c.periodic_block = true;
            c.notes
                .push("dominant block P is periodic; laws involving its stationary distribution are unverified".into());
        }
        c.push_eigenpair("one", 1.0, &[1.0; 3]);
        c.push_eigenpair("t1", s, &[1.0, 0.0, 0.0]);
        c.push_vector("one", &[1.0; 3]);
        c.push_vector("t1", &[1.0, 0.0, 0.0]);

        if jordan {
            // R t2 = t1 + s t2 with t2 = (0, k xi) forces (1 - s) k p.xi = 1.
            let scale = 1.0 / ((1.0 - s) * p_xi);
            let t2 = [0.0, scale * xi[0], scale * xi[1]];
            c.push_vector("t2", &t2);
            let columns = vec![c.to_original(&[1.0, 0.0, 0.0]), c.to_original(&t2), vec![1.0; 3]];
            let j = vec![vec![s, 1.0, 0.0], vec![0.0, s, 0.0], vec![0.0, 0.0, 1.0]];
            c.jordan = Some(JordanBasis { columns, j });
        } else {
            let v2 = if (lambda - s).abs() < REPEAT_TOL {
                let gap = (p[0] - stat.pi[0]).abs().max((p[1] - stat.pi[1]).abs());
                c.notes.push(format!("repeated eigenvalue s = lambda with p.xi = 0; |p - pi_P| = {gap:.3e}"));
                [0.0, xi[0], xi[1]]
            } else {
                [(1.0 - s) * p_xi / (lambda - s), xi[0], xi[1]]
            };
            c.push_eigenpair("v2", lambda, &v2);
            c.push_vector("v2", &v2);
        }
        return Attempt::Match(Box::new(c));
    }
    Attempt::NoMatch
}

fn try_four(m: &[Vec<f64>], perm: &[usize]) -> Attempt {
    if !(is_zero(m[2][0]) && is_zero(m[2][1]) && is_zero(m[3][0]) && is_zero(m[3][1])) {
        return Attempt::NoMatch;
    }
    let pm = block(m, 2, 2);
    let sb = block(m, 0, 0);
    let s = sb[0][0] + sb[0][1];
    let s1 = sb[1][0] + sb[1][1];
    if !irreducible(&pm) || s <= ZERO_TOL || (s - s1).abs() > REPEAT_TOL {
        return Attempt::NoMatch;
    }
    let q: Mat2 = [[sb[0][0] / s, sb[0][1] / s], [sb[1][0] / s, sb[1][1] / s]];
    if !irreducible(&q) {
        return Attempt::NoMatch;
    }
    if !in_unit_interval(s) {
        return Attempt::Reject(format!("four-color block matrix needs 0 < s < 1, got {s}"));
    }
    let e = block(m, 0, 2);
    let q_stat = stationary_2x2(&q).expect("irreducible");
    if !q_stat.aperiodic {
        return Attempt::Reject("non-dominant block Q is periodic (eigenvalue -1)".into());
    }
    let p_stat = stationary_2x2(&pm).expect("irreducible");
    let q_eig = eigenpair_2x2(&q).expect("irreducible");
    let p_eig = eigenpair_2x2(&pm).expect("irreducible");
    let (lambda, xi) = (q_eig.lambda, q_eig.xi);
    let (beta, nu) = (p_eig.lambda, p_eig.xi);
    let e_nu = [e[0][0] * nu[0] + e[0][1] * nu[1], e[1][0] * nu[0] + e[1][1] * nu[1]];
    let sq_minus = |mu: f64| -> Mat2 { [[sb[0][0] - mu, sb[0][1]], [sb[1][0], sb[1][1] - mu]] };

    let v1 = [1.0, 1.0, 0.0, 0.0];
    let v2 = [xi[0], xi[1], 0.0, 0.0];
    let rep_s = (beta - s).abs() < REPEAT_TOL;
    let rep_sl = (beta - s * lambda).abs() < REPEAT_TOL;

    let build = |family: Family| {
        let mut c = StructureClass::new(family, 4, perm.to_vec());
        c.s = Some(s);
        c.lambda = Some(lambda);
        c.beta = Some(beta);
        c.xi = Some(xi.to_vec());
        c.nu = Some(nu.to_vec());
        c.pi_q = Some(q_stat.pi.to_vec());
        c.pi_p = Some(p_stat.pi.to_vec());
        c.non_dominant = vec![perm[0], perm[1]];
        c.mixing_vector = Some(c.to_original(&v1));
        if !p_stat.aperiodic {
            c.periodic_block = true;
            c.notes
                .push("dominant block P is periodic; laws involving its stationary distribution are unverified".into());
        }
        c.push_eigenpair("one", 1.0, &[1.0; 4]);
        c.push_eigenpair("v1", s, &v1);
        c.push_eigenpair("v2", s * lambda, &v2);
        c
    };

    if !rep_s && !rep_sl {
        // (beta I - sQ) u = E nu.
        let a = sq_minus(beta);
        let u = match solve2(&a, [-e_nu[0], -e_nu[1]]) {
            Solve2::Unique(u) => u,
            _ => return Attempt::Reject("singular eigenvector system for beta".into()),
        };
        let v3 = [u[0], u[1], nu[0], nu[1]];
        let mut c = build(Family::FourBlockDiag);
        c.push_eigenpair("v3", beta, &v3);
        c.push_vector("one", &[1.0; 4]);
        c.push_vector("v1", &v1);
        c.push_vector("v2", &v2);
        c.push_vector("v3", &v3);
        return Attempt::Match(Box::new(c));
    }

    let a = sq_minus(beta);
    if let Solve2::Unique(_) | Solve2::Particular(_) = solve2(&a, [-e_nu[0], -e_nu[1]]) {
        return Attempt::Reject("repeated eigenvalue with a full eigenspace is not covered".into());
    }
    // Non-diagonalizable: t2 is the eigenvector for beta, t1 the one for the other of s, s*lambda.
    let (t1, alpha, t2) = if rep_s { (v2, s * lambda, v1) } else { (v1, s, v2) };
    // (sQ - beta I) u = t2_upper - c E nu, solvable iff w.(t2_upper - c E nu) = 0.
    let w = left_null(&a);
    let c_scale = (w[0] * t2[0] + w[1] * t2[1]) / (w[0] * e_nu[0] + w[1] * e_nu[1]);
    let rhs = [t2[0] - c_scale * e_nu[0], t2[1] - c_scale * e_nu[1]];
    let u = match solve2(&a, rhs) {
        Solve2::Unique(u) | Solve2::Particular(u) => u,
        Solve2::Inconsistent => return Attempt::Reject("generalized eigenvector equation is inconsistent".into()),
    };
    let t3 = [u[0], u[1], c_scale * nu[0], c_scale * nu[1]];
    let mut c = build(Family::FourBlockJordan);
    c.push_vector("one", &[1.0; 4]);
    c.push_vector("t1", &t1);
    c.push_vector("t2", &t2);
    c.push_vector("t3", &t3);
    let columns = vec![c.to_original(&t1), c.to_original(&t2), c.to_original(&t3), vec![1.0; 4]];
    let j = vec![
        vec![alpha, 0.0, 0.0, 0.0],
        vec![0.0, beta, 1.0, 0.0],
        vec![0.0, 0.0, beta, 0.0],
        vec![0.0, 0.0, 0.0, 1.0],
    ];
    c.jordan = Some(JordanBasis { columns, j });
    Attempt::Match(Box::new(c))
}

/// Jordan basis of a Jordan-family matrix, checked against `R T = T J`.
pub fn jordan_basis(spec: &ReplacementSpec, class: &StructureClass) -> Result<JordanBasis, SpectralError> {
    if !class.family.is_jordan() {
        return Err(SpectralError::NotJordan(class.family));
    }
    let basis = class.jordan.clone().ok_or(SpectralError::InconsistentJordan)?;
    let resid = basis.residual(spec);
    if resid > RESIDUAL_TOL {
        return Err(SpectralError::JordanResidual(resid));
    }
    Ok(basis)
}

/// `sum_i pi_i v_i^2` for a block distribution and block vector.
pub fn stationary_second_moment(pi: &[f64], v: &[f64]) -> f64 {
    let sq: Vec<f64> = v.iter().map(|x| x * x).collect();
    dot(pi, &sq)
}
