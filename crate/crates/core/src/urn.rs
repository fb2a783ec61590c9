//! Urn state, the draw-and-replace step, and seeded trajectory simulation.
//!
//! Counts are real valued. At trial `n + 1` a ball of color `i` is drawn
//! with probability `counts[i] / (n + 1)` and row `i` of the replacement
//! matrix is added to the composition.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on row sums and on the initial probability vector.
pub const STOCHASTIC_TOL: f64 = 1e-12;
/// Tolerance on the spread of row sums before rescaling is refused.
pub const ROW_SPREAD_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecError {
    #[error("replacement matrix must have at least 2 colors, got {0}")]
    TooFewColors(usize),
    #[error("row {row} has {len} entries, expected {expected}")]
    RaggedRow { row: usize, len: usize, expected: usize },
    #[error("initial vector has {len} entries, expected {expected}")]
    InitialLength { len: usize, expected: usize },
    #[error("replacement[{row}][{col}] = {value} is negative or not finite")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("initial[{index}] = {value} is negative or not finite")]
    NegativeInitial { index: usize, value: f64 },
    #[error("row sums differ: row 0 sums to {first}, row {row} sums to {other}")]
    UnequalRowSums { row: usize, first: f64, other: f64 },
    #[error("row sums are zero; no balls are ever added")]
    ZeroRowSums,
    #[error("initial vector sums to {0}, expected 1")]
    InitialNotProbability(f64),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("color {color} out of range for {k} colors")]
    ColorOutOfRange { color: usize, k: usize },
    #[error("urn is empty, nothing to draw")]
    EmptyUrn,
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("checkpoint {checkpoint} lies beyond the horizon {horizon}")]
    CheckpointBeyondHorizon { checkpoint: u64, horizon: u64 },
    #[error("checkpoints must be strictly increasing")]
    UnsortedCheckpoints,
    #[error("tracked vector has {len} entries, expected {expected}")]
    TrackLength { len: usize, expected: usize },
    #[error("state has {len} counts, expected {expected}")]
    StateLength { len: usize, expected: usize },
}

/// A validated stochastic replacement matrix together with the initial
/// composition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplacementSpec {
    k: usize,
    /// Row-major `k * k`.
    matrix: Vec<f64>,
    initial: Vec<f64>,
    /// Common row sum of the matrix as supplied, before rescaling.
    original_row_sum: f64,
}

impl ReplacementSpec {
    /// Validates `rows` and `initial`. Matrices whose rows share a common
    /// sum `c != 1` are divided by `c`.
    pub fn new(rows: &[Vec<f64>], initial: &[f64]) -> Result<Self, SpecError> {
        let k = rows.len();
        if k < 2 {
            return Err(SpecError::TooFewColors(k));
        }
        for (row, r) in rows.iter().enumerate() {
            if r.len() != k {
                return Err(SpecError::RaggedRow { row, len: r.len(), expected: k });
            }
        }
        if initial.len() != k {
            return Err(SpecError::InitialLength { len: initial.len(), expected: k });
        }
        for (row, r) in rows.iter().enumerate() {
            for (col, &value) in r.iter().enumerate() {
                if !(value >= 0.0) || !value.is_finite() {
                    return Err(SpecError::NegativeEntry { row, col, value });
                }
            }
        }
        for (index, &value) in initial.iter().enumerate() {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(SpecError::NegativeInitial { index, value });
            }
        }

        let sums: Vec<f64> = rows.iter().map(|r| r.iter().sum()).collect();
        let first = sums[0];
        for (row, &other) in sums.iter().enumerate().skip(1) {
            if (other - first).abs() > ROW_SPREAD_TOL * first.abs().max(1.0) {
                return Err(SpecError::UnequalRowSums { row, first, other });
            }
        }
        if first <= 0.0 {
            return Err(SpecError::ZeroRowSums);
        }
        let scale = if (first - 1.0).abs() <= STOCHASTIC_TOL { 1.0 } else { first };
        let matrix: Vec<f64> = rows.iter().flat_map(|r| r.iter().map(|x| x / scale)).collect();

        let total: f64 = initial.iter().sum();
        if (total - 1.0).abs() > STOCHASTIC_TOL {
            return Err(SpecError::InitialNotProbability(total));
        }

        Ok(Self { k, matrix, initial: initial.to_vec(), original_row_sum: first })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.k + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.matrix[i * self.k..(i + 1) * self.k]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.k).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    /// Row sum of the matrix as the caller supplied it.
    pub fn original_row_sum(&self) -> f64 {
        self.original_row_sum
    }

    /// `R v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.k).map(|i| dot(self.row(i), v)).collect()
    }

    /// Same model with a different starting composition.
    pub fn with_initial(&self, initial: &[f64]) -> Result<Self, SpecError> {
        Self::new(&self.rows(), initial)
    }

    pub fn initial_state(&self) -> UrnState {
        UrnState { counts: self.initial.clone(), n: 0 }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Composition after `n` trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UrnState {
    pub counts: Vec<f64>,
    pub n: u64,
}

impl UrnState {
    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }
}

/// Adds row `color` of the replacement matrix to the composition.
pub fn step(spec: &ReplacementSpec, state: &UrnState, color: usize) -> Result<UrnState, SimError> {
    if color >= spec.k() {
        return Err(SimError::ColorOutOfRange { color, k: spec.k() });
    }
    if state.counts.len() != spec.k() {
        return Err(SimError::StateLength { len: state.counts.len(), expected: spec.k() });
    }
    let counts = state.counts.iter().zip(spec.row(color)).map(|(c, r)| c + r).collect();
    Ok(UrnState { counts, n: state.n + 1 })
}

/// Cumulative-sum inversion of a single uniform variate `u` in `[0, 1)`.
pub fn draw_with_uniform(counts: &[f64], u: f64) -> Result<usize, SimError> {
    let total: f64 = counts.iter().sum();
    if !(total > 0.0) {
        return Err(SimError::EmptyUrn);
    }
    Ok(invert(counts, u * total))
}

#[inline]
fn invert(counts: &[f64], target: f64) -> usize {
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > 0.0 {
            acc += c;
            last_positive = i;
            if target < acc {
                return i;
            }
        }
    }
    // Rounding can leave target == total.
    last_positive
}

/// Draws a color with probability proportional to its count. Consumes
/// exactly one uniform variate.
pub fn draw<G: Rng + ?Sized>(state: &UrnState, rng: &mut G) -> Result<usize, SimError> {
    draw_with_uniform(&state.counts, rng.gen::<f64>())
}

/// Independent reproducible stream `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Powers of two up to `horizon`, subdivided into `per_octave` geometric
/// steps, plus `horizon` itself.
pub fn geometric_checkpoints(horizon: u64, per_octave: u32) -> Vec<u64> {
    let per_octave = per_octave.max(1);
    let mut out = Vec::new();
    let mut octave = 0u32;
    loop {
        let base = 1u64 << octave;
        if base > horizon {
            break;
        }
        for sub in 0..per_octave {
            let n = (base as f64 * 2f64.powf(sub as f64 / per_octave as f64)).round() as u64;
            if n <= horizon && out.last().is_none_or(|&last| n > last) {
                out.push(n);
            }
        }
        octave += 1;
        if octave >= 63 {
            break;
        }
    }
    if out.last() != Some(&horizon) {
        out.push(horizon);
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationRequest {
    pub horizon: u64,
    pub seed: u64,
    pub stream: u64,
    pub checkpoints: Vec<u64>,
    pub track_vectors: Vec<Vec<f64>>,
}

/// One simulated path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub seed: u64,
    pub stream: u64,
    pub horizon: u64,
    pub checkpoints: Vec<u64>,
    /// Composition at each checkpoint.
    pub states: Vec<Vec<f64>>,
    /// `tracks[v][i] = states[i] . track_vectors[v]`.
    pub tracks: Vec<Vec<f64>>,
    pub final_counts: Vec<f64>,
}

impl Trajectory {
    pub fn final_dot(&self, v: &[f64]) -> f64 {
        dot(&self.final_counts, v)
    }
}

/// Runs `horizon` trials on stream `(seed, stream)`.
pub fn simulate(spec: &ReplacementSpec, req: &SimulationRequest) -> Result<Trajectory, SimError> {
    if req.horizon == 0 {
        return Err(SimError::ZeroHorizon);
    }
    if req.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SimError::UnsortedCheckpoints);
    }
    if let Some(&c) = req.checkpoints.iter().find(|&&c| c > req.horizon) {
        return Err(SimError::CheckpointBeyondHorizon { checkpoint: c, horizon: req.horizon });
    }
    let k = spec.k();
    for v in &req.track_vectors {
        if v.len() != k {
            return Err(SimError::TrackLength { len: v.len(), expected: k });
        }
    }

    let mut rng = stream_rng(req.seed, req.stream);
    let mut counts = spec.initial().to_vec();
    let row_sums: Vec<f64> = (0..k).map(|i| spec.row(i).iter().sum()).collect();
    let mut total: f64 = counts.iter().sum();
    if !(total > 0.0) {
        return Err(SimError::EmptyUrn);
    }

    let mut states = Vec::with_capacity(req.checkpoints.len());
    let mut tracks = vec![Vec::with_capacity(req.checkpoints.len()); req.track_vectors.len()];
    let record = |counts: &[f64], states: &mut Vec<Vec<f64>>, tracks: &mut Vec<Vec<f64>>| {
        states.push(counts.to_vec());
        for (t, v) in tracks.iter_mut().zip(&req.track_vectors) {
            t.push(dot(counts, v));
        }
    };

    let mut next = req.checkpoints.iter().peekable();
    if next.peek() == Some(&&0) {
        record(&counts, &mut states, &mut tracks);
        next.next();
    }
    for n in 1..=req.horizon {
        let u: f64 = rng.gen();
        let color = invert(&counts, u * total);
        for (c, r) in counts.iter_mut().zip(spec.row(color)) {
            *c += r;
        }
        total += row_sums[color];
        if next.peek() == Some(&&n) {
            record(&counts, &mut states, &mut tracks);
            next.next();
        }
    }

    Ok(Trajectory {
        seed: req.seed,
        stream: req.stream,
        horizon: req.horizon,
        checkpoints: req.checkpoints.clone(),
        states,
        tracks,
        final_counts: counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangular(s: f64) -> ReplacementSpec {
        ReplacementSpec::new(&[vec![s, 1.0 - s], vec![0.0, 1.0]], &[0.5, 0.5]).unwrap()
    }

    #[test]
    fn new_spec_accepts_triangular_and_identity() {
        let spec = triangular(0.6);
        assert_eq!(spec.k(), 2);
        assert_eq!(spec.row(0), &[0.6, 0.4]);
        let id = ReplacementSpec::new(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[1.0, 0.0]).unwrap();
        assert_eq!(id.initial(), &[1.0, 0.0]);
    }

    #[test]
    fn new_spec_rescales_common_row_sum() {
        let spec = ReplacementSpec::new(&[vec![1.2, 0.8], vec![2.0, 0.0]], &[0.5, 0.5]).unwrap();
        assert_eq!(spec.rows(), vec![vec![0.6, 0.4], vec![1.0, 0.0]]);
        assert_eq!(spec.original_row_sum(), 2.0);
    }

    #[test]
    fn new_spec_errors() {
        let e = ReplacementSpec::new(&[vec![0.5, 0.5]], &[1.0]).unwrap_err();
        assert_eq!(e, SpecError::TooFewColors(1));
        let e = ReplacementSpec::new(&[vec![1.1, -0.1], vec![0.0, 1.0]], &[0.5, 0.5]).unwrap_err();
        assert!(matches!(e, SpecError::NegativeEntry { row: 0, col: 1, .. }));
        let e = ReplacementSpec::new(&[vec![0.5, 0.5], vec![0.0, 2.0]], &[0.5, 0.5]).unwrap_err();
        assert!(matches!(e, SpecError::UnequalRowSums { row: 1, .. }));
        let e = ReplacementSpec::new(&[vec![0.5, 0.5], vec![0.0, 1.0]], &[0.5, 0.6]).unwrap_err();
        assert!(matches!(e, SpecError::InitialNotProbability(_)));
        let e = ReplacementSpec::new(&[vec![0.5, 0.5], vec![0.0, 1.0]], &[0.5]).unwrap_err();
        assert!(matches!(e, SpecError::InitialLength { .. }));
        let e = ReplacementSpec::new(&[vec![0.5, 0.5], vec![1.0]], &[0.5, 0.5]).unwrap_err();
        assert!(matches!(e, SpecError::RaggedRow { row: 1, .. }));
    }

    #[test]
    fn step_adds_the_drawn_row() {
        let spec = triangular(0.6);
        let s0 = spec.initial_state();
        let white = step(&spec, &s0, 0).unwrap();
        assert!((white.counts[0] - 1.1).abs() < 1e-15 && (white.counts[1] - 0.9).abs() < 1e-15);
        assert_eq!(white.n, 1);
        let black = step(&spec, &s0, 1).unwrap();
        assert_eq!(black.counts, vec![0.5, 1.5]);
        assert_eq!(step(&spec, &s0, 2), Err(SimError::ColorOutOfRange { color: 2, k: 2 }));

        let id =
            ReplacementSpec::new(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]], &[0.25, 0.25, 0.5])
                .unwrap();
        let st = step(&id, &id.initial_state(), 2).unwrap();
        assert_eq!(st.counts, vec![0.25, 0.25, 1.5]);
    }

    #[test]
    fn draw_inverts_cumulative_sums() {
        assert_eq!(draw_with_uniform(&[1.0, 0.0], 0.0).unwrap(), 0);
        assert_eq!(draw_with_uniform(&[1.0, 0.0], 0.999_999).unwrap(), 0);
        assert_eq!(draw_with_uniform(&[0.5, 0.5], 0.25).unwrap(), 0);
        assert_eq!(draw_with_uniform(&[0.5, 0.5], 0.75).unwrap(), 1);
        assert_eq!(draw_with_uniform(&[0.2, 0.3, 0.5], 0.45).unwrap(), 1);
        assert_eq!(draw_with_uniform(&[0.0, 0.0], 0.5), Err(SimError::EmptyUrn));
        // Zero-mass colors are never chosen, even at the boundary.
        assert_eq!(draw_with_uniform(&[0.5, 0.5, 0.0], 1.0).unwrap(), 1);
    }

    #[test]
    fn draw_consumes_one_variate() {
        let state = UrnState { counts: vec![0.2, 0.3, 0.5], n: 0 };
        let mut a = stream_rng(7, 3);
        let mut b = stream_rng(7, 3);
        let _ = draw(&state, &mut a).unwrap();
        let _: f64 = b.gen();
        assert_eq!(a.gen::<u64>(), b.gen::<u64>());
    }

    #[test]
    fn geometric_grid() {
        assert_eq!(geometric_checkpoints(10, 1), vec![1, 2, 4, 8, 10]);
        assert_eq!(geometric_checkpoints(8, 1), vec![1, 2, 4, 8]);
        let dense = geometric_checkpoints(1000, 4);
        assert!(dense.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(*dense.last().unwrap(), 1000);
        assert!(dense.len() > 30);
    }

    #[test]
    fn simulate_is_deterministic_and_conserves_mass() {
        let spec = triangular(0.6);
        let req = SimulationRequest {
            horizon: 1000,
            seed: 11,
            stream: 4,
            checkpoints: geometric_checkpoints(1000, 2),
            track_vectors: vec![vec![1.0, 1.0], vec![1.0, 0.0]],
        };
        let a = simulate(&spec, &req).unwrap();
        let b = simulate(&spec, &req).unwrap();
        assert_eq!(a, b);
        for (n, state) in a.checkpoints.iter().zip(&a.states) {
            let total: f64 = state.iter().sum();
            assert!((total - (*n as f64 + 1.0)).abs() <= 1e-9 * (*n as f64).max(1.0));
        }
        for (i, state) in a.states.iter().enumerate() {
            assert!((a.tracks[1][i] - state[0]).abs() <= 1e-12);
        }
        let other = simulate(&spec, &SimulationRequest { stream: 5, ..req.clone() }).unwrap();
        assert_ne!(a.final_counts, other.final_counts);
    }

    #[test]
    fn simulate_identity_three_steps() {
        let id = ReplacementSpec::new(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[0.5, 0.5]).unwrap();
        let req = SimulationRequest { horizon: 3, seed: 1, stream: 0, checkpoints: vec![0, 3], track_vectors: vec![] };
        let t = simulate(&id, &req).unwrap();
        assert_eq!(t.states[0], vec![0.5, 0.5]);
        assert_eq!(t.states[1].iter().sum::<f64>(), 4.0);
    }

    #[test]
    fn simulate_rejects_bad_requests() {
        let spec = triangular(0.5);
        let base = SimulationRequest { horizon: 5, seed: 0, stream: 0, checkpoints: vec![1, 5], track_vectors: vec![] };
        assert_eq!(simulate(&spec, &SimulationRequest { horizon: 0, ..base.clone() }), Err(SimError::ZeroHorizon));
        assert_eq!(
            simulate(&spec, &SimulationRequest { checkpoints: vec![3, 2], ..base.clone() }),
            Err(SimError::UnsortedCheckpoints)
        );
        assert!(matches!(
            simulate(&spec, &SimulationRequest { checkpoints: vec![6], ..base.clone() }),
            Err(SimError::CheckpointBeyondHorizon { .. })
        ));
        assert!(matches!(
            simulate(&spec, &SimulationRequest { track_vectors: vec![vec![1.0]], ..base }),
            Err(SimError::TrackLength { .. })
        ));
    }

    #[test]
    fn single_step_outcomes_are_equally_likely() {
        let spec = triangular(0.5);
        let req =
            |stream| SimulationRequest { horizon: 1, seed: 99, stream, checkpoints: vec![1], track_vectors: vec![] };
        let mut white = 0;
        let m = 20_000;
        for stream in 0..m {
            let t = simulate(&spec, &req(stream)).unwrap();
            if t.final_counts == vec![1.0, 1.0] {
                white += 1;
            } else {
                assert_eq!(t.final_counts, vec![0.5, 1.5]);
            }
        }
        let p = white as f64 / m as f64;
        assert!((p - 0.5).abs() < 4.0 * (0.25 / m as f64).sqrt(), "p = {p}");
    }
}
