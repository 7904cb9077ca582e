//! Named reference instances used by tests, the acceptance suite and the
//! CLI's `example` subcommand.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::measure::Measure;
use crate::scalar::{q, Scalar};

fn int(n: i64) -> Scalar {
    Scalar::from_int(n)
}

/// Mixed pair on `[0, 6]` whose decomposition has one forward component,
/// two backward components and boundary atoms split three ways at `2`.
pub fn mixed_boundary_pair() -> (Measure, Measure) {
    let mut atoms = Vec::new();
    let mut pieces = Vec::new();
    for k in 0..6 {
        pieces.push((int(k), int(k + 1), int(1)));
        if k >= 1 {
            atoms.push((int(k), int(1)));
        }
    }
    let mu = Measure::new(atoms, pieces).expect("valid measure");
    let nu = Measure::new(
        vec![
            (int(1), int(1)),
            (int(2), int(2)),
            (int(3), q(3, 2)),
            (int(4), int(1)),
            (int(5), int(1)),
        ],
        vec![
            (q(1, 2), int(1), int(1)),
            (int(1), int(2), int(1)),
            (int(2), int(3), q(1, 2)),
            (int(3), int(4), q(1, 2)),
            (int(4), int(5), int(1)),
            (int(5), int(6), int(1)),
        ],
    )
    .expect("valid measure");
    (mu, nu)
}

/// Atomless pair: uniform on `]0,1[` against a step density concentrated on
/// four windows.
pub fn uniform_window_pair() -> (Measure, Measure) {
    let mu = Measure::uniform(int(0), int(1), int(1));
    let nu = Measure::new(
        vec![],
        vec![
            (q(1, 8), q(1, 4), int(2)),
            (q(3, 8), q(1, 2), int(2)),
            (q(1, 2), q(3, 4), int(1)),
            (q(3, 4), q(7, 8), int(2)),
        ],
    )
    .expect("valid measure");
    (mu, nu)
}

/// Atomic pair where the mass at `0` splits into a backward part, a forward
/// part and a fixed part.
pub fn point_split_pair() -> (Measure, Measure) {
    let mu = Measure::atomic(vec![(int(-1), int(1)), (int(0), int(6)), (int(1), int(1))])
        .expect("valid measure");
    let nu = Measure::atomic(vec![
        (int(-3), int(1)),
        (int(-2), int(2)),
        (int(0), int(3)),
        (int(2), int(1)),
        (int(3), int(1)),
    ])
    .expect("valid measure");
    (mu, nu)
}

/// Two unit atoms moved rightwards by two: every coupling has the same cost.
pub fn shifted_pair() -> (Measure, Measure) {
    let mu = Measure::atomic(vec![(int(0), int(1)), (int(1), int(1))]).expect("valid measure");
    let nu = Measure::atomic(vec![(int(2), int(1)), (int(3), int(1))]).expect("valid measure");
    (mu, nu)
}

/// Uniform density on `[0, 1]`, discretized into `cells` atoms, against
/// `½ δ_{1/4} + ½ δ_{3/4}`. For even `cells` the two supports are disjoint.
pub fn semi_discrete_pair(cells: usize) -> (Measure, Measure) {
    let mu = Measure::uniform(int(0), int(1), int(1))
        .discretize(cells)
        .expect("cells >= 1");
    let nu = Measure::atomic(vec![(q(1, 4), q(1, 2)), (q(3, 4), q(1, 2))]).expect("valid measure");
    (mu, nu)
}

/// Shape of randomly drawn atomic pairs.
#[derive(Clone, Copy, Debug)]
pub struct RandomPairSpec {
    /// Upper bound on the number of atoms of each measure.
    pub max_atoms: usize,
    /// Positions are drawn from `0..=max_position`.
    pub max_position: i64,
    /// Raw weights are drawn from `1..=max_weight` before normalization.
    pub max_weight: i64,
    /// Draw the two supports from disjoint position sets.
    pub disjoint: bool,
}

impl Default for RandomPairSpec {
    fn default() -> Self {
        RandomPairSpec {
            max_atoms: 6,
            max_position: 8,
            max_weight: 4,
            disjoint: false,
        }
    }
}

fn random_probability<R: Rng>(rng: &mut R, positions: &[i64], max_weight: i64) -> Measure {
    let raw: Vec<i64> = positions
        .iter()
        .map(|_| rng.gen_range(1..=max_weight))
        .collect();
    let total: i64 = raw.iter().sum();
    Measure::atomic(
        positions
            .iter()
            .zip(&raw)
            .map(|(&x, &w)| (int(x), q(w, total)))
            .collect(),
    )
    .expect("positive weights at distinct positions")
}

/// Two probability measures with integer positions and rational weights.
pub fn random_atomic_pair<R: Rng>(rng: &mut R, spec: RandomPairSpec) -> (Measure, Measure) {
    let mut pool: Vec<i64> = (0..=spec.max_position).collect();
    pool.shuffle(rng);
    let (left, right) = if spec.disjoint {
        let half = pool.len() / 2;
        (pool[..half].to_vec(), pool[half..].to_vec())
    } else {
        let mut other = pool.clone();
        other.shuffle(rng);
        (pool, other)
    };
    let n1 = rng.gen_range(1..=spec.max_atoms.min(left.len()));
    let n2 = rng.gen_range(1..=spec.max_atoms.min(right.len()));
    let mut p1 = left[..n1].to_vec();
    let mut p2 = right[..n2].to_vec();
    p1.sort_unstable();
    p2.sort_unstable();
    (
        random_probability(rng, &p1, spec.max_weight),
        random_probability(rng, &p2, spec.max_weight),
    )
}
