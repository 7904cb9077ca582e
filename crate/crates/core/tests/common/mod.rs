//! Generators and brute-force oracles shared by the integration tests. The
//! oracles only use sorting and summation over atoms, never the grid or
//! decomposition code they are checking.

#![allow(dead_code)]

use otline::plan::TransportPlan;
use otline::{q, Measure, Scalar};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn atoms(pts: &[(i64, i64)]) -> Measure {
    Measure::atomic(pts.iter().map(|&(x, w)| (q(x, 1), q(w, 1))).collect()).unwrap()
}

pub fn weighted(pts: &[(Scalar, Scalar)]) -> Measure {
    Measure::atomic(pts.to_vec()).unwrap()
}

fn pairs(m: &Measure) -> Vec<(Scalar, Scalar)> {
    m.atoms()
        .iter()
        .map(|a| (a.x.clone(), a.w.clone()))
        .collect()
}

/// `(F^-(t), F^+(t))` of an atomic measure by direct summation.
pub fn naive_cdf(m: &Measure, t: &Scalar) -> (Scalar, Scalar) {
    let mut below = Scalar::zero();
    let mut upto = Scalar::zero();
    for (x, w) in pairs(m) {
        if &x < t {
            below += &w;
        }
        if &x <= t {
            upto += &w;
        }
    }
    (below, upto)
}

/// Support points of both measures, the midpoints between consecutive ones
/// and one point outside on each side. CDFs of atomic measures are constant
/// between support points, so these points see every piece of the line.
pub fn probe_points(mu: &Measure, nu: &Measure) -> Vec<Scalar> {
    let mut pts: Vec<Scalar> = pairs(mu)
        .into_iter()
        .chain(pairs(nu))
        .map(|(x, _)| x)
        .collect();
    pts.sort();
    pts.dedup();
    let mut out = Vec::new();
    if let (Some(first), Some(last)) = (pts.first(), pts.last()) {
        out.push(first - &Scalar::one());
        out.push(last + &Scalar::one());
    }
    for w in pts.windows(2) {
        out.push(w[0].midpoint(&w[1]));
    }
    out.extend(pts);
    out.sort();
    out
}

/// `∫ |F_μ - F_ν|` summed over the gaps between consecutive support points.
pub fn naive_w1(mu: &Measure, nu: &Measure) -> Scalar {
    let mut pts: Vec<Scalar> = pairs(mu)
        .into_iter()
        .chain(pairs(nu))
        .map(|(x, _)| x)
        .collect();
    pts.sort();
    pts.dedup();
    pts.windows(2)
        .map(|w| {
            let (_, a) = naive_cdf(mu, &w[0]);
            let (_, b) = naive_cdf(nu, &w[0]);
            (a - b).abs() * (&w[1] - &w[0])
        })
        .sum()
}

/// `g1 ≤F g2` checked pointwise at the probe points.
pub fn naive_leq_f(g1: &Measure, g2: &Measure) -> bool {
    let m1 = g1.mass();
    let m2 = g2.mass();
    if m1 != m2 {
        return false;
    }
    probe_points(g1, g2).iter().all(|t| {
        let (a_minus, a_plus) = naive_cdf(g1, t);
        let (b_minus, b_plus) = naive_cdf(g2, t);
        let on_t_plus = a_plus.is_positive() && b_plus < m2;
        let on_t_minus = a_minus.is_positive() && b_minus < m2;
        a_plus >= b_plus && (!on_t_plus || a_plus > b_plus) && (!on_t_minus || a_minus > b_minus)
    })
}

/// Membership of `t` in `E⁺`, `E⁻` and the four-set description of the
/// barrier set, from direct CDF sums.
pub struct PointClass {
    pub e_plus: bool,
    pub e_minus: bool,
    pub barrier: bool,
}

pub fn classify(mu: &Measure, nu: &Measure, t: &Scalar) -> PointClass {
    let (mm, mp) = naive_cdf(mu, t);
    let (nm, np) = naive_cdf(nu, t);
    PointClass {
        e_plus: mp > np && mm > nm,
        e_minus: mp < np && mm < nm,
        barrier: mp == np
            || mm == nm
            || (nm < mm && mm <= mp && mp < np)
            || (mm < nm && nm <= np && np < mp),
    }
}

/// Support cycles of length `2..=max_len` never beat the plan: for every
/// tuple of distinct support points, `Σ |x_i - y_i| ≤ Σ |x_i - y_{i+1}|`.
pub fn brute_cyclically_monotone(plan: &TransportPlan, max_len: usize) -> bool {
    let pts: Vec<(Scalar, Scalar)> = plan
        .cells()
        .iter()
        .map(|c| (c.x.clone(), c.y.clone()))
        .collect();
    let mut idx = Vec::with_capacity(max_len);
    fn rec(pts: &[(Scalar, Scalar)], idx: &mut Vec<usize>, max_len: usize) -> bool {
        let k = idx.len();
        if k >= 2 {
            let here: Scalar = idx.iter().map(|&i| (&pts[i].0 - &pts[i].1).abs()).sum();
            let shifted: Scalar = (0..k)
                .map(|j| (&pts[idx[j]].0 - &pts[idx[(j + 1) % k]].1).abs())
                .sum();
            if here > shifted {
                return false;
            }
        }
        if k == max_len {
            return true;
        }
        for i in 0..pts.len() {
            if idx.contains(&i) {
                continue;
            }
            idx.push(i);
            let ok = rec(pts, idx, max_len);
            idx.pop();
            if !ok {
                return false;
            }
        }
        true
    }
    rec(&pts, &mut idx, max_len)
}

/// Exact entropy terms as pairs `(w, μ(x) ν(y))`, sorted. Two plans have the
/// same relative entropy term by term iff these lists agree.
pub fn entropy_symbols(plan: &TransportPlan, mu: &Measure, nu: &Measure) -> Vec<(Scalar, Scalar)> {
    let mut out: Vec<(Scalar, Scalar)> = plan
        .cells()
        .iter()
        .map(|c| (c.w.clone(), mu.atom_weight(&c.x) * nu.atom_weight(&c.y)))
        .collect();
    out.sort();
    out
}

fn small_int<R: Rng>(rng: &mut R, lo: i64, hi: i64) -> Scalar {
    Scalar::from_int(rng.gen_range(lo..=hi))
}

/// Random rational plan with at most 8 cells. Several shapes are mixed so
/// that both optimal and non-optimal couplings occur often.
pub fn random_coupling<R: Rng>(rng: &mut R) -> TransportPlan {
    let mut cells: Vec<(Scalar, Scalar, Scalar)> = Vec::new();
    match rng.gen_range(0..4) {
        // unconstrained cells
        0 => {
            for _ in 0..rng.gen_range(1..=8) {
                cells.push((
                    small_int(rng, 0, 6),
                    small_int(rng, 0, 6),
                    small_int(rng, 1, 4),
                ));
            }
        }
        // above the diagonal only, hence optimal
        1 => {
            for _ in 0..rng.gen_range(1..=8) {
                let x = small_int(rng, 0, 5);
                let y = &x + &small_int(rng, 0, 3);
                cells.push((x, y, small_int(rng, 1, 4)));
            }
        }
        // short moves around a common point
        2 => {
            let c = small_int(rng, 2, 4);
            for _ in 0..rng.gen_range(1..=8) {
                let (d1, d2) = (small_int(rng, 0, 2), small_int(rng, 0, 2));
                let (x, y) = if rng.gen_bool(0.5) {
                    (&c - &d1, &c + &d2)
                } else {
                    (&c + &d1, &c - &d2)
                };
                cells.push((x, y, small_int(rng, 1, 3)));
            }
        }
        // identity plus one swapped pair of unit masses
        _ => {
            let mut xs: Vec<i64> = (0..7).collect();
            xs.shuffle(rng);
            for &x in xs.iter().take(rng.gen_range(2..=6)) {
                cells.push((Scalar::from_int(x), Scalar::from_int(x), q(2, 1)));
            }
            let (a, b) = (cells[0].0.clone(), cells[1].0.clone());
            cells[0].2 = q(1, 1);
            cells[1].2 = q(1, 1);
            cells.push((a.clone(), b.clone(), q(1, 1)));
            cells.push((b, a, q(1, 1)));
        }
    }
    let plan = TransportPlan::new(cells).unwrap();
    assert!(plan.len() <= 8, "generator produced {} cells", plan.len());
    plan
}
