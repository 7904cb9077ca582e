//! Finitely supported transport plans on `ℝ²`.
//!
//! Positions are always exact. Weights are either exact ([`TransportPlan`])
//! or binary floats ([`FloatPlan`]) for the outputs of the scaling solvers.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::Measure;
use crate::scalar::Scalar;

/// Arithmetic needed from plan weights.
pub trait Weight: Clone + Debug + PartialEq + PartialOrd {
    fn zero() -> Self;
    fn from_scalar(s: &Scalar) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn to_f64(&self) -> f64;
    fn is_zero(&self) -> bool;
    fn is_negative(&self) -> bool;
    /// Equality up to `tol`; exact types ignore the tolerance.
    fn close(&self, other: &Self, tol: f64) -> bool;
    fn render(&self) -> String;
    fn parse(s: &str) -> Result<Self>;
}

impl Weight for Scalar {
    fn zero() -> Self {
        Scalar::zero()
    }
    fn from_scalar(s: &Scalar) -> Self {
        s.clone()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn to_f64(&self) -> f64 {
        Scalar::to_f64(self)
    }
    fn is_zero(&self) -> bool {
        Scalar::is_zero(self)
    }
    fn is_negative(&self) -> bool {
        Scalar::is_negative(self)
    }
    fn close(&self, other: &Self, _tol: f64) -> bool {
        self == other
    }
    fn render(&self) -> String {
        self.to_string()
    }
    fn parse(s: &str) -> Result<Self> {
        s.parse()
    }
}

impl Weight for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_scalar(s: &Scalar) -> Self {
        s.to_f64()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn is_negative(&self) -> bool {
        *self < 0.0
    }
    fn close(&self, other: &Self, tol: f64) -> bool {
        (self - other).abs() <= tol
    }
    fn render(&self) -> String {
        format_f64(*self)
    }
    fn parse(s: &str) -> Result<Self> {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::Parse(format!("invalid weight '{s}'")))
    }
}

/// 17 significant digits, enough to round-trip any double.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cell<W> {
    pub x: Scalar,
    pub y: Scalar,
    pub w: W,
}

/// Sparse plan: cells sorted lexicographically by `(x, y)`, no duplicates,
/// no zero weights.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Plan<W> {
    cells: Vec<Cell<W>>,
}

pub type TransportPlan = Plan<Scalar>;
pub type FloatPlan = Plan<f64>;

impl<W: Weight> Default for Plan<W> {
    fn default() -> Self {
        Plan { cells: Vec::new() }
    }
}

impl<W: Weight> Plan<W> {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a plan from arbitrary triples; duplicates are summed and zero
    /// weights dropped. Negative weights are rejected.
    pub fn new(triples: Vec<(Scalar, Scalar, W)>) -> Result<Self> {
        if let Some((x, y, w)) = triples.iter().find(|t| t.2.is_negative()) {
            return Err(Error::InvalidArgument(format!(
                "negative weight {w:?} at ({x}, {y})"
            )));
        }
        Ok(Self::collect(triples))
    }

    fn collect(triples: Vec<(Scalar, Scalar, W)>) -> Self {
        let mut map: BTreeMap<(Scalar, Scalar), W> = BTreeMap::new();
        for (x, y, w) in triples {
            let e = map.entry((x, y)).or_insert_with(W::zero);
            *e = e.add(&w);
        }
        let cells = map
            .into_iter()
            .filter(|(_, w)| !w.is_zero())
            .map(|((x, y), w)| Cell { x, y, w })
            .collect();
        Plan { cells }
    }

    pub fn cells(&self) -> &[Cell<W>] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn mass(&self) -> W {
        self.cells.iter().fold(W::zero(), |acc, c| acc.add(&c.w))
    }

    pub fn weight_at(&self, x: &Scalar, y: &Scalar) -> W {
        self.cells
            .binary_search_by(|c| (&c.x, &c.y).cmp(&(x, y)))
            .map(|i| self.cells[i].w.clone())
            .unwrap_or_else(|_| W::zero())
    }

    /// `Σ w |y - x|`.
    pub fn cost(&self) -> W {
        self.cells.iter().fold(W::zero(), |acc, c| {
            acc.add(&c.w.mul(&W::from_scalar(&(&c.y - &c.x).abs())))
        })
    }

    /// Projection on the first coordinate, sorted by position.
    pub fn first_marginal(&self) -> Vec<(Scalar, W)> {
        marginal(self.cells.iter().map(|c| (&c.x, &c.w)))
    }

    pub fn second_marginal(&self) -> Vec<(Scalar, W)> {
        marginal(self.cells.iter().map(|c| (&c.y, &c.w)))
    }

    /// Sorted distinct first coordinates.
    pub fn xs(&self) -> Vec<Scalar> {
        self.first_marginal().into_iter().map(|(x, _)| x).collect()
    }

    pub fn ys(&self) -> Vec<Scalar> {
        self.second_marginal().into_iter().map(|(y, _)| y).collect()
    }

    pub fn restrict(&self, keep: impl Fn(&Scalar, &Scalar) -> bool) -> Self {
        Plan {
            cells: self
                .cells
                .iter()
                .filter(|c| keep(&c.x, &c.y))
                .cloned()
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let triples = self
            .cells
            .iter()
            .chain(other.cells.iter())
            .map(|c| (c.x.clone(), c.y.clone(), c.w.clone()))
            .collect();
        Self::collect(triples)
    }

    /// Image under `(x, y) ↦ (y, x)`.
    pub fn transpose(&self) -> Self {
        Self::collect(
            self.cells
                .iter()
                .map(|c| (c.y.clone(), c.x.clone(), c.w.clone()))
                .collect(),
        )
    }

    pub fn map_weights<V: Weight>(&self, f: impl Fn(&W) -> V) -> Plan<V> {
        Plan::collect(
            self.cells
                .iter()
                .map(|c| (c.x.clone(), c.y.clone(), f(&c.w)))
                .collect(),
        )
    }

    pub fn to_float(&self) -> FloatPlan {
        self.map_weights(|w| w.to_f64())
    }

    /// L1 distance between the plan's marginals and `(mu, nu)`, summed over
    /// both marginals. Requires atomic targets.
    pub fn marginal_error(&self, mu: &Measure, nu: &Measure) -> f64 {
        marginal_gap(&self.first_marginal(), mu) + marginal_gap(&self.second_marginal(), nu)
    }

    /// Whether the marginals equal `(mu, nu)` up to `tol` per atom.
    pub fn couples(&self, mu: &Measure, nu: &Measure, tol: f64) -> bool {
        mu.is_atomic()
            && nu.is_atomic()
            && marginal_matches(&self.first_marginal(), mu, tol)
            && marginal_matches(&self.second_marginal(), nu, tol)
    }

    pub fn write_csv<Wr: Write>(&self, out: Wr) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(["x", "y", "w"]).map_err(io)?;
        for c in &self.cells {
            w.write_record([c.x.to_string(), c.y.to_string(), c.w.render()])
                .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(input);
        let headers = r
            .headers()
            .map_err(|e| Error::Parse(e.to_string()))?
            .clone();
        if headers.iter().collect::<Vec<_>>() != ["x", "y", "w"] {
            return Err(Error::Parse("plan CSV header must be x,y,w".into()));
        }
        let mut triples = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            let x: Scalar = rec[0].parse()?;
            let y: Scalar = rec[1].parse()?;
            let w = W::parse(&rec[2])?;
            triples.push((x, y, w));
        }
        Self::new(triples)
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

impl TransportPlan {
    /// `Σ_x m(x) δ_(x,x)` for an atomic `m`.
    pub fn identity(m: &Measure) -> Result<Self> {
        m.require_atomic()?;
        Ok(Plan {
            cells: m
                .atoms()
                .iter()
                .map(|a| Cell {
                    x: a.x.clone(),
                    y: a.x.clone(),
                    w: a.w.clone(),
                })
                .collect(),
        })
    }

    pub fn first_marginal_measure(&self) -> Measure {
        Measure::atomic(self.first_marginal()).expect("plan weights are positive")
    }

    pub fn second_marginal_measure(&self) -> Measure {
        Measure::atomic(self.second_marginal()).expect("plan weights are positive")
    }
}

impl FloatPlan {
    /// Drops cells whose weight does not exceed `floor`.
    pub fn prune(&self, floor: f64) -> Self {
        Plan {
            cells: self.cells.iter().filter(|c| c.w > floor).cloned().collect(),
        }
    }
}

fn marginal<'a, W: Weight + 'a>(it: impl Iterator<Item = (&'a Scalar, &'a W)>) -> Vec<(Scalar, W)> {
    let mut map: BTreeMap<Scalar, W> = BTreeMap::new();
    for (p, w) in it {
        let e = map.entry(p.clone()).or_insert_with(W::zero);
        *e = e.add(w);
    }
    map.into_iter().collect()
}

fn marginal_gap<W: Weight>(marg: &[(Scalar, W)], target: &Measure) -> f64 {
    let mut gap = 0.0;
    for (x, w) in marg {
        gap += (w.to_f64() - target.atom_weight(x).to_f64()).abs();
    }
    for a in target.atoms() {
        if marg.binary_search_by(|(x, _)| x.cmp(&a.x)).is_err() {
            gap += a.w.to_f64();
        }
    }
    gap + target
        .pieces()
        .iter()
        .map(|p| p.mass().to_f64())
        .sum::<f64>()
}

fn marginal_matches<W: Weight>(marg: &[(Scalar, W)], target: &Measure, tol: f64) -> bool {
    marg.len() == target.atoms().len()
        && marg
            .iter()
            .zip(target.atoms())
            .all(|((x, w), a)| x == &a.x && w.close(&W::from_scalar(&a.w), tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::q;

    fn plan(t: &[(i64, i64, i64)]) -> TransportPlan {
        Plan::new(
            t.iter()
                .map(|&(x, y, w)| (q(x, 1), q(y, 1), q(w, 1)))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn canonical_form_merges_and_sorts() {
        let p = plan(&[(1, 0, 1), (0, 2, 1), (1, 0, 2), (0, 1, 0)]);
        assert_eq!(p.len(), 2);
        assert_eq!(p.cells()[0].x, q(0, 1));
        assert_eq!(p.weight_at(&q(1, 1), &q(0, 1)), q(3, 1));
        assert!(Plan::new(vec![(q(0, 1), q(0, 1), q(-1, 1))]).is_err());
    }

    #[test]
    fn cost_and_marginals() {
        let p = plan(&[(0, 2, 1), (1, 3, 1)]);
        assert_eq!(p.cost(), q(4, 1));
        let mu = Measure::atomic(vec![(q(0, 1), q(1, 1)), (q(1, 1), q(1, 1))]).unwrap();
        let nu = Measure::atomic(vec![(q(2, 1), q(1, 1)), (q(3, 1), q(1, 1))]).unwrap();
        assert!(p.couples(&mu, &nu, 0.0));
        assert!(!p.couples(&nu, &mu, 0.0));
        assert_eq!(p.marginal_error(&mu, &nu), 0.0);
        assert_eq!(p.marginal_error(&nu, &mu), 8.0);
        assert_eq!(p.transpose().cost(), q(4, 1));
    }

    #[test]
    fn csv_round_trip() {
        let p = Plan::new(vec![
            (q(-1, 2), q(3, 1), q(1, 3)),
            (q(0, 1), q(0, 1), q(2, 3)),
        ])
        .unwrap();
        let s = p.to_csv_string();
        assert!(s.starts_with("x,y,w\n-1/2,3,1/3\n"));
        assert_eq!(TransportPlan::read_csv(s.as_bytes()).unwrap(), p);
        let f = p.to_float();
        let back = FloatPlan::read_csv(f.to_csv_string().as_bytes()).unwrap();
        assert_eq!(back, f);
        assert!(TransportPlan::read_csv("a,b,c\n".as_bytes()).is_err());
    }
}
