//! Operation-count benchmark over a sweep of field sizes.
//!
//! CSV columns, one row per `(q, procedure)`:
//! `q,log2_e,procedure,reps,mean_ops,min_ops,max_ops,mean_mul,mean_inv,mean_eq,mean_random,mean_micros`.
//! `mean_ops` is the sum of the four counters; all means are over `reps` runs.

use psl2_blackbox::bbox::{BlackBox, OpCounts};
use psl2_blackbox::finite_field::ExplicitField;
use psl2_blackbox::involution::{Confidence, SerendipityOutcome};
use psl2_blackbox::kfield::{FieldElementK, Policy};
use psl2_blackbox::morphism::rho;
use psl2_blackbox::oracle::MatrixKind;
use psl2_blackbox::pipeline::{coordinatize, Coordinatized, GroupSpec, PipelineError};
use std::time::Instant;

pub const HEADER: &str = "q,log2_e,procedure,reps,mean_ops,min_ops,max_ops,mean_mul,mean_inv,mean_eq,mean_random,mean_micros";

pub const PROCEDURES: [&str; 10] = ["involution", "centralizer", "reification", "join", "meet", "add", "mul", "rho", "neg", "inv"];

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub q: u64,
    pub log2_e: f64,
    pub procedure: &'static str,
    pub reps: usize,
    pub mean_ops: f64,
    pub min_ops: u64,
    pub max_ops: u64,
    pub mean: [f64; 4],
    pub mean_micros: f64,
}

impl BenchRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{:.3},{},{},{:.2},{},{},{:.2},{:.2},{:.2},{:.2},{:.1}",
            self.q, self.log2_e, self.procedure, self.reps, self.mean_ops, self.min_ops, self.max_ops, self.mean[0], self.mean[1], self.mean[2], self.mean[3], self.mean_micros
        )
    }
}

struct Tally {
    counts: Vec<OpCounts>,
    micros: Vec<f64>,
}

impl Tally {
    fn new() -> Tally {
        Tally { counts: Vec::new(), micros: Vec::new() }
    }

    fn measure<T>(&mut self, x: &BlackBox, f: impl FnOnce() -> T) -> T {
        let before = x.counts();
        let start = Instant::now();
        let r = f();
        self.micros.push(start.elapsed().as_secs_f64() * 1e6);
        self.counts.push(x.counts().since(&before));
        r
    }

    fn row(&self, q: u64, log2_e: f64, procedure: &'static str) -> BenchRow {
        let n = self.counts.len().max(1) as f64;
        let sum = |f: fn(&OpCounts) -> u64| self.counts.iter().map(f).sum::<u64>() as f64 / n;
        let mean = [sum(|c| c.mul), sum(|c| c.inv), sum(|c| c.eq), sum(|c| c.random)];
        let totals: Vec<u64> = self.counts.iter().map(|c| c.mul + c.inv + c.eq + c.random).collect();
        BenchRow {
            q,
            log2_e,
            procedure,
            reps: self.counts.len(),
            mean_ops: mean.iter().sum(),
            min_ops: totals.iter().copied().min().unwrap_or(0),
            max_ops: totals.iter().copied().max().unwrap_or(0),
            mean,
            mean_micros: self.micros.iter().sum::<f64>() / n,
        }
    }
}

fn ok<T>(r: SerendipityOutcome<T>) -> Option<T> {
    r.ok()
}

/// Benchmarks every procedure on the `PGL2(q)` pipeline for prime `q`.
pub fn bench_q(q: u64, kind: MatrixKind, seed: u64, conf: Confidence, reps: usize) -> Result<Vec<BenchRow>, PipelineError> {
    let field = ExplicitField::prime(q).map_err(|e| PipelineError::Spec(e.to_string()))?;
    let spec = GroupSpec::new(kind, &field, seed);
    let c = coordinatize(&spec, seed, conf)?;
    bench_coordinatized(&c, q, reps)
}

pub fn bench_coordinatized(c: &Coordinatized, q: u64, reps: usize) -> Result<Vec<BenchRow>, PipelineError> {
    let k = &c.k;
    let x = k.black_box();
    let plane = k.plane();
    let engine = plane.engine();
    let p = c.characteristic();
    let log2_e = x.exponent().value.bits() as f64;
    let mut tallies: Vec<Tally> = PROCEDURES.iter().map(|_| Tally::new()).collect();
    let field_element = || -> Result<FieldElementK, PipelineError> { Ok(k.random_element()?) };
    for _ in 0..reps {
        let [inv_t, cent_t, reif_t, join_t, meet_t, add_t, mul_t, rho_t, neg_t, finv_t] = &mut tallies[..] else {
            unreachable!()
        };
        let s = inv_t.measure(x, || engine.find_involution())?;
        cent_t.measure(x, || engine.centralizer_samples(&s, 1));
        // reification of the common perpendicular of two involutions with odd, semisimple product
        let (r, t) = loop {
            let (r, t) = (engine.find_involution()?, engine.find_involution()?);
            let u = x.mul(&r, &t);
            if !x.has_even_order(&u) && !x.is_identity(&x.power_u64(&u, p)) {
                break (r, t);
            }
        };
        reif_t.measure(x, || engine.j_of(&r, &t))?;
        let (a, b) = (engine.find_involution()?, engine.find_involution()?);
        if x.eq(&a, &b) {
            continue;
        }
        let line = join_t.measure(x, || plane.join(&a, &b))?;
        let (c1, d1) = (engine.find_involution()?, engine.find_involution()?);
        if !x.eq(&c1, &d1) {
            let other = plane.join(&c1, &d1)?;
            if !plane.same_point(&line.pole, &other.pole) {
                meet_t.measure(x, || plane.meet(&line, &other))?;
            }
        }
        let (fa, fb) = (field_element()?, field_element()?);
        add_t.measure(x, || k.add_with(&fa, &fb, Policy::Traverse).map(ok))?;
        mul_t.measure(x, || k.mul_with(&fa, &fb, Policy::Traverse).map(ok))?;
        neg_t.measure(x, || k.neg(&fa));
        if !k.is_zero(&fa) {
            finv_t.measure(x, || k.inv(&fa))?;
        }
        let g = x.random();
        rho_t.measure(x, || rho(k, &g))?;
    }
    Ok(PROCEDURES.iter().zip(&tallies).map(|(p, t)| t.row(q, log2_e, p)).collect())
}

/// Checks `rows` of one procedure against `c log E log log E`, with `c` the
/// median of the observed ratios: every count stays below twice the envelope.
pub fn within_envelope(rows: &[BenchRow]) -> (bool, f64) {
    let shape = |r: &BenchRow| r.log2_e * r.log2_e.log2();
    let mut ratios: Vec<f64> = rows.iter().map(|r| r.mean_ops / shape(r)).collect();
    ratios.sort_by(|a, b| a.partial_cmp(b).expect("finite ratio"));
    let c = ratios[ratios.len() / 2];
    (rows.iter().all(|r| r.mean_ops <= 2.0 * c * shape(r)), c)
}
