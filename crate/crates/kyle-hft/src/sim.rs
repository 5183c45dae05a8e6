//! Seeded Monte-Carlo market simulator, the independent oracle for the
//! closed forms.
//!
//! Draws come in antithetic pairs: the second draw of a pair negates `v`
//! and the three noise-trader shocks and keeps `z` and the signal errors.
//! Every statistic is an OLS fit with pair-clustered standard errors (a
//! mean is a fit on a constant), computed in two passes over the same
//! deterministic draws: the first pass fixes the coefficients, the second
//! accumulates the clustered scores.
//!
//! Each shock component has its own ChaCha8 stream, so adding an HFT does
//! not move anyone else's draws, and each batch of pairs starts at a fixed
//! word offset, so results do not depend on how batches are scheduled.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::EquilibriumSolution;
use crate::error::{Error, Result};
use crate::shocks::{Flows, Lin, ShockSpace};

/// Smallest accepted draw count.
pub const MIN_DRAWS: usize = 10_000;
/// Pairs per batch.
const BATCH: usize = 1 << 14;
/// 32-bit words reserved per normal draw. The ziggurat sampler almost
/// always uses two; eight leaves room for rejections.
const WORDS_PER_DRAW: u128 = 8;
/// Largest regression dimension.
pub(crate) const KMAX: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    /// `|mean - target|` in standard errors.
    pub fn z_score(&self, target: f64) -> f64 {
        let d = (self.mean - target).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.se
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowStats {
    pub mean: Estimate,
    pub var: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimStats {
    pub n: usize,
    pub seed: u64,
    pub y1: FlowStats,
    pub y1plus: FlowStats,
    pub y2: FlowStats,
    pub p1: FlowStats,
    pub p1plus: FlowStats,
    pub p2: FlowStats,
    pub it_profit: Estimate,
    pub hft_profit_small: Option<Estimate>,
    pub hft_profit_rt: Option<Estimate>,
    pub noise_profit: Estimate,
    /// OLS of `v` on `y1`.
    pub lambda1: Estimate,
    /// OLS of `v - p1` on `y1+`.
    pub lambda1plus: Estimate,
    /// OLS of `v - p1` on `(y1+, y2)`.
    pub lambda21: Estimate,
    pub lambda22: Estimate,
}

/// One regression observation. Inactive observations are skipped.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Obs {
    pub active: bool,
    pub x: [f64; KMAX],
    pub y: f64,
}

/// Produces the observations of every regression for one draw of
/// standard-normal shocks (already scaled to their variances).
pub(crate) trait Observer: Sync {
    /// Regressor count of each regression.
    fn dims(&self) -> Vec<usize>;
    fn observe(&self, shocks: &[f64], out: &mut [Obs]);
}

#[derive(Debug, Clone)]
struct Acc {
    k: usize,
    xtx: [[f64; KMAX]; KMAX],
    xty: [f64; KMAX],
    n: usize,
}

impl Acc {
    fn new(k: usize) -> Acc {
        Acc { k, xtx: [[0.0; KMAX]; KMAX], xty: [0.0; KMAX], n: 0 }
    }

    fn add(&mut self, o: &Obs) {
        for a in 0..self.k {
            for b in 0..=a {
                self.xtx[a][b] += o.x[a] * o.x[b];
            }
            self.xty[a] += o.x[a] * o.y;
        }
        self.n += 1;
    }

    fn merge(&mut self, o: &Acc) {
        for a in 0..self.k {
            for b in 0..=a {
                self.xtx[a][b] += o.xtx[a][b];
            }
            self.xty[a] += o.xty[a];
        }
        self.n += o.n;
    }

    fn xtx(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.k, self.k, |a, b| if b <= a { self.xtx[a][b] } else { self.xtx[b][a] })
    }
}

#[derive(Debug, Clone)]
struct Meat {
    k: usize,
    m: [[f64; KMAX]; KMAX],
}

impl Meat {
    fn add(&mut self, g: &[f64; KMAX]) {
        for a in 0..self.k {
            for b in 0..=a {
                self.m[a][b] += g[a] * g[b];
            }
        }
    }

    fn merge(&mut self, o: &Meat) {
        for a in 0..self.k {
            for b in 0..=a {
                self.m[a][b] += o.m[a][b];
            }
        }
    }
}

/// Fitted coefficients with clustered standard errors.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Fit {
    pub beta: Vec<f64>,
    pub se: Vec<f64>,
    pub n: usize,
}

impl Fit {
    pub fn estimate(&self, i: usize) -> Estimate {
        Estimate { mean: self.beta[i], se: self.se[i] }
    }
}

/// Deterministic antithetic draws of the shock basis.
pub(crate) struct Sampler {
    seed: u64,
    sd: Vec<f64>,
    streams: Vec<u64>,
    negate: Vec<bool>,
    pairs: usize,
}

impl Sampler {
    pub fn new(space: &ShockSpace, n: usize, seed: u64) -> Sampler {
        let dim = space.dim();
        let mut streams = vec![0; dim];
        let mut negate = vec![false; dim];
        streams[ShockSpace::V] = 0;
        streams[ShockSpace::Z] = 1;
        streams[ShockSpace::U1] = 2;
        streams[space.u1plus()] = 3;
        streams[space.u2()] = 4;
        for j in 0..space.hfts {
            streams[space.eps(j)] = 8 + j as u64;
        }
        for i in [ShockSpace::V, ShockSpace::U1, space.u1plus(), space.u2()] {
            negate[i] = true;
        }
        Sampler { seed, sd: space.var.iter().map(|v| v.sqrt()).collect(), streams, negate, pairs: n / 2 }
    }

    pub fn draws(&self) -> usize {
        2 * self.pairs
    }

    fn batches(&self) -> usize {
        self.pairs.div_ceil(BATCH)
    }

    /// Raw normals of one batch, component-major.
    fn batch_normals(&self, b: usize) -> (usize, Vec<Vec<f64>>) {
        let len = BATCH.min(self.pairs - b * BATCH);
        let cols = self
            .streams
            .iter()
            .map(|&stream| {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_stream(stream);
                rng.set_word_pos(b as u128 * BATCH as u128 * WORDS_PER_DRAW);
                (0..len).map(|_| StandardNormal.sample(&mut rng)).collect()
            })
            .collect();
        (len, cols)
    }

    /// Calls `f(first, second)` on every pair of batch `b`.
    fn for_each_pair(&self, b: usize, mut f: impl FnMut(&[f64], &[f64])) {
        let (len, cols) = self.batch_normals(b);
        let dim = self.sd.len();
        let mut a = vec![0.0; dim];
        let mut m = vec![0.0; dim];
        for i in 0..len {
            for (c, col) in cols.iter().enumerate() {
                let x = col[i] * self.sd[c];
                a[c] = x;
                m[c] = if self.negate[c] { -x } else { x };
            }
            f(&a, &m);
        }
    }
}

/// Runs every regression of `obs` over the sampler's draws.
pub(crate) fn fit_all(sampler: &Sampler, obs: &impl Observer) -> Vec<Fit> {
    let dims = obs.dims();
    let r = dims.len();
    let batches = sampler.batches();

    // Pass 1: normal equations.
    let parts: Vec<Vec<Acc>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut acc: Vec<Acc> = dims.iter().map(|&k| Acc::new(k)).collect();
            let mut out = vec![Obs::default(); r];
            sampler.for_each_pair(b, |a, m| {
                for s in [a, m] {
                    obs.observe(s, &mut out);
                    for (acc, o) in acc.iter_mut().zip(&out) {
                        if o.active {
                            acc.add(o);
                        }
                    }
                }
            });
            acc
        })
        .collect();
    let mut total: Vec<Acc> = dims.iter().map(|&k| Acc::new(k)).collect();
    for part in &parts {
        for (t, p) in total.iter_mut().zip(part) {
            t.merge(p);
        }
    }
    let bread: Vec<Option<DMatrix<f64>>> = total.iter().map(|a| a.xtx().try_inverse()).collect();
    let beta: Vec<Vec<f64>> = total
        .iter()
        .zip(&bread)
        .map(|(a, inv)| match inv {
            Some(inv) => (inv * DVector::from_column_slice(&a.xty[..a.k])).iter().copied().collect(),
            None => vec![f64::NAN; a.k],
        })
        .collect();

    // Pass 2: clustered scores, one cluster per antithetic pair.
    let parts: Vec<Vec<Meat>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut meat: Vec<Meat> = dims.iter().map(|&k| Meat { k, m: [[0.0; KMAX]; KMAX] }).collect();
            let mut out = vec![Obs::default(); r];
            let mut g = vec![[0.0; KMAX]; r];
            sampler.for_each_pair(b, |a, m| {
                g.iter_mut().for_each(|x| *x = [0.0; KMAX]);
                for s in [a, m] {
                    obs.observe(s, &mut out);
                    for ((o, bt), gi) in out.iter().zip(&beta).zip(g.iter_mut()) {
                        if o.active {
                            let e = o.y - bt.iter().zip(&o.x).map(|(b, x)| b * x).sum::<f64>();
                            for (gk, xk) in gi.iter_mut().zip(&o.x).take(bt.len()) {
                                *gk += xk * e;
                            }
                        }
                    }
                }
                for (mt, gi) in meat.iter_mut().zip(&g) {
                    mt.add(gi);
                }
            });
            meat
        })
        .collect();
    let mut meat: Vec<Meat> = dims.iter().map(|&k| Meat { k, m: [[0.0; KMAX]; KMAX] }).collect();
    for part in &parts {
        for (t, p) in meat.iter_mut().zip(part) {
            t.merge(p);
        }
    }
    total
        .iter()
        .zip(&bread)
        .zip(&meat)
        .zip(beta)
        .map(|(((a, inv), mt), beta)| {
            let se = match inv {
                Some(inv) => {
                    let m = DMatrix::from_fn(a.k, a.k, |i, j| if j <= i { mt.m[i][j] } else { mt.m[j][i] });
                    let cov = inv * m * inv;
                    (0..a.k).map(|i| cov[(i, i)].max(0.0).sqrt()).collect()
                }
                None => vec![f64::NAN; a.k],
            };
            Fit { beta, se, n: a.n }
        })
        .collect()
}

/// Coefficient rows of the simulated quantities.
pub(crate) struct MarketRows {
    pub v: Lin,
    pub i1: Lin,
    pub i2: Lin,
    pub y1: Lin,
    pub y1plus: Lin,
    pub y2: Lin,
    pub p1: Lin,
    pub p1plus: Lin,
    pub p2: Lin,
    pub u1: Lin,
    pub u1plus: Lin,
    pub u2: Lin,
    /// `(x1, x2)` of the first HFT of each type present.
    pub small: Option<(Lin, Lin)>,
    pub rt: Option<(Lin, Lin)>,
}

impl MarketRows {
    pub fn new(sol: &EquilibriumSolution) -> (MarketRows, ShockSpace) {
        let p = &sol.params;
        let f = Flows::equilibrium(p, &sol.profile);
        let (p1, p1plus, p2) = f.prices(&sol.pricing);
        let n1 = p.n_type1();
        let small = (n1 > 0).then(|| (f.x1[0].clone(), f.x2[0].clone()));
        let rt = (p.n_type2() > 0).then(|| (f.x1[n1].clone(), f.x2[n1].clone()));
        let rows = MarketRows {
            v: f.v.clone(),
            i1: f.i1.clone(),
            i2: f.i2.clone(),
            y1: f.y1.clone(),
            y1plus: f.y1plus.clone(),
            y2: f.y2.clone(),
            p1,
            p1plus,
            p2,
            u1: f.u1.clone(),
            u1plus: f.u1plus.clone(),
            u2: f.u2.clone(),
            small,
            rt,
        };
        (rows, f.space)
    }

    /// IT's realized profit.
    pub fn it_profit(&self, s: &[f64]) -> f64 {
        let v = self.v.eval(s);
        (v - self.p1.eval(s)) * self.i1.eval(s) + (v - self.p2.eval(s)) * self.i2.eval(s)
    }
}

/// Regressions behind [`SimStats`].
struct MarketObserver<'a> {
    rows: &'a MarketRows,
}

const FLOWS: usize = 6;

impl Observer for MarketObserver<'_> {
    fn dims(&self) -> Vec<usize> {
        // Flow means, flow second moments, four profits, three impact fits.
        let mut d = vec![1; 2 * FLOWS + 4 + 2];
        d.push(2);
        d
    }

    fn observe(&self, s: &[f64], out: &mut [Obs]) {
        let r = self.rows;
        let v = r.v.eval(s);
        let flows = [r.y1.eval(s), r.y1plus.eval(s), r.y2.eval(s), r.p1.eval(s), r.p1plus.eval(s), r.p2.eval(s)];
        let [y1, y1p, y2, p1, p1p, p2] = flows;
        let constant = |y: f64| {
            let mut x = [0.0; KMAX];
            x[0] = 1.0;
            Obs { active: true, x, y }
        };
        for (i, f) in flows.iter().enumerate() {
            out[i] = constant(*f);
            out[FLOWS + i] = constant(f * f);
        }
        let hft = |pair: &Option<(Lin, Lin)>| match pair {
            Some((x1, x2)) => Obs { active: true, ..constant((v - p1p) * x1.eval(s) + (v - p2) * x2.eval(s)) },
            None => Obs::default(),
        };
        let b = 2 * FLOWS;
        out[b] = constant((v - p1) * r.i1.eval(s) + (v - p2) * r.i2.eval(s));
        out[b + 1] = hft(&r.small);
        out[b + 2] = hft(&r.rt);
        out[b + 3] = constant((v - p1) * r.u1.eval(s) + (v - p1p) * r.u1plus.eval(s) + (v - p2) * r.u2.eval(s));
        let one = |x0: f64, y: f64| {
            let mut x = [0.0; KMAX];
            x[0] = x0;
            Obs { active: true, x, y }
        };
        out[b + 4] = one(y1, v);
        out[b + 5] = one(y1p, v - p1);
        let mut x = [0.0; KMAX];
        x[0] = y1p;
        x[1] = y2;
        out[b + 6] = Obs { active: true, x, y: v - p1 };
    }
}

/// Simulates `n` rounds of the market at an accepted equilibrium.
///
/// ```
/// use kyle_hft::{simulate_market, solve_point, MarketParams};
///
/// let p = MarketParams::new(1.0, 1.0, 0.0, 0, 1).unwrap();
/// let sol = solve_point(&p, None, None);
/// let a = simulate_market(&sol, 20_000, 7).unwrap();
/// let b = simulate_market(&sol, 20_000, 7).unwrap();
/// assert_eq!(a, b);
/// // Dealers price v correctly: the regression slope is the impact.
/// assert!(a.lambda1.z_score(sol.pricing.lambda1) < 5.0);
/// ```
pub fn simulate_market(sol: &EquilibriumSolution, n: usize, seed: u64) -> Result<SimStats> {
    if !sol.is_equilibrium() {
        return Err(Error::RegimeMismatch("simulation needs an equilibrium".into()));
    }
    if n < MIN_DRAWS {
        return Err(Error::ParameterDomain(format!("need at least {MIN_DRAWS} draws, got {n}")));
    }
    let (rows, space) = MarketRows::new(sol);
    let sampler = Sampler::new(&space, n, seed);
    let fits = fit_all(&sampler, &MarketObserver { rows: &rows });
    let flow = |i: usize| {
        let mean = fits[i].estimate(0);
        FlowStats { mean, var: fits[FLOWS + i].beta[0] - mean.mean * mean.mean }
    };
    let b = 2 * FLOWS;
    Ok(SimStats {
        n: sampler.draws(),
        seed,
        y1: flow(0),
        y1plus: flow(1),
        y2: flow(2),
        p1: flow(3),
        p1plus: flow(4),
        p2: flow(5),
        it_profit: fits[b].estimate(0),
        hft_profit_small: rows.small.is_some().then(|| fits[b + 1].estimate(0)),
        hft_profit_rt: rows.rt.is_some().then(|| fits[b + 2].estimate(0)),
        noise_profit: fits[b + 3].estimate(0),
        lambda1: fits[b + 4].estimate(0),
        lambda1plus: fits[b + 5].estimate(0),
        lambda21: fits[b + 6].estimate(0),
        lambda22: fits[b + 6].estimate(1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::MarketParams;

    fn space(j: usize) -> ShockSpace {
        ShockSpace::new(&MarketParams::new(1.0, 1.0, 0.5, j, 0).unwrap(), 0.2)
    }

    #[test]
    fn adding_an_hft_keeps_other_draws() {
        let (a, b) = (Sampler::new(&space(1), 100, 3), Sampler::new(&space(2), 100, 3));
        let (_, ca) = a.batch_normals(0);
        let (_, cb) = b.batch_normals(0);
        assert_eq!(ca[0], cb[0]);
        assert_eq!(ca[3], cb[3]);
        // u2 sits at a different index but draws from the same stream.
        assert_eq!(ca[space(1).u2()], cb[space(2).u2()]);
    }

    #[test]
    fn antithetic_second_draw() {
        let s = Sampler::new(&space(1), 4, 9);
        let mut seen = Vec::new();
        s.for_each_pair(0, |a, m| seen.push((a.to_vec(), m.to_vec())));
        let (a, m) = &seen[0];
        assert_eq!(a[ShockSpace::V], -m[ShockSpace::V]);
        assert_eq!(a[ShockSpace::Z], m[ShockSpace::Z]);
        assert_eq!(a[3], m[3]);
    }

    struct Line;

    impl Observer for Line {
        fn dims(&self) -> Vec<usize> {
            vec![2]
        }
        fn observe(&self, s: &[f64], out: &mut [Obs]) {
            let mut x = [0.0; KMAX];
            x[0] = 1.0;
            x[1] = s[0];
            out[0] = Obs { active: true, x, y: 0.5 + 2.0 * s[0] + s[2] };
        }
    }

    #[test]
    fn ols_recovers_a_line() {
        let sampler = Sampler::new(&space(0), 40_000, 1);
        let fit = &fit_all(&sampler, &Line)[0];
        assert_eq!(fit.n, 40_000);
        // The response is odd in the negated shocks, so each pair pins the
        // intercept exactly.
        assert!((fit.beta[0] - 0.5).abs() < 1e-12);
        assert!((fit.beta[1] - 2.0).abs() < 5.0 * fit.se[1]);
        // Both halves of a pair carry the same score, so clustering doubles
        // the variance relative to 40k independent draws.
        assert!((fit.se[1] - 2f64.sqrt() / 200.0).abs() < 0.001);
    }
}
