//! Connes' distance between cylinder states, the commutator norm it is
//! built on, and the transport distance it is compared with.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, spectral_norm, Matrix};
use crate::sft::{LevelFunction, SubshiftSpec, Word};
use crate::spectral::DiracModel;
use crate::thermo::{Measure, ThermoSolution};

/// A probability vector over the admissible k-words, read as the state
/// whose density is constant on each k-cylinder.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub level: usize,
    pub weights: Vec<f64>,
}

impl State {
    pub fn new(spec: &SubshiftSpec, level: usize, weights: Vec<f64>) -> Result<Self> {
        let n = spec.count_words(level) as usize;
        if weights.len() != n {
            return Err(Error::ShapeMismatch {
                expected: n,
                found: weights.len(),
            });
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidValue("weights must be nonnegative"));
        }
        if libm::fabs(weights.iter().sum::<f64>() - 1.0) > 1e-12 {
            return Err(Error::InvalidValue("weights must sum to one"));
        }
        Ok(State { level, weights })
    }

    /// All mass on one cylinder.
    pub fn point(spec: &SubshiftSpec, word: &Word) -> Result<Self> {
        spec.check(word)?;
        let words = spec.enumerate_cylinders(word.len());
        let weights = words
            .iter()
            .map(|w| if w == word { 1.0 } else { 0.0 })
            .collect();
        Ok(State {
            level: word.len(),
            weights,
        })
    }

    /// The same state on a finer level, splitting mass like the measure.
    pub fn lift(&self, sol: &ThermoSolution, measure: Measure, level: usize) -> Result<State> {
        if level < self.level {
            return Err(Error::LevelMismatch {
                expected: self.level,
                found: level,
            });
        }
        let coarse = sol.level_masses(measure, self.level);
        let fine = sol.level_masses(measure, level);
        let spec = sol.spec();
        let cw = spec.enumerate_cylinders(self.level);
        let fw = spec.enumerate_cylinders(level);
        let mut j = 0;
        let mut weights = Vec::with_capacity(fw.len());
        for w in &fw {
            while !cw[j].is_prefix_of(w) {
                j += 1;
            }
            let p = if coarse[j] > 0.0 {
                self.weights[j] * fine[weights.len()] / coarse[j]
            } else {
                0.0
            };
            weights.push(p);
        }
        Ok(State { level, weights })
    }

    /// p(a) for a function on the same level.
    pub fn evaluate(&self, a: &[f64]) -> f64 {
        dot(&self.weights, a)
    }

    /// Convex combination t·self + (1−t)·other.
    pub fn mix(&self, other: &State, t: f64) -> Result<State> {
        if self.level != other.level {
            return Err(Error::LevelMismatch {
                expected: self.level,
                found: other.level,
            });
        }
        Ok(State {
            level: self.level,
            weights: self
                .weights
                .iter()
                .zip(&other.weights)
                .map(|(a, b)| t * a + (1.0 - t) * b)
                .collect(),
        })
    }

    pub fn total_variation(&self, other: &State) -> f64 {
        0.5 * self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| libm::fabs(a - b))
            .sum::<f64>()
    }
}

/// [D, π(a)] for level-k functions a, in the orthonormal cylinder frame.
///
/// Basis vectors supported on deeper cylinders commute with π(a), so the
/// finite block is the whole commutator.
#[derive(Clone, Debug)]
pub struct Commutator {
    pub level: usize,
    pub d_hat: Matrix,
    masses: Vec<f64>,
}

impl Commutator {
    pub fn new(model: &DiracModel<'_>, level: usize) -> Result<Self> {
        let d_hat = model.level_operator(level)?;
        let masses = model.solution().level_masses(model.measure(), level);
        Ok(Commutator {
            level,
            d_hat,
            masses,
        })
    }

    pub fn dimension(&self) -> usize {
        self.masses.len()
    }

    fn check(&self, a: &[f64]) -> Result<()> {
        if a.len() != self.dimension() {
            return Err(Error::ShapeMismatch {
                expected: self.dimension(),
                found: a.len(),
            });
        }
        Ok(())
    }

    /// C_{ij} = D̂_{ij} (a_j − a_i).
    pub fn matrix(&self, a: &[f64]) -> Result<Matrix> {
        self.check(a)?;
        let n = self.dimension();
        Ok(Matrix::from_fn(n, n, |i, j| self.d_hat[(i, j)] * (a[j] - a[i])))
    }

    pub fn norm(&self, a: &[f64]) -> Result<f64> {
        Ok(spectral_norm(&self.matrix(a)?).0)
    }

    /// The norm and a subgradient g_z = v_z (D̂u)_z − u_z (D̂v)_z from a top
    /// singular pair C v = σ u.
    pub fn norm_and_subgradient(&self, a: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (s, u, v) = spectral_norm(&self.matrix(a)?);
        let du = self.d_hat.mul_vec(&u);
        let dv = self.d_hat.mul_vec(&v);
        let g = (0..a.len()).map(|z| v[z] * du[z] - u[z] * dv[z]).collect();
        Ok((s, g))
    }

    /// ∫ a dm over the level.
    pub fn mean(&self, a: &[f64]) -> f64 {
        dot(&self.masses, a)
    }
}

/// ‖[D, π(a)]‖ for a level function.
pub fn commutator_norm(model: &DiracModel<'_>, a: &LevelFunction) -> Result<f64> {
    Commutator::new(model, a.level)?.norm(&a.values)
}

/// The feasible function reaching a lower bound.
#[derive(Clone, Debug, PartialEq)]
pub struct LipschitzCertificate {
    pub level: usize,
    /// Scaled so that the commutator norm is one.
    pub function: Vec<f64>,
    pub commutator_norm: f64,
    pub objective: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct OptParams {
    pub restarts: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for OptParams {
    fn default() -> Self {
        OptParams {
            restarts: 32,
            iterations: 1000,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConnesEstimate {
    /// Certified lower bound on d(p, q).
    pub value: f64,
    pub certificate: LipschitzCertificate,
    /// Largest ‖a − ∫a dm‖_∞ over all normalised iterates.
    pub max_oscillation: f64,
    pub iterates: usize,
}

/// Back onto p(a) − q(a) = 1 with zero sum: by scaling when the
/// objective is positive, which keeps the ratio, else along ℓ.
fn project(a: &mut [f64], ell: &[f64], ell_sq: f64) {
    let n = a.len() as f64;
    let mean = a.iter().sum::<f64>() / n;
    a.iter_mut().for_each(|x| *x -= mean);
    let t = dot(ell, a);
    if t > 1e-9 * libm::sqrt(ell_sq) * norm2(a) {
        a.iter_mut().for_each(|x| *x /= t);
    } else {
        let shift = (1.0 - t) / ell_sq;
        a.iter_mut().zip(ell).for_each(|(x, l)| *x += shift * l);
    }
}

fn project_tangent(g: &mut [f64], ell: &[f64], ell_sq: f64) {
    let n = g.len() as f64;
    let mean = g.iter().sum::<f64>() / n;
    g.iter_mut().for_each(|x| *x -= mean);
    let c = dot(ell, g) / ell_sq;
    g.iter_mut().zip(ell).for_each(|(x, l)| *x -= c * l);
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u = |r: &mut ChaCha8Rng| ((r.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
    let (a, b) = (u(rng), u(rng));
    libm::sqrt(-2.0 * libm::log(a)) * libm::cos(2.0 * core::f64::consts::PI * b)
}

/// Lower bound on d(p, q) at level `k` by projected subgradient descent on
/// ‖[D, π(a)]‖ over the plane p(a) − q(a) = 1, ∫ a = 0.
///
/// `warm` seeds the first restart with a level-k function.
pub fn connes_distance(
    model: &DiracModel<'_>,
    p: &State,
    q: &State,
    k: usize,
    params: OptParams,
    warm: Option<&[f64]>,
) -> Result<ConnesEstimate> {
    let sol = model.solution();
    let pk = p.lift(sol, model.measure(), k)?;
    let qk = q.lift(sol, model.measure(), k)?;
    let ell: Vec<f64> = pk.weights.iter().zip(&qk.weights).map(|(a, b)| a - b).collect();
    let ell_sq = dot(&ell, &ell);
    if ell_sq < 1e-28 {
        return Err(Error::NoAscent);
    }
    let op = Commutator::new(model, k)?;
    let n = op.dimension();
    let scale = 1.0 / libm::sqrt(ell_sq);
    let mut best: Option<(f64, Vec<f64>, f64)> = None;
    let mut max_osc: f64 = 0.0;
    let mut iterates = 0;
    for restart in 0..params.restarts.max(1) {
        let mut a: Vec<f64> = match (restart, warm) {
            (0, Some(w)) => {
                if w.len() != n {
                    return Err(Error::ShapeMismatch {
                        expected: n,
                        found: w.len(),
                    });
                }
                w.to_vec()
            }
            (0, None) => ell.clone(),
            _ => {
                let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ (restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
                let mut v: Vec<f64> = (0..n).map(|_| gaussian(&mut rng) * scale).collect();
                v.iter_mut().zip(&ell).for_each(|(x, l)| *x += l / ell_sq);
                v
            }
        };
        project(&mut a, &ell, ell_sq);
        for it in 0..=params.iterations {
            let (norm, mut g) = op.norm_and_subgradient(&a)?;
            iterates += 1;
            if norm > 0.0 {
                let ratio = dot(&ell, &a) / norm;
                let feasible: Vec<f64> = a.iter().map(|x| x / norm).collect();
                let mean = op.mean(&feasible);
                let osc = feasible.iter().map(|x| libm::fabs(x - mean)).fold(0.0, f64::max);
                max_osc = max_osc.max(osc);
                if best.as_ref().is_none_or(|b| ratio > b.0) {
                    best = Some((ratio, feasible, norm));
                }
            }
            if it == params.iterations {
                break;
            }
            project_tangent(&mut g, &ell, ell_sq);
            let gn = norm2(&g);
            if gn == 0.0 {
                break;
            }
            let step = scale / libm::sqrt((it + 1) as f64);
            a.iter_mut().zip(&g).for_each(|(x, d)| *x -= step * d / gn);
            project(&mut a, &ell, ell_sq);
        }
    }
    let (value, function, _) = best.ok_or(Error::NoAscent)?;
    let commutator_norm = op.norm(&function)?;
    let objective = libm::fabs(dot(&ell, &function));
    let value = value.min(objective / commutator_norm);
    Ok(ConnesEstimate {
        value,
        certificate: LipschitzCertificate {
            level: k,
            function,
            commutator_norm,
            objective,
        },
        max_oscillation: max_osc,
        iterates,
    })
}

/// The function on level k+1 that equals `a` on level k.
pub fn refine(spec: &SubshiftSpec, level: usize, a: &[f64]) -> Vec<f64> {
    let coarse = spec.enumerate_cylinders(level);
    let mut out = Vec::new();
    for (w, &v) in coarse.iter().zip(a) {
        for _ in spec.followers(w.last()) {
            out.push(v);
        }
    }
    out
}

/// Distances at levels `from..=to`, each started from the previous
/// certificate so the sequence never decreases.
pub fn connes_distance_levels(
    model: &DiracModel<'_>,
    p: &State,
    q: &State,
    from: usize,
    to: usize,
    params: OptParams,
) -> Result<Vec<ConnesEstimate>> {
    let spec = model.solution().spec();
    let mut out: Vec<ConnesEstimate> = Vec::new();
    for k in from..=to {
        let warm = out
            .last()
            .map(|e| refine(spec, k - 1, &e.certificate.function));
        out.push(connes_distance(model, p, q, k, params, warm.as_deref())?);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProofConstants {
    pub c_prime: f64,
    pub bound: f64,
}

/// C' = l^{1/2} c e^{γ/2} and 2 l^{1/2} + C' (1 − e^{β/2})^{−1}.
pub fn proof_constants(sol: &ThermoSolution) -> Result<ProofConstants> {
    if sol.beta > -1e-12 {
        return Err(Error::NotNormalized { sup: 2.0 * sol.beta });
    }
    let l = libm::sqrt(sol.spec().alphabet_size() as f64);
    let c_prime = l * sol.gibbs_c * libm::exp(sol.gamma / 2.0);
    let bound = 2.0 * l + c_prime / (1.0 - libm::exp(sol.beta / 2.0));
    Ok(ProofConstants { c_prime, bound })
}

/// Ultrametric on level-k cylinders.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UltraMetric {
    /// 2^{−n}, n the common prefix length.
    Dyadic,
    /// ν[common prefix].
    Gibbs,
}

/// Optimal transport cost between two states of the same level.
pub fn monge_kantorovich(sol: &ThermoSolution, p: &State, q: &State, metric: UltraMetric) -> Result<f64> {
    if p.level != q.level {
        return Err(Error::LevelMismatch {
            expected: p.level,
            found: q.level,
        });
    }
    let k = p.level;
    let spec = sol.spec();
    let leaves = spec.enumerate_cylinders(k);
    if p.weights.len() != leaves.len() || q.weights.len() != leaves.len() {
        return Err(Error::ShapeMismatch {
            expected: leaves.len(),
            found: p.weights.len().min(q.weights.len()),
        });
    }
    let height = |w: &Word| -> Result<f64> {
        Ok(match metric {
            UltraMetric::Dyadic => libm::exp2(-(w.len() as f64)),
            UltraMetric::Gibbs => sol.cylinder_mass(w, Measure::Equilibrium)?,
        })
    };
    let mut total = 0.0;
    // differences aggregated bottom-up, level by level
    let mut diff: Vec<f64> = p.weights.iter().zip(&q.weights).map(|(a, b)| a - b).collect();
    let mut words = leaves;
    for n in (1..=k).rev() {
        let parents = spec.enumerate_cylinders(n - 1);
        let mut up = vec![0.0; parents.len()];
        let mut j = 0;
        for (w, d) in words.iter().zip(&diff) {
            while !parents[j].is_prefix_of(w) {
                j += 1;
            }
            let h_parent = height(&parents[j])?;
            let h_here = if n == k { 0.0 } else { height(w)? };
            total += 0.5 * (h_parent - h_here) * libm::fabs(*d);
            up[j] += d;
        }
        words = parents;
        diff = up;
    }
    Ok(total)
}

#[derive(Clone, Debug)]
pub struct WeakStarReport {
    pub distances: Vec<f64>,
    pub total_variation: Vec<f64>,
    /// Distances never grow by more than the noise floor.
    pub monotone: bool,
}

/// Connes distances from each state of a sequence to a limit state.
pub fn weak_star_consistency(
    model: &DiracModel<'_>,
    sequence: &[State],
    limit: &State,
    k: usize,
    params: OptParams,
) -> Result<WeakStarReport> {
    let mut distances = Vec::with_capacity(sequence.len());
    let mut total_variation = Vec::with_capacity(sequence.len());
    let sol = model.solution();
    let lk = limit.lift(sol, model.measure(), k)?;
    for s in sequence {
        let d = match connes_distance(model, s, limit, k, params, None) {
            Ok(e) => e.value,
            Err(Error::NoAscent) => 0.0,
            Err(e) => return Err(e),
        };
        distances.push(d);
        total_variation.push(s.lift(sol, model.measure(), k)?.total_variation(&lk));
    }
    let floor = 1e-6 * distances.iter().copied().fold(0.0, f64::max).max(1e-12);
    let monotone = distances.windows(2).all(|w| w[1] <= w[0] + floor);
    Ok(WeakStarReport {
        distances,
        total_variation,
        monotone,
    })
}
