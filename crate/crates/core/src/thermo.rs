//! Transfer operator, pressure, Gibbs and equilibrium measures.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::sft::{Level, SubshiftSpec, Word};

/// A locally constant potential of finite range, one value per admissible
/// r-word, evaluated as φ(ω) = values[ω_1..ω_r].
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    level: Level,
    values: Vec<f64>,
}

impl Potential {
    /// Values listed in lexicographic order of the admissible r-words.
    pub fn from_values(spec: &SubshiftSpec, range: usize, values: Vec<f64>) -> Result<Self> {
        if range == 0 {
            return Err(Error::InvalidValue("range must be positive"));
        }
        let level = Level::new(spec, range);
        if values.len() != level.len() {
            return Err(Error::ShapeMismatch {
                expected: level.len(),
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidValue("potential value is not finite"));
        }
        Ok(Potential { level, values })
    }

    /// One entry per admissible r-word, in any order. Missing, duplicate or
    /// inadmissible words are rejected.
    pub fn from_entries(spec: &SubshiftSpec, range: usize, entries: &[(Word, f64)]) -> Result<Self> {
        if range == 0 {
            return Err(Error::InvalidValue("range must be positive"));
        }
        let level = Level::new(spec, range);
        let mut values = vec![f64::NAN; level.len()];
        for (w, v) in entries {
            let i = level.index_of(w.symbols()).ok_or(Error::Inadmissible)?;
            if !values[i].is_nan() {
                return Err(Error::InvalidValue("duplicate potential entry"));
            }
            values[i] = *v;
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::ShapeMismatch {
                expected: level.len(),
                found: entries.len(),
            });
        }
        Self::from_values(spec, range, values)
    }

    pub fn from_fn(spec: &SubshiftSpec, range: usize, f: impl Fn(&[u8]) -> f64) -> Result<Self> {
        let level = Level::new(spec, range);
        let values = level.words().iter().map(|w| f(w.symbols())).collect();
        Self::from_values(spec, range, values)
    }

    pub fn zero(spec: &SubshiftSpec) -> Self {
        Self::from_fn(spec, 1, |_| 0.0).expect("zero potential is valid")
    }

    /// φ(ω) = ln p_{ω_1}.
    pub fn bernoulli(spec: &SubshiftSpec, probs: &[f64]) -> Result<Self> {
        if probs.len() != spec.alphabet_size() {
            return Err(Error::ShapeMismatch {
                expected: spec.alphabet_size(),
                found: probs.len(),
            });
        }
        if probs.iter().any(|&p| p <= 0.0 || !p.is_finite()) {
            return Err(Error::InvalidValue("probabilities must be positive"));
        }
        Self::from_fn(spec, 1, |w| libm::log(probs[w[0] as usize]))
    }

    pub fn range(&self) -> usize {
        self.level.word_len()
    }

    pub fn words(&self) -> &[Word] {
        self.level.words()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn level(&self) -> &Level {
        &self.level
    }

    /// Value on any sequence with at least r symbols; only the first r are read.
    pub fn eval(&self, symbols: &[u8]) -> Result<f64> {
        let r = self.range();
        if symbols.len() < r {
            return Err(Error::InvalidValue("not enough symbols to evaluate"));
        }
        self.level
            .index_of(&symbols[..r])
            .map(|i| self.values[i])
            .ok_or(Error::Inadmissible)
    }

    pub fn scaled(&self, t: f64) -> Potential {
        Potential {
            level: self.level.clone(),
            values: self.values.iter().map(|v| v * t).collect(),
        }
    }

    /// The same function written on longer words.
    pub fn with_range(&self, spec: &SubshiftSpec, range: usize) -> Result<Potential> {
        if range < self.range() {
            return Err(Error::InvalidValue("cannot shorten the range"));
        }
        Potential::from_fn(spec, range, |w| self.eval(w).unwrap_or(f64::NAN))
    }

    fn constant_value(&self) -> Option<f64> {
        let c = self.values[0];
        self.values.iter().all(|&v| v == c).then_some(c)
    }
}

/// Which of the two measures a cylinder computation refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Measure {
    /// The conformal eigenmeasure μ_φ of the dual transfer operator.
    Eigen,
    /// The shift-invariant equilibrium measure ν_φ = h_φ μ_φ.
    Equilibrium,
}

/// Solver settings for [`solve_thermo`].
#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-13,
            max_iter: 100_000,
        }
    }
}

/// Position in the cylinder tree: the word is implicit, only what is needed
/// to extend it is kept.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cursor {
    pub len: usize,
    pub mass: f64,
    pub last: Option<u8>,
    state: usize,
}

#[derive(Clone, Debug)]
struct Transition {
    symbol: u8,
    next: usize,
    prob: f64,
}

/// Output of [`solve_thermo`].
#[derive(Clone, Debug)]
pub struct ThermoSolution {
    spec: SubshiftSpec,
    potential: Potential,
    pub pressure: f64,
    /// h_φ per admissible r-word, normalised so that ∫h dμ = 1.
    pub eigenfunction: Vec<f64>,
    /// μ_φ masses of the r-cylinders.
    pub eigenmeasure: Vec<f64>,
    /// ν_φ masses of the r-cylinders.
    pub equilibrium: Vec<f64>,
    pub entropy: f64,
    pub gibbs_c: f64,
    pub beta: f64,
    pub gamma: f64,
    pub residual: f64,
    pub iterations: usize,
    levels: Vec<Level>,
    // masses[kind][len][index] for len <= r
    masses: [Vec<Vec<f64>>; 2],
    // child links for words shorter than r
    child_links: Vec<Vec<Vec<(u8, usize)>>>,
    kernel: Vec<Vec<Transition>>,
    normalized: Potential,
}

fn predecessor_lists(spec: &SubshiftSpec, level: &Level) -> Vec<Vec<usize>> {
    let r = level.word_len();
    level
        .words()
        .iter()
        .map(|w| {
            let s = w.symbols();
            spec.predecessors(s[0])
                .map(|a| {
                    let mut v = Vec::with_capacity(r);
                    v.push(a);
                    v.extend_from_slice(&s[..r - 1]);
                    level.index_of(&v).expect("preimage word is admissible")
                })
                .collect()
        })
        .collect()
}

/// (L_φ f)(w) = Σ_a e^{φ(a w_1..w_{r-1})} f(a w_1..w_{r-1}), exact on r-word functions.
pub fn transfer_apply(spec: &SubshiftSpec, potential: &Potential, f: &[f64]) -> Result<Vec<f64>> {
    let level = potential.level();
    if f.len() != level.len() {
        return Err(Error::ShapeMismatch {
            expected: level.len(),
            found: f.len(),
        });
    }
    let pre = predecessor_lists(spec, level);
    Ok(pre
        .iter()
        .map(|p| {
            p.iter()
                .map(|&j| libm::exp(potential.values[j]) * f[j])
                .sum()
        })
        .collect())
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| f64::max(m, libm::fabs(*x)))
}

/// Computes pressure, eigenfunction, eigenmeasure and equilibrium measure
/// by power iteration on the exact r-word transfer matrix.
pub fn solve_thermo(
    spec: &SubshiftSpec,
    potential: &Potential,
    opts: SolveOptions,
) -> Result<ThermoSolution> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidValue("tolerance must be positive"));
    }
    if potential.level().word_len() != potential.range()
        || potential.words() != Level::new(spec, potential.range()).words()
    {
        return Err(Error::ShapeMismatch {
            expected: spec.count_words(potential.range()) as usize,
            found: potential.values.len(),
        });
    }
    // A constant potential only shifts the pressure.
    let shift = potential.constant_value();
    let work = match shift {
        Some(_) => potential.scaled(0.0),
        None => potential.clone(),
    };
    let r = work.range();
    let level = work.level().clone();
    let n = level.len();
    let pre = predecessor_lists(spec, &level);
    let weight: Vec<f64> = work.values.iter().map(|&v| libm::exp(v)).collect();
    // successor lists: v -> all w with v in pre(w)
    let mut succ = vec![Vec::new(); n];
    for (i, p) in pre.iter().enumerate() {
        for &j in p {
            succ[j].push(i);
        }
    }
    let apply = |h: &[f64]| -> Vec<f64> {
        pre.iter()
            .map(|p| p.iter().map(|&j| weight[j] * h[j]).sum())
            .collect()
    };
    let apply_dual = |m: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|j| weight[j] * succ[j].iter().map(|&i| m[i]).sum::<f64>())
            .collect()
    };

    let mut h = vec![1.0; n];
    let mut m = vec![1.0 / n as f64; n];
    let mut iterations = 0;
    let mut converged = false;
    let mut change = f64::INFINITY;
    while iterations < opts.max_iter {
        iterations += 1;
        let mut h2 = apply(&h);
        let s = sup_norm(&h2);
        h2.iter_mut().for_each(|x| *x /= s);
        let mut m2 = apply_dual(&m);
        let t: f64 = m2.iter().sum();
        m2.iter_mut().for_each(|x| *x /= t);
        let dh = h2.iter().zip(&h).map(|(a, b)| libm::fabs(a - b)).fold(0.0, f64::max);
        let dm = m2.iter().zip(&m).map(|(a, b)| libm::fabs(a - b)).sum::<f64>();
        change = dh.max(dm);
        h = h2;
        m = m2;
        if change <= opts.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            iterations,
            residual: change,
        });
    }
    let lh = apply(&h);
    let mh: f64 = m.iter().zip(&h).map(|(a, b)| a * b).sum();
    let lambda = m.iter().zip(&lh).map(|(a, b)| a * b).sum::<f64>() / mh;
    h.iter_mut().for_each(|x| *x /= mh);
    let lh = apply(&h);
    let res_h = lh
        .iter()
        .zip(&h)
        .map(|(a, b)| libm::fabs(a - lambda * b))
        .fold(0.0, f64::max);
    let lm = apply_dual(&m);
    let res_m: f64 = lm.iter().zip(&m).map(|(a, b)| libm::fabs(a - lambda * b)).sum();
    let residual = res_h.max(res_m);

    let pressure = libm::log(lambda) + shift.unwrap_or(0.0);
    let mut nu: Vec<f64> = h.iter().zip(&m).map(|(a, b)| a * b).collect();
    let total: f64 = nu.iter().sum();
    nu.iter_mut().for_each(|x| *x /= total);

    // forward kernel on r-words: Q(b|u) = λ^{-1} e^{φ(u)} μ[u_2..u_r b] / μ[u]
    let kernel: Vec<Vec<Transition>> = level
        .words()
        .iter()
        .enumerate()
        .map(|(i, u)| {
            let s = u.symbols();
            let mut row: Vec<Transition> = spec
                .followers(Some(s[r - 1]))
                .map(|b| {
                    let mut v = s[1..].to_vec();
                    v.push(b);
                    let next = level.index_of(&v).expect("shifted word is admissible");
                    Transition {
                        symbol: b,
                        next,
                        prob: weight[i] * m[next] / (lambda * m[i]),
                    }
                })
                .collect();
            let t: f64 = row.iter().map(|t| t.prob).sum();
            row.iter_mut().for_each(|x| x.prob /= t);
            row
        })
        .collect();

    let levels: Vec<Level> = (0..=r).map(|k| Level::new(spec, k)).collect();
    let aggregate = |top: &[f64]| -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new(); r + 1];
        out[r] = top.to_vec();
        for k in (0..r).rev() {
            let mut v = vec![0.0; levels[k].len()];
            for (j, w) in levels[k + 1].words().iter().enumerate() {
                let i = levels[k].index_of(&w.symbols()[..k]).unwrap();
                v[i] += out[k + 1][j];
            }
            out[k] = v;
        }
        out
    };
    let masses = [aggregate(&m), aggregate(&nu)];
    let child_links: Vec<Vec<Vec<(u8, usize)>>> = (0..r)
        .map(|k| {
            levels[k]
                .words()
                .iter()
                .map(|w| {
                    spec.followers(w.last())
                        .map(|b| (b, levels[k + 1].index_of(w.child(b).symbols()).unwrap()))
                        .collect()
                })
                .collect()
        })
        .collect();

    let mean_phi: f64 = potential.values.iter().zip(&nu).map(|(a, b)| a * b).sum();
    let entropy = pressure - mean_phi;

    // φ̃(y) = φ(y_1..y_r) - P + ln h(y_1..y_r) - ln h(y_2..y_{r+1})
    let normalized = Potential::from_fn(spec, r + 1, |y| {
        let a = level.index_of(&y[..r]).unwrap();
        let b = level.index_of(&y[1..]).unwrap();
        potential.values[a] - pressure + libm::log(h[a]) - libm::log(h[b])
    })?;
    let sup = normalized.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let inf = normalized.values.iter().copied().fold(f64::INFINITY, f64::min);

    let mut sol = ThermoSolution {
        spec: spec.clone(),
        potential: potential.clone(),
        pressure,
        eigenfunction: h,
        eigenmeasure: m,
        equilibrium: nu,
        entropy,
        gibbs_c: f64::NAN,
        beta: sup / 2.0,
        gamma: inf,
        residual,
        iterations,
        levels,
        masses,
        child_links,
        kernel,
        normalized,
    };
    let depth = 2 * r + spec.primitivity_exponent();
    let mut worst: f64 = 1.0;
    for kind in [Measure::Eigen, Measure::Equilibrium] {
        let (lo, hi) = sol.gibbs_ratio_range(kind, depth);
        worst = worst.max(hi).max(1.0 / lo);
    }
    sol.gibbs_c = 1.1 * worst;
    Ok(sol)
}

fn slot(kind: Measure) -> usize {
    match kind {
        Measure::Eigen => 0,
        Measure::Equilibrium => 1,
    }
}

impl ThermoSolution {
    pub fn spec(&self) -> &SubshiftSpec {
        &self.spec
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn range(&self) -> usize {
        self.potential.range()
    }

    /// e^P, the leading eigenvalue of the transfer operator.
    pub fn lambda(&self) -> f64 {
        libm::exp(self.pressure)
    }

    /// The cursor of the empty word.
    pub fn root(&self) -> Cursor {
        Cursor {
            len: 0,
            mass: 1.0,
            last: None,
            state: 0,
        }
    }

    /// Calls `f(symbol, child)` for each child in ascending symbol order.
    #[inline]
    pub fn for_each_child(&self, kind: Measure, c: &Cursor, mut f: impl FnMut(u8, Cursor)) {
        let r = self.range();
        if c.len < r {
            let masses = &self.masses[slot(kind)][c.len + 1];
            for &(b, j) in &self.child_links[c.len][c.state] {
                f(
                    b,
                    Cursor {
                        len: c.len + 1,
                        mass: masses[j],
                        last: Some(b),
                        state: j,
                    },
                );
            }
        } else {
            for t in &self.kernel[c.state] {
                f(
                    t.symbol,
                    Cursor {
                        len: c.len + 1,
                        mass: c.mass * t.prob,
                        last: Some(t.symbol),
                        state: t.next,
                    },
                );
            }
        }
    }

    pub fn children(&self, kind: Measure, c: &Cursor) -> Vec<(u8, Cursor)> {
        let mut out = Vec::with_capacity(self.spec.alphabet_size());
        self.for_each_child(kind, c, |b, k| out.push((b, k)));
        out
    }

    pub fn child(&self, kind: Measure, c: &Cursor, symbol: u8) -> Result<Cursor> {
        let mut found = None;
        self.for_each_child(kind, c, |b, k| {
            if b == symbol {
                found = Some(k)
            }
        });
        found.ok_or(Error::Inadmissible)
    }

    pub fn cursor(&self, kind: Measure, word: &Word) -> Result<Cursor> {
        let mut c = self.root();
        for &s in word.symbols() {
            c = self.child(kind, &c, s)?;
        }
        Ok(c)
    }

    /// μ[x] or ν[x] for any admissible word.
    pub fn cylinder_mass(&self, word: &Word, kind: Measure) -> Result<f64> {
        self.cursor(kind, word).map(|c| c.mass)
    }

    /// Masses of all admissible k-words in lexicographic order.
    pub fn level_masses(&self, kind: Measure, k: usize) -> Vec<f64> {
        let mut out = Vec::new();
        self.walk(kind, k, &mut |_, c| out.push(c.mass));
        out
    }

    /// Depth-first lexicographic walk over all words of length `k`.
    pub fn walk(&self, kind: Measure, k: usize, f: &mut dyn FnMut(&[u8], &Cursor)) {
        let mut buf = Vec::with_capacity(k);
        self.walk_rec(kind, &self.root(), k, &mut buf, f);
    }

    fn walk_rec(
        &self,
        kind: Measure,
        c: &Cursor,
        k: usize,
        buf: &mut Vec<u8>,
        f: &mut dyn FnMut(&[u8], &Cursor),
    ) {
        if c.len == k {
            f(buf, c);
            return;
        }
        for (b, ch) in self.children(kind, c) {
            buf.push(b);
            self.walk_rec(kind, &ch, k, buf, f);
            buf.pop();
        }
    }

    /// The zero-pressure normalized potential of range r+1.
    pub fn normalized_potential(&self) -> &Potential {
        &self.normalized
    }

    /// Extremes of μ[x] / e^{S_kφ(ω) - kP} over |x| ≤ depth and every
    /// continuation ω of x fixing the values of S_kφ.
    pub fn gibbs_ratio_range(&self, kind: Measure, depth: usize) -> (f64, f64) {
        let r = self.range();
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        let mut buf = Vec::new();
        self.gibbs_rec(kind, &self.root(), depth, r, &mut buf, &mut lo, &mut hi);
        (lo, hi)
    }

    #[allow(clippy::too_many_arguments)]
    fn gibbs_rec(
        &self,
        kind: Measure,
        c: &Cursor,
        depth: usize,
        r: usize,
        buf: &mut Vec<u8>,
        lo: &mut f64,
        hi: &mut f64,
    ) {
        if c.len >= 1 {
            let k = c.len;
            let mut tails = vec![Vec::new()];
            for _ in 0..r - 1 {
                let mut next = Vec::new();
                for t in tails {
                    let last = t.last().copied().or(buf.last().copied());
                    for b in self.spec.followers(last) {
                        let mut t2: Vec<u8> = t.clone();
                        t2.push(b);
                        next.push(t2);
                    }
                }
                tails = next;
            }
            for t in tails {
                let mut omega = buf.clone();
                omega.extend_from_slice(&t);
                let s: f64 = (0..k)
                    .map(|i| self.potential.eval(&omega[i..i + r]).unwrap())
                    .sum();
                let ratio = c.mass / libm::exp(s - k as f64 * self.pressure);
                *lo = lo.min(ratio);
                *hi = hi.max(ratio);
            }
        }
        if c.len == depth {
            return;
        }
        for (b, ch) in self.children(kind, c) {
            buf.push(b);
            self.gibbs_rec(kind, &ch, depth, r, buf, lo, hi);
            buf.pop();
        }
    }

    /// −Σ ν[x] ln ν[x] over the admissible k-words.
    pub fn block_entropy(&self, k: usize) -> f64 {
        self.level_masses(Measure::Equilibrium, k)
            .iter()
            .filter(|&&m| m > 0.0)
            .map(|&m| -m * libm::log(m))
            .sum()
    }

    /// Largest stationarity defect |Σ_a ν[a w] − ν[w]| over (r−1)-words w.
    pub fn stationarity_defect(&self) -> f64 {
        let r = self.range();
        let nu_r = &self.masses[1][r];
        let nu_short = &self.masses[1][r - 1];
        let mut acc = vec![0.0; nu_short.len()];
        for (j, w) in self.levels[r].words().iter().enumerate() {
            let i = self.levels[r - 1].index_of(&w.symbols()[1..]).unwrap();
            acc[i] += nu_r[j];
        }
        acc.iter()
            .zip(nu_short)
            .map(|(a, b)| libm::fabs(a - b))
            .fold(0.0, f64::max)
    }

    /// Var_ν(S_kφ), computed exactly through the Markov chain on r-words.
    pub fn birkhoff_variance(&self, k: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        let nu = &self.equilibrium;
        let phi = &self.potential.values;
        let mean: f64 = phi.iter().zip(nu).map(|(a, b)| a * b).sum();
        let centred: Vec<f64> = phi.iter().map(|v| v - mean).collect();
        let cov = |g: &[f64]| -> f64 {
            centred
                .iter()
                .zip(g)
                .zip(nu)
                .map(|((a, b), w)| a * b * w)
                .sum()
        };
        let mut g = centred.clone();
        let mut total = k as f64 * cov(&g);
        for d in 1..k {
            g = self
                .kernel
                .iter()
                .map(|row| row.iter().map(|t| t.prob * g[t.next]).sum())
                .collect();
            total += 2.0 * (k - d) as f64 * cov(&g);
        }
        total
    }

    /// ∫ f dν for a function of the first r symbols.
    pub fn integrate_r(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.equilibrium).map(|(a, b)| a * b).sum()
    }
}

/// Returns the normalized potential, failing if any value exceeds `slack`.
pub fn normalize_potential(solution: &ThermoSolution) -> Result<Potential> {
    let p = solution.normalized_potential();
    let sup = p.values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if sup > 1e-12 {
        return Err(Error::NonNegativeValue { value: sup });
    }
    Ok(p.clone())
}

/// Whether every normalized value is below zero by more than rounding noise.
pub fn strictly_negative(solution: &ThermoSolution) -> bool {
    solution.normalized_potential().values().iter().all(|&v| v < -1e-12)
}

/// S_kφ along x, using the periodic extension of x when trailing context
/// is missing.
pub fn birkhoff_sum(solution: &ThermoSolution, x: &Word, k: usize) -> Result<f64> {
    let spec = solution.spec();
    spec.check(x)?;
    if k == 0 {
        return Ok(0.0);
    }
    if x.is_empty() {
        return Err(Error::Inadmissible);
    }
    let r = solution.range();
    let need = k + r - 1;
    let s = x.symbols();
    let omega: Vec<u8> = (0..need.max(s.len())).map(|i| s[i % s.len()]).collect();
    if !spec.is_admissible(&omega) {
        return Err(Error::Inadmissible);
    }
    let pot = solution.potential();
    (0..k).map(|i| pot.eval(&omega[i..i + r])).sum()
}

/// One row of [`pressure_function`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PressurePoint {
    pub t: f64,
    pub p: f64,
    pub dp: f64,
    pub d2p: f64,
}

#[derive(Clone, Debug)]
pub struct PressureTable {
    pub points: Vec<PressurePoint>,
    /// Whether all sampled divided second differences are ≥ −1e−9.
    pub convex: bool,
}

/// p(t) = P(tφ), p'(t) = ∫φ dν_{tφ}, p''(t) by central differences of p'.
pub fn pressure_function(
    spec: &SubshiftSpec,
    potential: &Potential,
    ts: &[f64],
    opts: SolveOptions,
) -> Result<PressureTable> {
    let eps = 1e-4;
    let deriv = |t: f64| -> Result<(f64, f64)> {
        let s = solve_thermo(spec, &potential.scaled(t), opts)?;
        Ok((s.pressure, s.integrate_r(potential.values())))
    };
    let mut points = Vec::with_capacity(ts.len());
    for &t in ts {
        if !t.is_finite() {
            return Err(Error::InvalidValue("t must be finite"));
        }
        let (p, dp) = deriv(t)?;
        let (_, up) = deriv(t + eps)?;
        let (_, dn) = deriv(t - eps)?;
        points.push(PressurePoint {
            t,
            p,
            dp,
            d2p: (up - dn) / (2.0 * eps),
        });
    }
    let mut convex = true;
    for w in points.windows(3) {
        let s1 = (w[1].p - w[0].p) / (w[1].t - w[0].t);
        let s2 = (w[2].p - w[1].p) / (w[2].t - w[1].t);
        if s2 - s1 < -1e-9 {
            convex = false;
        }
    }
    Ok(PressureTable { points, convex })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sft::SubshiftSpec;

    fn w(s: &[u32]) -> Word {
        Word::from_one_based(s).unwrap()
    }

    fn golden() -> (SubshiftSpec, ThermoSolution) {
        let g = SubshiftSpec::golden_mean();
        let s = solve_thermo(&g, &Potential::zero(&g), SolveOptions::default()).unwrap();
        (g, s)
    }

    fn bernoulli() -> ThermoSolution {
        let f = SubshiftSpec::full(2).unwrap();
        let p = Potential::bernoulli(&f, &[0.3, 0.7]).unwrap();
        solve_thermo(&f, &p, SolveOptions::default()).unwrap()
    }

    #[test]
    fn transfer_examples() {
        let f = SubshiftSpec::full(2).unwrap();
        let out = transfer_apply(&f, &Potential::zero(&f), &[1.0, 1.0]).unwrap();
        assert_eq!(out, vec![2.0, 2.0]);
        let b = Potential::bernoulli(&f, &[0.3, 0.7]).unwrap();
        let out = transfer_apply(&f, &b, &[1.0, 1.0]).unwrap();
        assert!(out.iter().all(|v| (v - 1.0).abs() < 1e-15));
        let g = SubshiftSpec::golden_mean();
        let out = transfer_apply(&g, &Potential::zero(&g), &[1.0, 1.0]).unwrap();
        assert_eq!(out, vec![2.0, 1.0]);
        assert!(matches!(
            transfer_apply(&g, &Potential::zero(&g), &[1.0]),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn full_shift_uniform() {
        let f = SubshiftSpec::full(3).unwrap();
        let s = solve_thermo(&f, &Potential::zero(&f), SolveOptions::default()).unwrap();
        let ln3 = libm::log(3.0);
        assert!((s.pressure - ln3).abs() < 1e-14);
        assert!((s.entropy - ln3).abs() < 1e-14);
        let m = s.cylinder_mass(&w(&[1, 3, 2]), Measure::Equilibrium).unwrap();
        assert!((m - 1.0 / 27.0).abs() < 1e-15);
    }

    #[test]
    fn golden_mean_parry() {
        let (_, s) = golden();
        let phi = (1.0 + libm::sqrt(5.0)) / 2.0;
        assert!((s.pressure - libm::log(phi)).abs() < 1e-12);
        assert!((s.entropy - s.pressure).abs() < 1e-12);
        // Parry: ν[1] = φ²/(1+φ²)
        let nu1 = s.cylinder_mass(&w(&[1]), Measure::Equilibrium).unwrap();
        assert!((nu1 - phi * phi / (1.0 + phi * phi)).abs() < 1e-12);
        assert_eq!(
            s.cylinder_mass(&w(&[2, 2]), Measure::Equilibrium),
            Err(Error::Inadmissible)
        );
        // transitions 1->1 with prob 1/φ, 1->2 with 1/φ², 2->1 with 1
        let p11 = s.cylinder_mass(&w(&[1, 1]), Measure::Equilibrium).unwrap() / nu1;
        assert!((p11 - 1.0 / phi).abs() < 1e-12);
    }

    #[test]
    fn bernoulli_examples() {
        let s = bernoulli();
        assert!(s.pressure.abs() < 1e-14);
        let m = s.cylinder_mass(&w(&[1, 2, 2]), Measure::Equilibrium).unwrap();
        assert!((m - 0.147).abs() < 1e-15);
        let h = -0.3 * libm::log(0.3) - 0.7 * libm::log(0.7);
        assert!((s.entropy - h).abs() < 1e-14);
        assert_eq!(s.cylinder_mass(&Word::empty(), Measure::Eigen).unwrap(), 1.0);
        let n = normalize_potential(&s).unwrap();
        assert_eq!(n.range(), 2);
        assert!((s.gamma - libm::log(0.3)).abs() < 1e-13);
        assert!((s.beta - libm::log(0.7) / 2.0).abs() < 1e-13);
    }

    #[test]
    fn normalized_uniform_and_golden() {
        let f = SubshiftSpec::full(2).unwrap();
        let s = solve_thermo(&f, &Potential::zero(&f), SolveOptions::default()).unwrap();
        let n = normalize_potential(&s).unwrap();
        assert!(n.values().iter().all(|v| (v + libm::log(2.0)).abs() < 1e-14));
        let (g, s) = golden();
        let n = normalize_potential(&s).unwrap();
        let one = transfer_apply(&g, &n, &vec![1.0; n.values().len()]).unwrap();
        assert!(one.iter().all(|v| (v - 1.0).abs() < 1e-12));
        // φ̃(1,2) = ln P(prev = 1 | next = 2) = 0, so sup φ̃ = 0
        assert!(s.beta.abs() < 1e-12);
        assert!(!strictly_negative(&s));
    }

    #[test]
    fn birkhoff_examples() {
        let s = bernoulli();
        assert_eq!(birkhoff_sum(&s, &w(&[1, 2]), 0).unwrap(), 0.0);
        let v = birkhoff_sum(&s, &w(&[1, 2]), 2).unwrap();
        assert!((v - (libm::log(0.3) + libm::log(0.7))).abs() < 1e-15);
        let (_, g) = golden();
        assert_eq!(birkhoff_sum(&g, &w(&[1, 2]), 5).unwrap(), 0.0);
    }

    #[test]
    fn bernoulli_variance_is_iid() {
        let s = bernoulli();
        let (a, b) = (libm::log(0.3), libm::log(0.7));
        let mean = 0.3 * a + 0.7 * b;
        let var1 = 0.3 * (a - mean) * (a - mean) + 0.7 * (b - mean) * (b - mean);
        assert!((s.birkhoff_variance(7) - 7.0 * var1).abs() < 1e-12);
    }

    #[test]
    fn pressure_function_bernoulli() {
        let f = SubshiftSpec::full(2).unwrap();
        let p = Potential::bernoulli(&f, &[0.3, 0.7]).unwrap();
        let t = pressure_function(&f, &p, &[0.5, 1.0, 1.5], SolveOptions::default()).unwrap();
        let at1 = t.points[1];
        assert!(at1.p.abs() < 1e-13);
        let h = -0.3 * libm::log(0.3) - 0.7 * libm::log(0.7);
        assert!((at1.dp + h).abs() < 1e-12);
        assert!(t.convex);
        // closed form p(t) = ln(0.3^t + 0.7^t)
        let pt = |t: f64| libm::log(libm::pow(0.3, t) + libm::pow(0.7, t));
        assert!((t.points[0].p - pt(0.5)).abs() < 1e-12);
        let fd = (pt(1.5 + 1e-5) - 2.0 * pt(1.5) + pt(1.5 - 1e-5)) / 1e-10;
        assert!((t.points[2].d2p - fd).abs() < 1e-4);
    }

    #[test]
    fn potential_entry_validation() {
        let g = SubshiftSpec::golden_mean();
        let ok = Potential::from_entries(&g, 2, &[(w(&[1, 1]), 0.1), (w(&[1, 2]), 0.2), (w(&[2, 1]), 0.3)]);
        assert!(ok.is_ok());
        let missing = Potential::from_entries(&g, 2, &[(w(&[1, 1]), 0.1)]);
        assert!(matches!(missing, Err(Error::ShapeMismatch { .. })));
        let bad = Potential::from_entries(&g, 2, &[(w(&[2, 2]), 0.1)]);
        assert_eq!(bad, Err(Error::Inadmissible));
        let nan = Potential::from_values(&g, 1, vec![0.0, f64::NAN]);
        assert!(matches!(nan, Err(Error::InvalidValue(_))));
    }

    #[test]
    fn no_convergence_reported() {
        let g = SubshiftSpec::golden_mean();
        let opts = SolveOptions { tol: 1e-13, max_iter: 3 };
        assert!(matches!(
            solve_thermo(&g, &Potential::zero(&g), opts),
            Err(Error::NoConvergence { .. })
        ));
    }

    #[test]
    fn children_sum_to_parent() {
        let f = SubshiftSpec::full(3).unwrap();
        let p = Potential::from_fn(&f, 2, |w| 0.3 * w[0] as f64 - 0.2 * (w[1] as f64).powi(2)).unwrap();
        let s = solve_thermo(&f, &p, SolveOptions::default()).unwrap();
        for kind in [Measure::Eigen, Measure::Equilibrium] {
            for k in 0..5 {
                let parents = s.level_masses(kind, k);
                let kids = s.level_masses(kind, k + 1);
                for (i, m) in parents.iter().enumerate() {
                    let sum: f64 = kids[3 * i..3 * i + 3].iter().sum();
                    assert!((sum - m).abs() < 1e-12);
                }
            }
        }
        assert!(s.stationarity_defect() < 1e-12);
    }
}
