//! The Dirac operator on the Haar basis, its singular value streams and
//! the dimension and trace diagnostics built on them.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::error::{Error, Result};
use crate::haar::{BasisLabel, HaarPlan};
use crate::linalg::{sym_eigen, Matrix, SymEigen};
use crate::sft::{LevelFunction, Word};
use crate::thermo::{Cursor, Measure, ThermoSolution};

/// Default cap on tree nodes visited by one stream.
pub const DEFAULT_NODE_BUDGET: usize = 10_000_000;

/// Eigenvalues of the root block below this are treated as the kernel.
const KERNEL_TOL: f64 = 1e-10;

/// D on the Haar basis of one measure.
#[derive(Clone, Debug)]
pub struct DiracModel<'a> {
    plan: HaarPlan<'a>,
    /// Root block in the frame μ[a]^{-1/2} χ_[a].
    pub root_block: Matrix,
    pub root_eigen: SymEigen,
    root_masses: Vec<f64>,
}

/// D built from the equilibrium measure.
pub fn build_dirac(solution: &ThermoSolution) -> DiracModel<'_> {
    build_dirac_with(solution, Measure::Equilibrium)
}

pub fn build_dirac_with(solution: &ThermoSolution, measure: Measure) -> DiracModel<'_> {
    let plan = HaarPlan::with_measure(solution, measure);
    let l = solution.spec().alphabet_size();
    let masses: Vec<f64> = (0..l as u8)
        .map(|a| {
            solution
                .cylinder_mass(&Word::new(vec![a]), measure)
                .expect("single symbols are admissible")
        })
        .collect();
    // D u_a = (1/m_a)⟨u_a, χ_a⟩χ_a − ⟨u_a, χ_Σ⟩χ_Σ with u_a = m_a^{-1/2} χ_a
    let s: Vec<f64> = masses.iter().map(|m| libm::sqrt(*m)).collect();
    let gram = |a: usize, b: usize| if a == b { masses[a] } else { 0.0 };
    let root_block = Matrix::from_fn(l, l, |i, j| {
        let direct = (gram(i, j) / s[i]) * (gram(j, j) / s[j]) / masses[j];
        direct - s[i] * s[j]
    });
    let root_eigen = sym_eigen(&root_block);
    DiracModel {
        plan,
        root_block,
        root_eigen,
        root_masses: masses,
    }
}

/// Where a singular value comes from.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum LabelKind {
    Root,
    Haar,
    Boundary,
}

/// Labels order by (word, index); the root block uses the empty word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpectralLabel {
    pub word: Word,
    pub index: usize,
    pub kind: LabelKind,
}

impl PartialOrd for SpectralLabel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SpectralLabel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.word
            .cmp(&other.word)
            .then(self.index.cmp(&other.index))
            .then(self.kind.cmp(&other.kind))
    }
}

impl fmt::Display for SpectralLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            LabelKind::Root => write!(f, "root#{}", self.index),
            LabelKind::Haar => write!(f, "{}#{}", self.word, self.index),
            LabelKind::Boundary => write!(f, "boundary:{}", self.word),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SingularValue {
    pub value: f64,
    pub label: SpectralLabel,
}

#[derive(Clone, Copy, Debug)]
pub struct StreamOptions {
    pub node_budget: usize,
    /// Also yield the rank-one value coming from basis vectors whose words
    /// are strict prefixes of the restriction.
    pub include_boundary: bool,
}

impl Default for StreamOptions {
    fn default() -> Self {
        StreamOptions {
            node_budget: DEFAULT_NODE_BUDGET,
            include_boundary: false,
        }
    }
}

enum Payload {
    Node(Cursor),
    Value(SpectralLabel),
}

struct Entry {
    key: f64,
    word: Word,
    index: usize,
    payload: Payload,
}

impl Entry {
    fn rank(&self) -> u8 {
        match self.payload {
            Payload::Node(_) => 1,
            Payload::Value(_) => 0,
        }
    }
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// Max-heap order: larger key first, nodes before values on ties so every
// value that could tie is materialised, then smaller labels first.
impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key
            .total_cmp(&other.key)
            .then(self.rank().cmp(&other.rank()))
            .then_with(|| other.word.cmp(&self.word))
            .then(other.index.cmp(&self.index))
    }
}

/// Singular values of π(χ_[x])|D|⁻¹ in nonincreasing order, ties by label.
pub struct SpectralStream<'m, 'a> {
    model: &'m DiracModel<'a>,
    heap: BinaryHeap<Entry>,
    restriction: Word,
    produced: usize,
    nodes: usize,
    budget: usize,
    boundary: Option<f64>,
}

impl<'a> DiracModel<'a> {
    pub fn solution(&self) -> &'a ThermoSolution {
        self.plan.solution()
    }

    pub fn plan(&self) -> &HaarPlan<'a> {
        &self.plan
    }

    pub fn measure(&self) -> Measure {
        self.plan.measure()
    }

    /// Root eigenvalues with the kernel eigenvector flagged.
    pub fn root_spectrum(&self) -> Vec<(f64, bool)> {
        self.root_eigen
            .values
            .iter()
            .map(|&v| (v, libm::fabs(v) < KERNEL_TOL))
            .collect()
    }

    /// (α(y)−1)/m[y] and its multiplicity α(y)−1, or None when α(y) = 1.
    pub fn haar_eigenvalue(&self, y: &Word) -> Result<Option<(f64, usize)>> {
        let sol = self.solution();
        let c = sol.cursor(self.measure(), y)?;
        let a = sol.spec().alpha(c.last);
        Ok((a >= 2).then(|| ((a - 1) as f64 / c.mass, a - 1)))
    }

    /// Value at the cylinder [x] of the rank-one block of π(χ_[x])|D|⁻¹
    /// carried by the root vectors and the e_{y,j} with y a strict prefix of x.
    pub fn boundary_value(&self, x: &Word) -> Result<Option<f64>> {
        if x.is_empty() {
            return Ok(None);
        }
        let sol = self.solution();
        let m = self.measure();
        let nu_x = sol.cylinder_mass(x, m)?;
        let a0 = x.symbols()[0] as usize;
        let mut total = 0.0;
        for (i, &(lam, kernel)) in self.root_spectrum().iter().enumerate() {
            if kernel {
                continue;
            }
            let w = self.root_eigen.vectors[(a0, i)];
            total += w * w / (lam * lam * self.root_masses[a0]);
        }
        for n in 1..x.len() {
            let y = x.prefix(n);
            let Some((ev, _)) = self.haar_eigenvalue(&y)? else {
                continue;
            };
            let s = 1.0 / ev;
            for e in self.plan.elements(&y)? {
                let v = e.value_at(x.symbols());
                total += s * s * v * v;
            }
        }
        Ok(Some(libm::sqrt(nu_x * total)))
    }

    pub fn singular_values(&self, x: &Word, opts: StreamOptions) -> Result<SpectralStream<'_, 'a>> {
        let sol = self.solution();
        let start = sol.cursor(self.measure(), x)?;
        let mut heap = BinaryHeap::new();
        let boundary = self.boundary_value(x)?;
        if x.is_empty() {
            for (i, &(lam, kernel)) in self.root_spectrum().iter().enumerate() {
                if !kernel {
                    let label = SpectralLabel {
                        word: Word::empty(),
                        index: i + 1,
                        kind: LabelKind::Root,
                    };
                    heap.push(Entry {
                        key: 1.0 / libm::fabs(lam),
                        word: Word::empty(),
                        index: i + 1,
                        payload: Payload::Value(label),
                    });
                }
            }
            for (b, c) in sol.children(self.measure(), &start) {
                heap.push(Entry {
                    key: c.mass,
                    word: Word::new(vec![b]),
                    index: 0,
                    payload: Payload::Node(c),
                });
            }
        } else {
            if opts.include_boundary {
                if let Some(v) = boundary {
                    heap.push(Entry {
                        key: v,
                        word: x.clone(),
                        index: 0,
                        payload: Payload::Value(SpectralLabel {
                            word: x.clone(),
                            index: 0,
                            kind: LabelKind::Boundary,
                        }),
                    });
                }
            }
            heap.push(Entry {
                key: start.mass,
                word: x.clone(),
                index: 0,
                payload: Payload::Node(start),
            });
        }
        let nodes = heap.len();
        Ok(SpectralStream {
            model: self,
            heap,
            restriction: x.clone(),
            produced: 0,
            nodes,
            budget: opts.node_budget,
            boundary,
        })
    }

    /// D on the level-k cylinder functions, in the orthonormal frame
    /// m_c^{-1/2} χ_c, c ranging over the admissible k-words.
    pub fn level_operator(&self, k: usize) -> Result<Matrix> {
        if k == 0 {
            return Err(Error::LevelMismatch { expected: 1, found: 0 });
        }
        let sol = self.solution();
        let masses = sol.level_masses(self.measure(), k);
        let basis = self.plan.basis(k - 1)?;
        let n = masses.len();
        let sq: Vec<f64> = masses.iter().map(|m| libm::sqrt(*m)).collect();
        let q: Vec<Vec<f64>> = basis
            .iter()
            .map(|b| b.values.iter().zip(&sq).map(|(v, s)| v * s).collect())
            .collect();
        let l = sol.spec().alphabet_size();
        let mut d = Matrix::zeros(n, n);
        for (bi, b) in basis.iter().enumerate() {
            match &b.label {
                BasisLabel::Root(a) => {
                    for (bj, b2) in basis.iter().enumerate().take(l) {
                        let BasisLabel::Root(a2) = b2.label else { continue };
                        let r = self.root_block[(*a as usize, a2 as usize)];
                        if r == 0.0 {
                            continue;
                        }
                        for i in 0..n {
                            for j in 0..n {
                                d[(i, j)] += r * q[bi][i] * q[bj][j];
                            }
                        }
                    }
                }
                BasisLabel::Haar { word, .. } => {
                    let (ev, _) = self.haar_eigenvalue(word)?.ok_or(Error::SingleChild)?;
                    let support: Vec<usize> = (0..n).filter(|&i| q[bi][i] != 0.0).collect();
                    for &i in &support {
                        for &j in &support {
                            d[(i, j)] += ev * q[bi][i] * q[bi][j];
                        }
                    }
                }
            }
        }
        Ok(d)
    }
}

impl SpectralStream<'_, '_> {
    pub fn restriction(&self) -> &Word {
        &self.restriction
    }

    pub fn produced(&self) -> usize {
        self.produced
    }

    pub fn nodes_visited(&self) -> usize {
        self.nodes
    }

    /// The finite-rank boundary value for a nonempty restriction.
    pub fn boundary_value(&self) -> Option<f64> {
        self.boundary
    }

    pub fn next_value(&mut self) -> Result<Option<SingularValue>> {
        let sol = self.model.solution();
        let m = self.model.measure();
        while let Some(e) = self.heap.pop() {
            match e.payload {
                Payload::Value(label) => {
                    self.produced += 1;
                    return Ok(Some(SingularValue {
                        value: e.key,
                        label,
                    }));
                }
                Payload::Node(c) => {
                    let a = sol.spec().alpha(c.last);
                    if a >= 2 {
                        let v = c.mass / (a - 1) as f64;
                        for j in 1..a {
                            self.heap.push(Entry {
                                key: v,
                                word: e.word.clone(),
                                index: j,
                                payload: Payload::Value(SpectralLabel {
                                    word: e.word.clone(),
                                    index: j,
                                    kind: LabelKind::Haar,
                                }),
                            });
                        }
                    }
                    self.nodes += a;
                    if self.nodes > self.budget {
                        return Err(Error::BudgetExceeded { nodes: self.budget });
                    }
                    sol.for_each_child(m, &c, |b, ch| {
                        self.heap.push(Entry {
                            key: ch.mass,
                            word: e.word.child(b),
                            index: 0,
                            payload: Payload::Node(ch),
                        });
                    });
                }
            }
        }
        Ok(None)
    }

    /// Up to `n` further values; shorter only if the stream is finite.
    pub fn take_values(&mut self, n: usize) -> Result<Vec<SingularValue>> {
        let mut out = Vec::with_capacity(n.min(1 << 20));
        while out.len() < n {
            match self.next_value()? {
                Some(v) => out.push(v),
                None => break,
            }
        }
        Ok(out)
    }

    pub fn take_numbers(&mut self, n: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(n.min(1 << 22));
        while out.len() < n {
            match self.next_value()? {
                Some(v) => out.push(v.value),
                None => break,
            }
        }
        Ok(out)
    }
}

/// Normalized partial sums at a list of checkpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct DixmierCheckpoints {
    /// (N, Σ_{k≤N} σ_k / ln N).
    pub rows: Vec<(usize, f64)>,
    /// (max − min)/|last| over the last three checkpoints.
    pub spread: f64,
}

/// Σ_{k≤N}σ_k / ln N at each checkpoint; `values` is read in order.
pub fn partial_dixmier(values: &[f64], checkpoints: &[usize]) -> Result<DixmierCheckpoints> {
    if checkpoints.is_empty() || checkpoints.windows(2).any(|w| w[0] >= w[1]) || checkpoints[0] < 2 {
        return Err(Error::InvalidValue("checkpoints must increase from at least 2"));
    }
    let mut rows = Vec::with_capacity(checkpoints.len());
    let mut sum = 0.0;
    let mut k = 0;
    for &n in checkpoints {
        while k < n && k < values.len() {
            sum += values[k];
            k += 1;
        }
        rows.push((n, sum / libm::log(n as f64)));
    }
    let tail = &rows[rows.len().saturating_sub(3)..];
    let hi = tail.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    let lo = tail.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let last = libm::fabs(rows.last().unwrap().1);
    let spread = if last > 0.0 { (hi - lo) / last } else { hi - lo };
    Ok(DixmierCheckpoints { rows, spread })
}

/// One cylinder's share of a noncommutative integral.
#[derive(Clone, Debug)]
pub struct DixmierTerm {
    pub word: Word,
    pub coefficient: f64,
    pub normalized: DixmierCheckpoints,
}

#[derive(Clone, Debug)]
pub struct DixmierEstimate {
    /// Σ a_x · (Σ_{k≤N} σ_k(x) / ln N) at the last checkpoint.
    pub estimate: f64,
    /// (1/h_ν) ∫ a dν.
    pub reference: f64,
    /// Combined normalized sums at every checkpoint.
    pub rows: Vec<(usize, f64)>,
    pub spread: f64,
    pub terms: Vec<DixmierTerm>,
}

/// Estimates ⨍ π(a)|D|⁻¹ for a level function by linearity over cylinders.
pub fn dixmier_integral(
    model: &DiracModel<'_>,
    a: &LevelFunction,
    checkpoints: &[usize],
    opts: StreamOptions,
) -> Result<DixmierEstimate> {
    let sol = model.solution();
    let words = sol.spec().enumerate_cylinders(a.level);
    if words.len() != a.values.len() {
        return Err(Error::ShapeMismatch {
            expected: words.len(),
            found: a.values.len(),
        });
    }
    let n_max = *checkpoints.last().ok_or(Error::InvalidValue("no checkpoints"))?;
    let masses = sol.level_masses(model.measure(), a.level);
    let reference =
        a.values.iter().zip(&masses).map(|(v, m)| v * m).sum::<f64>() / sol.entropy;
    let mut rows: Vec<(usize, f64)> = checkpoints.iter().map(|&n| (n, 0.0)).collect();
    let mut terms = Vec::new();
    for (w, &c) in words.iter().zip(&a.values) {
        if c == 0.0 {
            continue;
        }
        let values = model.singular_values(w, opts)?.take_numbers(n_max)?;
        let normalized = partial_dixmier(&values, checkpoints)?;
        for (row, t) in rows.iter_mut().zip(&normalized.rows) {
            row.1 += c * t.1;
        }
        terms.push(DixmierTerm {
            word: w.clone(),
            coefficient: c,
            normalized,
        });
    }
    let tail = &rows[rows.len().saturating_sub(3)..];
    let hi = tail.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    let lo = tail.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let estimate = rows.last().map_or(0.0, |r| r.1);
    let spread = if estimate != 0.0 {
        (hi - lo) / libm::fabs(estimate)
    } else {
        hi - lo
    };
    Ok(DixmierEstimate {
        estimate,
        reference,
        rows,
        spread,
        terms,
    })
}

/// The four growth exponents of a nondecreasing positive sequence.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DimensionEstimate {
    /// From the balance of Σ_{k≤M} x_k^{−α}/ln M between M = N/2 and N.
    pub d1: f64,
    /// The same balance between M = N/16 and N.
    pub d2: f64,
    /// From equal dyadic block sums Σ_{N/4<k≤N/2} and Σ_{N/2<k≤N}.
    pub d3: f64,
    /// Inverse slope of ln x_k against ln k over [N/1000, N].
    pub d4: f64,
    pub n_used: usize,
}

const ALPHA_LO: f64 = 1e-3;
const ALPHA_HI: f64 = 20.0;
const ALPHA_TOL: f64 = 1e-3;

/// Largest α with `grows(α)` true, assuming it switches once.
fn bisect(grows: impl Fn(f64) -> bool) -> f64 {
    let (mut lo, mut hi) = (ALPHA_LO, ALPHA_HI);
    if !grows(lo) {
        return lo;
    }
    if grows(hi) {
        return hi;
    }
    while hi - lo > ALPHA_TOL * 0.5 {
        let mid = 0.5 * (lo + hi);
        if grows(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Estimates d₁..d₄ from x_k = 1/σ_k.
pub fn dimension_estimators(xs: &[f64]) -> Result<DimensionEstimate> {
    let n = xs.len();
    if n < 64 {
        return Err(Error::InvalidValue("need at least 64 values"));
    }
    if xs.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::InvalidValue("values must be positive and finite"));
    }
    if xs.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidValue("values must be nondecreasing"));
    }
    if xs[0] == xs[n - 1] {
        return Err(Error::Degenerate("all values are equal"));
    }
    let logs: Vec<f64> = xs.iter().map(|x| libm::log(*x)).collect();
    let logs = &logs[..];
    let sum_range = |alpha: f64, a: usize, b: usize| -> f64 {
        logs[a..b].iter().map(|l| libm::exp(-alpha * l)).sum()
    };
    let growth = |m0: usize, alpha: f64| {
        let s0 = sum_range(alpha, 0, m0);
        let s1 = s0 + sum_range(alpha, m0, n);
        s1 / libm::log(n as f64) > s0 / libm::log(m0 as f64)
    };
    let d1 = bisect(|a| growth(n / 2, a));
    let d2 = bisect(|a| growth(n / 16, a));
    let d3 = bisect(|alpha| sum_range(alpha, n / 2, n) > sum_range(alpha, n / 4, n / 2));
    let lo = (n / 1000).max(1) as f64;
    let hi = n as f64;
    let points = 400;
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut count = 0.0;
    let mut last = 0;
    for i in 0..points {
        let k = libm::round(lo * libm::pow(hi / lo, i as f64 / (points - 1) as f64)) as usize;
        let k = k.clamp(1, n);
        if k == last {
            continue;
        }
        last = k;
        let x = libm::log(k as f64);
        let y = logs[k - 1];
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        count += 1.0;
    }
    let slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
    let d4 = if slope > 0.0 { 1.0 / slope } else { f64::INFINITY };
    Ok(DimensionEstimate {
        d1,
        d2,
        d3,
        d4,
        n_used: n,
    })
}

/// Partial sums of σ_k((1+D²)^{−p/2}) for one exponent.
#[derive(Clone, Debug, PartialEq)]
pub struct SummabilityRow {
    pub p: f64,
    /// (N, Σ_{k≤N}, Σ_{k≤N}/ln N).
    pub checkpoints: Vec<(usize, f64, f64)>,
    /// Raw partial sums changed by less than 1% across the checkpoints.
    pub converges: bool,
    /// Normalized partial sums strictly increase and grow by over 5%.
    pub diverges: bool,
}

/// Normalized partial sums of (1+D²)^{−p/2}, including the kernel value 1.
pub fn summability_report(
    model: &DiracModel<'_>,
    p_values: &[f64],
    checkpoints: &[usize],
    opts: StreamOptions,
) -> Result<Vec<SummabilityRow>> {
    if p_values.iter().any(|&p| !(p > 0.0)) {
        return Err(Error::InvalidValue("p must be positive"));
    }
    if checkpoints.is_empty() || checkpoints.windows(2).any(|w| w[0] >= w[1]) || checkpoints[0] < 2 {
        return Err(Error::InvalidValue("checkpoints must increase from at least 2"));
    }
    let n_max = *checkpoints.last().unwrap();
    let sigma = model.singular_values(&Word::empty(), opts)?.take_numbers(n_max - 1)?;
    let mut rows = Vec::new();
    for &p in p_values {
        let mut sum = 1.0;
        let mut k = 1;
        let mut cps = Vec::new();
        for &n in checkpoints {
            while k < n && k - 1 < sigma.len() {
                let s = sigma[k - 1];
                sum += libm::pow(1.0 + 1.0 / (s * s), -p / 2.0);
                k += 1;
            }
            cps.push((n, sum, sum / libm::log(n as f64)));
        }
        let first = cps[0];
        let last = *cps.last().unwrap();
        let converges = (last.1 - first.1) / last.1 < 0.01;
        let diverges = cps.windows(2).all(|w| w[1].2 > w[0].2) && last.2 > 1.05 * first.2;
        rows.push(SummabilityRow {
            p,
            checkpoints: cps,
            converges,
            diverges,
        });
    }
    Ok(rows)
}
