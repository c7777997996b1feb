//! Generalised Haar bases built from cylinder masses.
//!
//! The rotation that sends the last coordinate direction to the square
//! roots of the child masses is applied after the canonical V_k, so each
//! U_x moves f_{x,α} onto the constant vector even when the child masses
//! differ. With equal masses it reduces to S⁻¹ V_k S.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::sft::{LevelFunction, Word};
use crate::thermo::{Measure, ThermoSolution};

/// V_k from V_{k-1} via Ṽ_k O_k Ṽ_kᵀ, starting at V_1 = (1).
pub fn canonical_rotation(k: usize) -> Result<Matrix> {
    if k < 2 {
        return Err(Error::BadDimension(k));
    }
    let mut v = Matrix::identity(1);
    for n in 2..=k {
        let mut vt = Matrix::identity(n);
        for i in 0..n - 1 {
            for j in 0..n - 1 {
                vt[(i, j)] = v[(i, j)];
            }
        }
        let mut o = Matrix::identity(n);
        let a = libm::sqrt(1.0 / n as f64);
        let b = libm::sqrt(1.0 - 1.0 / n as f64);
        o[(n - 2, n - 2)] = a;
        o[(n - 2, n - 1)] = b;
        o[(n - 1, n - 2)] = -b;
        o[(n - 1, n - 1)] = a;
        v = vt.mul(&o).mul(&vt.transpose());
    }
    Ok(v)
}

/// Rotation in the plane of two unit vectors taking `u` to `s`.
fn align(u: &[f64], s: &[f64]) -> Matrix {
    let n = u.len();
    let c = dot(u, s);
    let k = Matrix::from_fn(n, n, |i, j| s[i] * u[j] - u[i] * s[j]);
    let k2 = k.mul(&k);
    Matrix::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        id + k[(i, j)] + k2[(i, j)] / (1.0 + c)
    })
}

/// The bijection θ_x between children and positions 1..α(x).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ChildOrder {
    Ascending,
    Descending,
    /// `rank[s]` is the sort key of symbol `s`.
    Rank(Vec<u8>),
}

/// Which member of Ω_x is used for U_x.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UxRule {
    /// S⁻¹ R V_α S with R aligning V_α e_α to the normalised root masses.
    Aligned,
    /// S⁻¹ V_α S verbatim; leaves Ω_x when the child masses differ.
    Literal,
}

/// One Haar function: its constants on the child cylinders in θ order.
#[derive(Clone, Debug, PartialEq)]
pub struct HaarElement {
    pub word: Word,
    /// 1-based, in 1..α(x).
    pub index: usize,
    pub children: Vec<u8>,
    pub child_masses: Vec<f64>,
    pub coefficients: Vec<f64>,
}

impl HaarElement {
    pub fn mean(&self) -> f64 {
        self.coefficients
            .iter()
            .zip(&self.child_masses)
            .map(|(c, m)| c * m)
            .sum()
    }

    pub fn norm_squared(&self) -> f64 {
        self.coefficients
            .iter()
            .zip(&self.child_masses)
            .map(|(c, m)| c * c * m)
            .sum()
    }

    /// Value on a word that extends a child of `self.word`.
    pub fn value_at(&self, symbols: &[u8]) -> f64 {
        let n = self.word.len();
        if symbols.len() <= n || !symbols.starts_with(self.word.symbols()) {
            return 0.0;
        }
        self.children
            .iter()
            .position(|&c| c == symbols[n])
            .map_or(0.0, |k| self.coefficients[k])
    }
}

/// Identifies one vector of the basis.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum BasisLabel {
    /// μ[a]^{-1/2} χ_[a].
    Root(u8),
    Haar { word: Word, index: usize },
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisLabel::Root(a) => write!(f, "root:{}", *a as u32 + 1),
            BasisLabel::Haar { word, index } => write!(f, "{word}#{index}"),
        }
    }
}

/// A basis vector written on the words of one level.
#[derive(Clone, Debug)]
pub struct BasisVector {
    pub label: BasisLabel,
    pub values: Vec<f64>,
}

/// Haar coefficients of a level function.
#[derive(Clone, Debug)]
pub struct HaarCoefficients {
    pub level: usize,
    pub labels: Vec<BasisLabel>,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct GramReport {
    pub dimension: usize,
    pub deviation: f64,
    pub matrix: Matrix,
}

/// Builds Haar vectors for one measure of a solved potential.
#[derive(Clone, Debug)]
pub struct HaarPlan<'a> {
    solution: &'a ThermoSolution,
    measure: Measure,
    order: ChildOrder,
    rule: UxRule,
    rotations: Vec<Matrix>,
}

/// Largest level-function size accepted by the dense routines.
pub const MAX_DIMENSION: usize = 4096;

impl<'a> HaarPlan<'a> {
    /// Plan over μ_φ with ascending children.
    pub fn new(solution: &'a ThermoSolution) -> Self {
        Self::with_measure(solution, Measure::Eigen)
    }

    pub fn with_measure(solution: &'a ThermoSolution, measure: Measure) -> Self {
        let l = solution.spec().alphabet_size();
        let rotations = (2..=l)
            .map(|k| canonical_rotation(k).expect("k >= 2"))
            .collect();
        HaarPlan {
            solution,
            measure,
            order: ChildOrder::Ascending,
            rule: UxRule::Aligned,
            rotations,
        }
    }

    pub fn ordered(mut self, order: ChildOrder) -> Self {
        self.order = order;
        self
    }

    pub fn rule(mut self, rule: UxRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn solution(&self) -> &'a ThermoSolution {
        self.solution
    }

    pub fn measure(&self) -> Measure {
        self.measure
    }

    pub fn rotation(&self, k: usize) -> Result<&Matrix> {
        k.checked_sub(2)
            .and_then(|i| self.rotations.get(i))
            .ok_or(Error::BadDimension(k))
    }

    /// Children of `word` with their masses, in θ order.
    pub fn ordered_children(&self, word: &Word) -> Result<Vec<(u8, f64)>> {
        let c = self.solution.cursor(self.measure, word)?;
        let mut kids: Vec<(u8, f64)> = self
            .solution
            .children(self.measure, &c)
            .into_iter()
            .map(|(b, k)| (b, k.mass))
            .collect();
        match &self.order {
            ChildOrder::Ascending => {}
            ChildOrder::Descending => kids.reverse(),
            ChildOrder::Rank(rank) => kids.sort_by_key(|(b, _)| rank[*b as usize]),
        }
        Ok(kids)
    }

    /// The orthogonal factor W with U_x = S⁻¹ W S.
    fn w_matrix(&self, masses: &[f64]) -> Result<Matrix> {
        let a = masses.len();
        let v = self.rotation(a)?;
        match self.rule {
            UxRule::Literal => Ok(v.clone()),
            UxRule::Aligned => {
                let total: f64 = masses.iter().sum();
                let s: Vec<f64> = masses.iter().map(|m| libm::sqrt(m / total)).collect();
                let u = vec![libm::sqrt(1.0 / a as f64); a];
                Ok(align(&u, &s).mul(v))
            }
        }
    }

    /// U_x in θ order.
    pub fn ux(&self, word: &Word) -> Result<Matrix> {
        let kids = self.ordered_children(word)?;
        if kids.len() < 2 {
            return Err(Error::SingleChild);
        }
        let masses: Vec<f64> = kids.iter().map(|k| k.1).collect();
        let w = self.w_matrix(&masses)?;
        let a = masses.len();
        Ok(Matrix::from_fn(a, a, |i, j| {
            w[(i, j)] * libm::sqrt(masses[j]) / libm::sqrt(masses[i])
        }))
    }

    /// ⟨v, u⟩_x = Σ μ[x θ⁻¹(j)] v_j u_j.
    pub fn inner(masses: &[f64], v: &[f64], u: &[f64]) -> f64 {
        masses.iter().zip(v).zip(u).map(|((m, a), b)| m * a * b).sum()
    }

    /// e_{x,j} = Σ_k μ[x θ⁻¹(k)]^{-1/2} ⟨f_{x,k}, U_x f_{x,j}⟩_x χ_[x θ⁻¹(k)].
    pub fn element(&self, word: &Word, j: usize) -> Result<HaarElement> {
        let kids = self.ordered_children(word)?;
        let a = kids.len();
        if a < 2 {
            return Err(Error::SingleChild);
        }
        if j == 0 || j >= a {
            return Err(Error::IndexOutOfRange { index: j, len: a - 1 });
        }
        let masses: Vec<f64> = kids.iter().map(|k| k.1).collect();
        let u = self.ux(word)?;
        let f = |i: usize| -> Vec<f64> {
            let mut v = vec![0.0; a];
            v[i] = 1.0 / libm::sqrt(masses[i]);
            v
        };
        let ufj = u.mul_vec(&f(j - 1));
        let coefficients = (0..a)
            .map(|k| Self::inner(&masses, &f(k), &ufj) / libm::sqrt(masses[k]))
            .collect();
        Ok(HaarElement {
            word: word.clone(),
            index: j,
            children: kids.iter().map(|k| k.0).collect(),
            child_masses: masses,
            coefficients,
        })
    }

    /// All e_{x,j} of one word; empty for a single child.
    pub fn elements(&self, word: &Word) -> Result<Vec<HaarElement>> {
        let a = self.ordered_children(word)?.len();
        (1..a).map(|j| self.element(word, j)).collect()
    }

    fn check_dimension(&self, level: usize) -> Result<usize> {
        let n = self.solution.spec().count_words(level);
        if n > MAX_DIMENSION as u128 {
            return Err(Error::TooDeep {
                depth: level,
                max: MAX_DIMENSION,
            });
        }
        Ok(n as usize)
    }

    /// Root block and every e_{y,j} with 1 ≤ |y| ≤ depth, written on
    /// level depth+1.
    pub fn basis(&self, depth: usize) -> Result<Vec<BasisVector>> {
        let words_level = depth + 1;
        self.check_dimension(words_level)?;
        let spec = self.solution.spec();
        let words = spec.enumerate_cylinders(words_level);
        let mut out = Vec::with_capacity(words.len());
        for a in 0..spec.alphabet_size() as u8 {
            let m = self.solution.cylinder_mass(&Word::new(vec![a]), self.measure)?;
            let c = 1.0 / libm::sqrt(m);
            out.push(BasisVector {
                label: BasisLabel::Root(a),
                values: words
                    .iter()
                    .map(|w| if w.symbols()[0] == a { c } else { 0.0 })
                    .collect(),
            });
        }
        for len in 1..=depth {
            for y in spec.enumerate_cylinders(len) {
                for e in self.elements(&y)? {
                    out.push(BasisVector {
                        label: BasisLabel::Haar {
                            word: y.clone(),
                            index: e.index,
                        },
                        values: words.iter().map(|w| e.value_at(w.symbols())).collect(),
                    });
                }
            }
        }
        Ok(out)
    }

    /// L² inner products of the basis up to `depth`, by exact sums over
    /// level depth+1 cylinders.
    pub fn gram_matrix(&self, depth: usize) -> Result<GramReport> {
        let basis = self.basis(depth)?;
        let masses = self.solution.level_masses(self.measure, depth + 1);
        let n = basis.len();
        let weighted: Vec<Vec<f64>> = basis
            .iter()
            .map(|b| b.values.iter().zip(&masses).map(|(v, m)| v * m).collect())
            .collect();
        let mut g = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = dot(&weighted[i], &basis[j].values);
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        let deviation = g.max_abs_diff(&Matrix::identity(n));
        Ok(GramReport {
            dimension: n,
            deviation,
            matrix: g,
        })
    }

    /// Coefficients of a level-K function against the basis up to K−1.
    pub fn expand(&self, f: &LevelFunction) -> Result<HaarCoefficients> {
        let k = f.level;
        let n = self.check_dimension(k)?;
        if f.values.len() != n {
            return Err(Error::ShapeMismatch {
                expected: n,
                found: f.values.len(),
            });
        }
        if k == 0 {
            return Err(Error::LevelMismatch { expected: 1, found: 0 });
        }
        let basis = self.basis(k - 1)?;
        let masses = self.solution.level_masses(self.measure, k);
        let fw: Vec<f64> = f.values.iter().zip(&masses).map(|(a, m)| a * m).collect();
        Ok(HaarCoefficients {
            level: k,
            labels: basis.iter().map(|b| b.label.clone()).collect(),
            values: basis.iter().map(|b| dot(&fw, &b.values)).collect(),
        })
    }

    pub fn reconstruct(&self, c: &HaarCoefficients) -> Result<LevelFunction> {
        if c.level == 0 {
            return Err(Error::LevelMismatch { expected: 1, found: 0 });
        }
        let basis = self.basis(c.level - 1)?;
        if basis.len() != c.values.len() {
            return Err(Error::ShapeMismatch {
                expected: basis.len(),
                found: c.values.len(),
            });
        }
        let mut values = vec![0.0; basis[0].values.len()];
        for (b, &x) in basis.iter().zip(&c.values) {
            for (v, bv) in values.iter_mut().zip(&b.values) {
                *v += x * bv;
            }
        }
        Ok(LevelFunction {
            level: c.level,
            values,
        })
    }
}
