//! Counting cylinders by mass and the renewal quantities built on it.

use alloc::vec;
use alloc::vec::Vec;

use rand_core::RngCore;

use crate::error::{Error, Result};
use crate::sft::Word;
use crate::thermo::{Cursor, Measure, ThermoSolution};

/// Υ_x(t) and Ξ_x(t).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Counts {
    pub upsilon: u64,
    pub xi: f64,
}

fn check_threshold(t: f64) -> Result<()> {
    if t > 0.0 && t < 1.0 {
        Ok(())
    } else {
        Err(Error::ThresholdOutOfRange)
    }
}

/// Calls `f` on every y with [y] ⊆ [x] and mass above `t`, depth first.
/// The empty word itself is never visited.
fn visit_above(
    sol: &ThermoSolution,
    kind: Measure,
    x: &Word,
    t: f64,
    f: &mut dyn FnMut(&Cursor),
) -> Result<()> {
    let start = sol.cursor(kind, x)?;
    let mut stack: Vec<Cursor> = Vec::new();
    if x.is_empty() {
        sol.for_each_child(kind, &start, |_, c| stack.push(c));
        stack.reverse();
    } else {
        stack.push(start);
    }
    while let Some(c) = stack.pop() {
        if c.mass <= t {
            continue;
        }
        f(&c);
        let base = stack.len();
        sol.for_each_child(kind, &c, |_, ch| {
            if ch.mass > t {
                stack.push(ch)
            }
        });
        stack[base..].reverse();
    }
    Ok(())
}

/// Υ_x(t) = #{y : [y] ⊆ [x], m[y] > t} and Ξ_x(t) = Σ of those masses.
pub fn count_cylinders(sol: &ThermoSolution, kind: Measure, x: &Word, t: f64) -> Result<Counts> {
    check_threshold(t)?;
    let mut upsilon = 0;
    let mut xi = 0.0;
    visit_above(sol, kind, x, t, &mut |c| {
        upsilon += 1;
        xi += c.mass;
    })?;
    Ok(Counts { upsilon, xi })
}

/// Counts of the words above `t`, split by their number of children;
/// entry a holds the words with α(y) = a.
pub fn count_by_alpha(sol: &ThermoSolution, kind: Measure, x: &Word, t: f64) -> Result<Vec<u64>> {
    check_threshold(t)?;
    let spec = sol.spec();
    let mut out = vec![0u64; spec.alphabet_size() + 1];
    visit_above(sol, kind, x, t, &mut |c| out[spec.alpha(c.last)] += 1)?;
    Ok(out)
}

/// Υ and Ξ along a list of thresholds.
#[derive(Clone, Debug, PartialEq)]
pub struct CountingProfile {
    pub restriction: Word,
    pub thresholds: Vec<f64>,
    pub upsilon: Vec<u64>,
    pub xi: Vec<f64>,
}

/// One traversal down to the smallest threshold, then lookups.
pub fn counting_profile(
    sol: &ThermoSolution,
    kind: Measure,
    x: &Word,
    thresholds: &[f64],
) -> Result<CountingProfile> {
    if thresholds.is_empty() {
        return Err(Error::InvalidValue("no thresholds"));
    }
    for &t in thresholds {
        check_threshold(t)?;
    }
    let t_min = thresholds.iter().copied().fold(f64::INFINITY, f64::min);
    let mut masses = Vec::new();
    visit_above(sol, kind, x, t_min, &mut |c| masses.push(c.mass))?;
    masses.sort_by(|a, b| b.total_cmp(a));
    let mut prefix = Vec::with_capacity(masses.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for m in &masses {
        acc += m;
        prefix.push(acc);
    }
    let mut upsilon = Vec::with_capacity(thresholds.len());
    let mut xi = Vec::with_capacity(thresholds.len());
    for &t in thresholds {
        let n = masses.partition_point(|&m| m > t);
        upsilon.push(n as u64);
        xi.push(prefix[n]);
    }
    Ok(CountingProfile {
        restriction: x.clone(),
        thresholds: thresholds.to_vec(),
        upsilon,
        xi,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparability {
    pub c1: f64,
    pub c2: f64,
    pub ratio: f64,
    /// (t, Υ, Ξ, t·Υ).
    pub rows: Vec<(f64, u64, f64, f64)>,
}

/// Empirical bounds c₁ ≤ t·Υ_x(t) ≤ c₂ over a decreasing grid.
pub fn upsilon_comparability(
    sol: &ThermoSolution,
    kind: Measure,
    x: &Word,
    t_grid: &[f64],
) -> Result<Comparability> {
    if t_grid.len() < 2 || t_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidValue("grid must be strictly decreasing"));
    }
    if t_grid[0] / t_grid[t_grid.len() - 1] < 1e4 * (1.0 - 1e-12) {
        return Err(Error::InvalidValue("grid must span four decades"));
    }
    let p = counting_profile(sol, kind, x, t_grid)?;
    let rows: Vec<_> = (0..t_grid.len())
        .map(|i| {
            let t = t_grid[i];
            (t, p.upsilon[i], p.xi[i], t * p.upsilon[i] as f64)
        })
        .collect();
    let c1 = rows.iter().map(|r| r.3).fold(f64::INFINITY, f64::min);
    let c2 = rows.iter().map(|r| r.3).fold(0.0, f64::max);
    Ok(Comparability {
        c1,
        c2,
        ratio: c2 / c1,
        rows,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct XiSlope {
    pub slope: f64,
    pub intercept: f64,
    /// ν[x]/h_ν.
    pub reference: f64,
    pub rel_error: f64,
    /// (r, Ξ(e^{−r}), fitted value).
    pub rows: Vec<(f64, f64, f64)>,
}

/// Least-squares slope of Ξ_x(e^{−r}) against r.
pub fn xi_slope(sol: &ThermoSolution, kind: Measure, x: &Word, r_grid: &[f64]) -> Result<XiSlope> {
    if r_grid.len() < 2 || r_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidValue("grid must be strictly increasing"));
    }
    if r_grid[r_grid.len() - 1] < 12.0 {
        return Err(Error::InvalidValue("grid must reach r = 12"));
    }
    let ts: Vec<f64> = r_grid.iter().map(|r| libm::exp(-r)).collect();
    let p = counting_profile(sol, kind, x, &ts)?;
    let n = r_grid.len() as f64;
    let mx = r_grid.iter().sum::<f64>() / n;
    let my = p.xi.iter().sum::<f64>() / n;
    let sxy: f64 = r_grid.iter().zip(&p.xi).map(|(r, y)| (r - mx) * (y - my)).sum();
    let sxx: f64 = r_grid.iter().map(|r| (r - mx) * (r - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let reference = sol.cylinder_mass(x, kind)? / sol.entropy;
    let rows = r_grid
        .iter()
        .zip(&p.xi)
        .map(|(&r, &y)| (r, y, intercept + slope * r))
        .collect();
    Ok(XiSlope {
        slope,
        intercept,
        reference,
        rel_error: (slope - reference) / reference,
        rows,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LalleySum {
    pub value: f64,
    /// e^{−r} · value.
    pub scaled: f64,
    pub nodes: usize,
}

/// Σ_k Σ_{υ ∈ σ^{−k}ω} χ_[x](υ) · [−S_kφ̃(υ) ≤ r], with ω the periodic
/// extension of `anchor` and φ̃ the normalized potential.
pub fn lalley_sum(
    sol: &ThermoSolution,
    anchor: &Word,
    x: &Word,
    r: f64,
    budget: usize,
) -> Result<LalleySum> {
    let spec = sol.spec();
    let w = anchor.symbols();
    if w.is_empty() || !spec.is_admissible(w) || !spec.allowed(w[w.len() - 1], w[0]) {
        return Err(Error::Inadmissible);
    }
    spec.check(x)?;
    if !r.is_finite() {
        return Err(Error::InvalidValue("r must be finite"));
    }
    if r < 0.0 {
        return Ok(LalleySum {
            value: 0.0,
            scaled: 0.0,
            nodes: 0,
        });
    }
    let phi = sol.normalized_potential();
    let range = phi.range();
    let x = x.symbols();
    // front holds the prepended symbols, last entry = first symbol of υ
    let get = |front: &[u8], i: usize| -> u8 {
        if i < front.len() {
            front[front.len() - 1 - i]
        } else {
            w[(i - front.len()) % w.len()]
        }
    };
    let in_x = |front: &[u8]| (0..x.len()).all(|i| get(front, i) == x[i]);
    let mut total = 0u64;
    let mut nodes = 0usize;
    let mut front: Vec<u8> = Vec::new();
    let mut stack: Vec<(usize, u8, f64)> = Vec::new();
    if in_x(&front) {
        total += 1;
    }
    let push_preimages = |front: &[u8], cost: f64, stack: &mut Vec<(usize, u8, f64)>| {
        let first = get(front, 0);
        for a in spec.predecessors(first) {
            let mut window = Vec::with_capacity(range);
            window.push(a);
            for i in 0..range - 1 {
                window.push(get(front, i));
            }
            let v = phi.eval(&window).expect("window is admissible");
            let c = cost - v;
            if c <= r {
                stack.push((front.len(), a, c));
            }
        }
    };
    push_preimages(&front, 0.0, &mut stack);
    while let Some((depth, a, cost)) = stack.pop() {
        nodes += 1;
        if nodes > budget {
            return Err(Error::BudgetExceeded { nodes: budget });
        }
        front.truncate(depth);
        front.push(a);
        if in_x(&front) {
            total += 1;
        }
        push_preimages(&front, cost, &mut stack);
    }
    let value = total as f64;
    Ok(LalleySum {
        value,
        scaled: value * libm::exp(-r),
        nodes,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrwEstimate {
    /// Mean of N_t / t over the samples.
    pub mean: f64,
    pub std_error: f64,
    /// 1/h_ν.
    pub reference: f64,
    pub samples: usize,
}

fn uniform(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Monte-Carlo mean of N_t/t with N_t = #{n ≥ 1 : Σ_{i<n} −φ̃(σ^i ω) ≤ t}
/// for ω drawn from the equilibrium measure.
pub fn krw_surrogate(
    sol: &ThermoSolution,
    t: f64,
    samples: usize,
    rng: &mut impl RngCore,
) -> Result<KrwEstimate> {
    if !(t > 0.0) || samples == 0 {
        return Err(Error::InvalidValue("t and samples must be positive"));
    }
    let phi = sol.normalized_potential();
    let range = phi.range();
    let kind = Measure::Equilibrium;
    // Past the solution range masses are products, so they are reset to
    // one after every draw to keep them from underflowing.
    let draw = |c: &Cursor, rng: &mut dyn FnMut() -> f64| -> (u8, Cursor) {
        let kids = sol.children(kind, c);
        let u = rng() * c.mass;
        let mut acc = 0.0;
        let (b, mut k) = kids
            .iter()
            .find(|(_, k)| {
                acc += k.mass;
                u < acc
            })
            .copied()
            .unwrap_or(*kids.last().expect("every word has a child"));
        if k.len >= sol.range() {
            k.mass = 1.0;
        }
        (b, k)
    };
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut next = || uniform(rng);
    for _ in 0..samples {
        let mut c = sol.root();
        let mut window: Vec<u8> = Vec::with_capacity(range + 1);
        for _ in 0..range {
            let (b, k) = draw(&c, &mut next);
            window.push(b);
            c = k;
        }
        let mut s = 0.0;
        let mut n = 0u64;
        loop {
            s -= phi.eval(&window).expect("sampled window is admissible");
            if s > t {
                break;
            }
            n += 1;
            let (b, k) = draw(&c, &mut next);
            window.remove(0);
            window.push(b);
            c = k;
        }
        let v = n as f64 / t;
        sum += v;
        sum_sq += v * v;
    }
    let m = sum / samples as f64;
    let var = (sum_sq / samples as f64 - m * m).max(0.0);
    Ok(KrwEstimate {
        mean: m,
        std_error: libm::sqrt(var / samples as f64),
        reference: 1.0 / sol.entropy,
        samples,
    })
}
