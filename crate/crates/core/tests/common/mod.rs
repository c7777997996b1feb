#![allow(dead_code)]

use gibbs_core::sft::{SubshiftSpec, Word};
use gibbs_core::thermo::{solve_thermo, Potential, SolveOptions, ThermoSolution};

pub const GOLDEN: f64 = 1.618_033_988_749_895;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ref {
    Uniform,
    Golden,
    Bernoulli,
}

pub const ALL: [Ref; 3] = [Ref::Uniform, Ref::Golden, Ref::Bernoulli];

pub fn spec(r: Ref) -> SubshiftSpec {
    match r {
        Ref::Golden => SubshiftSpec::golden_mean(),
        _ => SubshiftSpec::full(2).unwrap(),
    }
}

pub fn potential(r: Ref, spec: &SubshiftSpec) -> Potential {
    match r {
        Ref::Bernoulli => Potential::bernoulli(spec, &[0.3, 0.7]).unwrap(),
        _ => Potential::zero(spec),
    }
}

pub fn solve(r: Ref) -> ThermoSolution {
    let s = spec(r);
    let p = potential(r, &s);
    solve_thermo(&s, &p, SolveOptions::default()).unwrap()
}

/// Closed-form initial law and transitions of the equilibrium chain.
pub fn chain(r: Ref) -> ([f64; 2], [[f64; 2]; 2]) {
    match r {
        Ref::Uniform => ([0.5, 0.5], [[0.5, 0.5], [0.5, 0.5]]),
        Ref::Bernoulli => ([0.3, 0.7], [[0.3, 0.7], [0.3, 0.7]]),
        Ref::Golden => {
            let g2 = GOLDEN * GOLDEN;
            (
                [g2 / (1.0 + g2), 1.0 / (1.0 + g2)],
                [[1.0 / GOLDEN, 1.0 / g2], [1.0, 0.0]],
            )
        }
    }
}

pub fn oracle_mass(r: Ref, w: &[u8]) -> f64 {
    let (pi, p) = chain(r);
    match w.split_first() {
        None => 1.0,
        Some((&a, rest)) => {
            let mut m = pi[a as usize];
            let mut prev = a;
            for &b in rest {
                m *= p[prev as usize][b as usize];
                prev = b;
            }
            m
        }
    }
}

/// Every nonempty admissible word with oracle mass above `t`, no pruning
/// beyond the mass bound.
pub fn oracle_words(r: Ref, t: f64) -> Vec<(Vec<u8>, f64)> {
    let (_, p) = chain(r);
    let mut out = Vec::new();
    let mut stack: Vec<(Vec<u8>, f64)> = vec![(vec![0], oracle_mass(r, &[0])), (vec![1], oracle_mass(r, &[1]))];
    while let Some((w, m)) = stack.pop() {
        if m <= t {
            continue;
        }
        let last = *w.last().unwrap() as usize;
        for b in 0..2u8 {
            let q = p[last][b as usize];
            if q > 0.0 {
                let mut c = w.clone();
                c.push(b);
                stack.push((c, m * q));
            }
        }
        out.push((w, m));
    }
    out
}

pub fn entropy(r: Ref) -> f64 {
    match r {
        Ref::Uniform => core::f64::consts::LN_2,
        Ref::Golden => GOLDEN.ln(),
        Ref::Bernoulli => -(0.3f64 * 0.3f64.ln() + 0.7 * 0.7f64.ln()),
    }
}

pub fn word(s: &[u8]) -> Word {
    Word::new(s.to_vec())
}
