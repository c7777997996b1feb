mod common;

use common::*;
use gibbs_core::duality::*;
use gibbs_core::sft::{common_prefix_metric, LevelFunction, Word};
use gibbs_core::spectral::build_dirac;
use gibbs_core::thermo::Measure;
use gibbs_core::Error;
use proptest::prelude::*;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// min cᵀx subject to Ax = b, x ≥ 0, with b ≥ 0 and A of full row rank.
/// Two-phase tableau simplex with Bland's rule.
fn lp_min(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> f64 {
    let (m, n) = (a.len(), c.len());
    let w = n + m + 1;
    let mut t: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let mut row = a[i].clone();
            row.extend((0..m).map(|j| if i == j { 1.0 } else { 0.0 }));
            row.push(b[i]);
            row
        })
        .collect();
    let mut basis: Vec<usize> = (n..n + m).collect();
    let pivot = |t: &mut Vec<Vec<f64>>, r: usize, col: usize| {
        let p = t[r][col];
        t[r].iter_mut().for_each(|x| *x /= p);
        for i in 0..t.len() {
            if i != r {
                let f = t[i][col];
                if f != 0.0 {
                    for j in 0..w {
                        t[i][j] -= f * t[r][j];
                    }
                }
            }
        }
    };
    let run = |t: &mut Vec<Vec<f64>>, basis: &mut Vec<usize>, cost: &[f64], allowed: usize| loop {
        let reduced = |j: usize, t: &Vec<Vec<f64>>, basis: &Vec<usize>| {
            cost[j] - (0..m).map(|i| cost[basis[i]] * t[i][j]).sum::<f64>()
        };
        let Some(col) = (0..allowed).find(|&j| !basis.contains(&j) && reduced(j, t, basis) < -1e-12) else {
            break;
        };
        let mut best: Option<(f64, usize)> = None;
        for i in 0..m {
            if t[i][col] > 1e-12 {
                let ratio = t[i][w - 1] / t[i][col];
                if best.is_none_or(|(r, bi)| ratio < r - 1e-15 || (ratio <= r + 1e-15 && basis[i] < basis[bi])) {
                    best = Some((ratio, i));
                }
            }
        }
        let (_, r) = best.expect("bounded");
        pivot(t, r, col);
        basis[r] = col;
    };
    let mut phase1 = vec![0.0; n + m];
    phase1[n..].iter_mut().for_each(|x| *x = 1.0);
    run(&mut t, &mut basis, &phase1, n + m);
    for r in 0..m {
        if basis[r] >= n {
            let col = (0..n).find(|&j| t[r][j].abs() > 1e-9).expect("full rank");
            pivot(&mut t, r, col);
            basis[r] = col;
        }
    }
    let mut cost = c.to_vec();
    cost.extend(std::iter::repeat_n(0.0, m));
    run(&mut t, &mut basis, &cost, n);
    (0..m).map(|i| c[basis[i]] * t[i][w - 1]).sum()
}

fn transport_oracle(p: &[f64], q: &[f64], d: impl Fn(usize, usize) -> f64) -> f64 {
    let n = p.len();
    let mut c = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            c.push(d(i, j));
        }
    }
    let mut a = Vec::new();
    let mut b = Vec::new();
    for i in 0..n {
        a.push((0..n * n).map(|v| if v / n == i { 1.0 } else { 0.0 }).collect());
        b.push(p[i]);
    }
    // the last column constraint follows from the others
    for j in 0..n - 1 {
        a.push((0..n * n).map(|v| if v % n == j { 1.0 } else { 0.0 }).collect());
        b.push(q[j]);
    }
    lp_min(&c, &a, &b)
}

fn random_state(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n)
        .map(|_| if rng.next_u32() % 3 == 0 { 0.0 } else { (rng.next_u64() >> 11) as f64 + 1.0 })
        .collect();
    if w.iter().all(|&x| x == 0.0) {
        w[0] = 1.0;
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    w
}

#[test]
fn lp_oracle_sanity() {
    // Two points at distance 3.
    let v = transport_oracle(&[1.0, 0.0], &[0.0, 1.0], |i, j| if i == j { 0.0 } else { 3.0 });
    assert!((v - 3.0).abs() < 1e-12);
}

#[test]
fn monge_kantorovich_matches_transport_lp() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for r in ALL {
        let s = solve(r);
        for k in 1..=3 {
            let words = s.spec().enumerate_cylinders(k);
            let n = words.len();
            for metric in [UltraMetric::Dyadic, UltraMetric::Gibbs] {
                let d = |i: usize, j: usize| -> f64 {
                    if i == j {
                        return 0.0;
                    }
                    match metric {
                        UltraMetric::Dyadic => common_prefix_metric(&words[i], &words[j]),
                        UltraMetric::Gibbs => {
                            let c = words[i].common_prefix_len(&words[j]);
                            oracle_mass(r, &words[i].symbols()[..c])
                        }
                    }
                };
                for _ in 0..5 {
                    let (pw, qw) = (random_state(&mut rng, n), random_state(&mut rng, n));
                    let p = State::new(s.spec(), k, pw.clone()).unwrap();
                    let q = State::new(s.spec(), k, qw.clone()).unwrap();
                    let got = monge_kantorovich(&s, &p, &q, metric).unwrap();
                    let want = transport_oracle(&pw, &qw, d);
                    assert!((got - want).abs() < 1e-10, "{r:?} {k} {metric:?} {got} {want}");
                }
            }
        }
    }
}

#[test]
fn monge_kantorovich_triangle_inequality() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let s = solve(Ref::Bernoulli);
    let n = s.spec().enumerate_cylinders(4).len();
    for _ in 0..50 {
        let st: Vec<State> = (0..3).map(|_| State::new(s.spec(), 4, random_state(&mut rng, n)).unwrap()).collect();
        for metric in [UltraMetric::Dyadic, UltraMetric::Gibbs] {
            let d = |a: &State, b: &State| monge_kantorovich(&s, a, b, metric).unwrap();
            assert!(d(&st[0], &st[2]) <= d(&st[0], &st[1]) + d(&st[1], &st[2]) + 1e-12);
            assert!((d(&st[0], &st[1]) - d(&st[1], &st[0])).abs() < 1e-14);
        }
    }
}

#[test]
fn level_one_matches_grid_oracle() {
    // On the full 2-shift the level-one block is D̂ = I − ssᵀ with
    // s = (2^{-1/2}, 2^{-1/2}), so ‖[D̂, diag a]‖ = |a₁ − a₂|/2.
    let s = solve(Ref::Uniform);
    let d = build_dirac(&s);
    let cases = [([1.0, 0.0], [0.0, 1.0]), ([0.8, 0.2], [0.3, 0.7]), ([0.55, 0.45], [0.5, 0.5])];
    for (pw, qw) in cases {
        let p = State::new(s.spec(), 1, pw.to_vec()).unwrap();
        let q = State::new(s.spec(), 1, qw.to_vec()).unwrap();
        let mut best: f64 = 0.0;
        let steps = 600;
        for i in 0..=steps {
            for j in 0..=steps {
                let a = [-3.0 + 6.0 * i as f64 / steps as f64, -3.0 + 6.0 * j as f64 / steps as f64];
                let norm = 0.5 * (a[0] - a[1]).abs();
                if norm <= 1.0 + 1e-12 {
                    let obj = (pw[0] - qw[0]) * a[0] + (pw[1] - qw[1]) * a[1];
                    best = best.max(obj.abs());
                }
            }
        }
        let e = connes_distance(&d, &p, &q, 1, OptParams::default(), None).unwrap();
        assert!((e.value - best).abs() < 1e-6, "{pw:?} {} {best}", e.value);
        let lib = commutator_norm(&d, &LevelFunction::new(s.spec(), 1, vec![0.3, -1.1]).unwrap()).unwrap();
        assert!((lib - 0.7).abs() < 1e-12);
    }
}

#[test]
fn distances_do_not_decrease_with_level() {
    for r in ALL {
        let s = solve(r);
        let d = build_dirac(&s);
        let p = State::point(s.spec(), &word(&[0])).unwrap();
        let q = State::point(s.spec(), &word(&[1])).unwrap();
        let es = connes_distance_levels(&d, &p, &q, 1, 4, OptParams::default()).unwrap();
        for w in es.windows(2) {
            assert!(w[1].value >= w[0].value * (1.0 - 1e-12), "{r:?} {} {}", w[0].value, w[1].value);
        }
        for e in &es {
            let c = &e.certificate;
            let op = Commutator::new(&d, c.level).unwrap();
            assert!((op.norm(&c.function).unwrap() - 1.0).abs() < 1e-9);
            let lifted_p = p.lift(&s, Measure::Equilibrium, c.level).unwrap();
            let lifted_q = q.lift(&s, Measure::Equilibrium, c.level).unwrap();
            let obj = lifted_p.evaluate(&c.function) - lifted_q.evaluate(&c.function);
            assert!((obj.abs() - e.value).abs() < 1e-9);
        }
        if let Ok(pc) = proof_constants(&s) {
            for e in &es {
                assert!(e.max_oscillation <= pc.bound, "{r:?} {} {}", e.max_oscillation, pc.bound);
            }
        }
    }
}

#[test]
fn golden_mean_has_no_proof_constants() {
    let s = solve(Ref::Golden);
    assert!(matches!(proof_constants(&s), Err(Error::NotNormalized { .. })));
}

#[test]
fn equal_states_have_no_ascent() {
    let s = solve(Ref::Uniform);
    let d = build_dirac(&s);
    let p = State::point(s.spec(), &word(&[0, 1])).unwrap();
    assert!(matches!(connes_distance(&d, &p, &p, 2, OptParams::default(), None), Err(Error::NoAscent)));
    let rep = weak_star_consistency(&d, &[p.clone(), p.clone()], &p, 2, OptParams::default()).unwrap();
    assert_eq!(rep.distances, vec![0.0, 0.0]);
}

#[test]
fn weak_star_sequence_shrinks_linearly() {
    let s = solve(Ref::Bernoulli);
    let d = build_dirac(&s);
    let p = State::point(s.spec(), &word(&[0, 0])).unwrap();
    let q = State::point(s.spec(), &word(&[1, 1])).unwrap();
    let params = OptParams { restarts: 8, iterations: 300, seed: 1 };
    let seq: Vec<State> = (1..=6).map(|n| q.mix(&p, 1.0 / n as f64).unwrap()).collect();
    let rep = weak_star_consistency(&d, &seq, &p, 2, params).unwrap();
    assert!(rep.monotone);
    let full = rep.distances[0];
    for (n, v) in rep.distances.iter().enumerate() {
        let want = full / (n + 1) as f64;
        assert!((v - want).abs() < 1e-6 * full, "{n} {v} {want}");
    }
}

#[test]
fn symmetric_and_triangle_within_spread() {
    let s = solve(Ref::Bernoulli);
    let d = build_dirac(&s);
    let st: Vec<State> = [[0u8, 0], [0, 1], [1, 1]].iter().map(|w| State::point(s.spec(), &word(w)).unwrap()).collect();
    let params = OptParams::default();
    let dist = |a: &State, b: &State| connes_distance(&d, a, b, 2, params, None).unwrap().value;
    let (ab, ba) = (dist(&st[0], &st[1]), dist(&st[1], &st[0]));
    assert!((ab - ba).abs() < 1e-6 * ab);
    assert!(dist(&st[0], &st[2]) <= ab + dist(&st[1], &st[2]) + 1e-6);
}

fn level_values(which: usize, k: usize, vals: &[f64]) -> LevelFunction {
    let spec = spec(ALL[which]);
    let n = spec.enumerate_cylinders(k).len();
    LevelFunction::new(&spec, k, vals.iter().cycle().take(n).copied().collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]
    #[test]
    fn commutator_norm_is_a_seminorm(
        which in 0usize..3,
        k in 1usize..=3,
        vals in proptest::collection::vec(-4.0f64..4.0, 8),
        c in -10.0f64..10.0,
    ) {
        let s = solve(ALL[which]);
        let d = build_dirac(&s);
        let a = level_values(which, k, &vals);
        let base = commutator_norm(&d, &a).unwrap();
        for lam in [-2.0, -1.0, 0.5, 3.0] {
            let scaled = LevelFunction { level: k, values: a.values.iter().map(|v| lam * v).collect() };
            let n = commutator_norm(&d, &scaled).unwrap();
            prop_assert!((n - lam.abs() * base).abs() <= 1e-10 * base.max(1.0));
        }
        let shifted = LevelFunction { level: k, values: a.values.iter().map(|v| v + c).collect() };
        prop_assert!((commutator_norm(&d, &shifted).unwrap() - base).abs() <= 1e-10 * base.max(1.0));
    }
}

#[test]
fn constants_commute() {
    let s = solve(Ref::Golden);
    let d = build_dirac(&s);
    let one = LevelFunction::constant(s.spec(), 3, 4.2);
    assert!(commutator_norm(&d, &one).unwrap() < 1e-12);
    let ind = LevelFunction::indicator(s.spec(), &Word::new(vec![0]), 2).unwrap();
    assert!(commutator_norm(&d, &ind).unwrap() > 0.0);
}
