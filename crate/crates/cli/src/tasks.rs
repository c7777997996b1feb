//! One function per task; each fills an [`Outputs`] and returns its report.

use std::path::PathBuf;

use gibbs_core::duality::{
    connes_distance_levels, monge_kantorovich, proof_constants, OptParams, State, UltraMetric,
};
use gibbs_core::haar::{canonical_rotation, ChildOrder, HaarPlan};
use gibbs_core::renewal::{counting_profile, krw_surrogate, lalley_sum, upsilon_comparability, xi_slope};
use gibbs_core::sft::{LevelFunction, Word};
use gibbs_core::spectral::{
    build_dirac, dimension_estimators, dixmier_integral, partial_dixmier, summability_report,
    StreamOptions, DEFAULT_NODE_BUDGET,
};
use gibbs_core::thermo::{
    pressure_function, solve_thermo, strictly_negative, Measure, SolveOptions, ThermoSolution,
};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{parse_word, ExperimentConfig, Params, Task};
use crate::error::{CliError, CliResult, Op};
use crate::output::{Manifest, Outputs, Report, Table};

/// Command-line overrides.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub budget_nodes: Option<usize>,
    pub checkpoints: Option<Vec<usize>>,
}

pub const OUT_DIR_ENV: &str = "GIBBS_OUT_DIR";

#[derive(Debug)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub report: String,
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    p: &'a Params,
    seed: u64,
    budget: usize,
    checkpoints: Option<Vec<usize>>,
}

fn solve_opts(p: &Params) -> SolveOptions {
    let d = SolveOptions::default();
    SolveOptions {
        tol: p.tol.unwrap_or(d.tol),
        max_iter: p.max_iter.unwrap_or(d.max_iter),
    }
}

fn solve(ctx: &Ctx<'_>, report: &mut Report) -> CliResult<ThermoSolution> {
    let sol = solve_thermo(&ctx.cfg.spec, &ctx.cfg.potential, solve_opts(ctx.p)).op("thermo::solve_thermo")?;
    report.real("pressure", sol.pressure, "thermo::solve_thermo");
    report.real("entropy", sol.entropy, "thermo::solve_thermo");
    Ok(sol)
}

pub fn run(cfg: &ExperimentConfig, opts: &RunOptions) -> CliResult<RunSummary> {
    let seed = opts.seed.unwrap_or(cfg.seed);
    let dir = opts
        .out_dir
        .clone()
        .or_else(|| cfg.output.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("gibbs-out"));
    let checkpoints = opts.checkpoints.clone().or_else(|| cfg.params.checkpoints.clone());
    if let Some(c) = &checkpoints {
        if c.is_empty() || c.windows(2).any(|w| w[0] >= w[1]) || c[0] < 2 {
            return Err(CliError::Config("checkpoints must increase from at least 2".into()));
        }
    }
    let ctx = Ctx {
        cfg,
        p: &cfg.params,
        seed,
        budget: opts
            .budget_nodes
            .or(cfg.params.budget_nodes)
            .unwrap_or(DEFAULT_NODE_BUDGET),
        checkpoints,
    };
    let manifest = Manifest {
        config_sha256: cfg.sha256.clone(),
        seed,
        task: cfg.task.name(),
    };
    let mut out = Outputs::new(dir, manifest);
    let mut report = Report::default();
    report.heading(cfg.task.name());
    let checked = match cfg.task {
        Task::Thermo => thermo(&ctx, &mut out, &mut report),
        Task::HaarCheck => haar_check(&ctx, &mut out, &mut report),
        Task::Spectrum => spectrum(&ctx, &mut out, &mut report),
        Task::Dixmier => dixmier(&ctx, &mut out, &mut report),
        Task::Renewal => renewal(&ctx, &mut out, &mut report),
        Task::Connes => connes(&ctx, &mut out, &mut report),
    }?;
    let text = out.report(&report);
    let files = out.write()?;
    checked?;
    Ok(RunSummary {
        files,
        report: text,
    })
}

/// The outer result aborts the run; the inner one is a failed check that
/// still writes its artifacts.
type TaskResult = CliResult<CliResult<()>>;

fn thermo(ctx: &Ctx<'_>, out: &mut Outputs, r: &mut Report) -> TaskResult {
    let sol = solve(ctx, r)?;
    r.real("beta", sol.beta, "thermo::normalize_potential");
    r.real("gamma", sol.gamma, "thermo::normalize_potential");
    r.int("strictly_negative", strictly_negative(&sol), "thermo::normalize_potential");
    r.real("gibbs_c", sol.gibbs_c, "thermo::solve_thermo");
    r.real("residual", sol.residual, "thermo::solve_thermo");
    r.int("iterations", sol.iterations, "thermo::solve_thermo");
    let depth = ctx.p.gibbs_depth.unwrap_or(12);
    r.int("gibbs_depth", depth, "thermo::gibbs_ratio_range");
    let mut sandwich = true;
    for (name, kind) in [("mu", Measure::Eigen), ("nu", Measure::Equilibrium)] {
        let (lo, hi) = sol.gibbs_ratio_range(kind, depth);
        r.real(&format!("gibbs_ratio_min_{name}"), lo, "thermo::gibbs_ratio_range");
        r.real(&format!("gibbs_ratio_max_{name}"), hi, "thermo::gibbs_ratio_range");
        sandwich &= lo >= 1.0 / sol.gibbs_c && hi <= sol.gibbs_c;
    }
    r.line(if sandwich {
        "Gibbs sandwich holds to the reported depth"
    } else {
        "Gibbs sandwich FAILS"
    });
    let mut masses = Table::new(&["word", "mu", "nu"]);
    for k in 1..=ctx.p.mass_depth.unwrap_or(3) {
        for w in ctx.cfg.spec.enumerate_cylinders(k) {
            masses.push(vec![
                w.to_string().into(),
                sol.cylinder_mass(&w, Measure::Eigen).op("thermo::cylinder_mass")?.into(),
                sol.cylinder_mass(&w, Measure::Equilibrium).op("thermo::cylinder_mass")?.into(),
            ]);
        }
    }
    out.csv("masses.csv", &masses);
    if let Some(ts) = &ctx.p.pressure_t {
        let table = pressure_function(&ctx.cfg.spec, &ctx.cfg.potential, ts, solve_opts(ctx.p))
            .op("thermo::pressure_function")?;
        let mut t = Table::new(&["t", "p", "dp", "d2p"]);
        for pt in &table.points {
            t.push(vec![pt.t.into(), pt.p.into(), pt.dp.into(), pt.d2p.into()]);
        }
        out.csv("pressure.csv", &t);
        r.int("pressure_convex", table.convex, "thermo::pressure_function");
    }
    Ok(if sandwich {
        Ok(())
    } else {
        Err(CliError::Check("Gibbs sandwich".into()))
    })
}

fn child_order(p: &Params) -> CliResult<ChildOrder> {
    match p.child_order.as_deref() {
        None | Some("ascending") => Ok(ChildOrder::Ascending),
        Some("descending") => Ok(ChildOrder::Descending),
        Some(o) => Err(CliError::Config(format!("unknown child_order {o:?}"))),
    }
}

fn haar_check(ctx: &Ctx<'_>, out: &mut Outputs, r: &mut Report) -> TaskResult {
    let sol = solve(ctx, r)?;
    let plan = HaarPlan::new(&sol).ordered(child_order(ctx.p)?);
    let v2 = canonical_rotation(2).op("haar::canonical_rotation")?;
    r.line(format!(
        "V_2 = [[{}, {}], [{}, {}]]  [haar::canonical_rotation]",
        crate::output::real(v2[(0, 0)]),
        crate::output::real(v2[(0, 1)]),
        crate::output::real(v2[(1, 0)]),
        crate::output::real(v2[(1, 1)])
    ));
    let depth = ctx.p.depth.unwrap_or(6);
    let g = plan.gram_matrix(depth).op("haar::gram_matrix")?;
    r.int("depth", depth, "haar::gram_matrix");
    r.int("dimension", g.dimension, "haar::gram_matrix");
    r.real("gram_deviation", g.deviation, "haar::gram_matrix");
    let ok = g.deviation < 1e-10;
    r.line(if ok {
        "Gram deviation < 1e-10"
    } else {
        "Gram deviation >= 1e-10"
    });
    let dump = ctx.p.basis_dump_depth.unwrap_or(2).min(depth);
    let basis = plan.basis(dump).op("haar::basis")?;
    let words = ctx.cfg.spec.enumerate_cylinders(dump + 1);
    let mut t = Table::new(&["label", "cylinder", "value"]);
    for b in &basis {
        for (w, v) in words.iter().zip(&b.values) {
            t.push(vec![b.label.to_string().into(), w.to_string().into(), (*v).into()]);
        }
    }
    out.csv("basis.csv", &t);
    Ok(if ok {
        Ok(())
    } else {
        Err(CliError::Check("Gram deviation".into()))
    })
}

fn default_checkpoints(n: usize) -> Vec<usize> {
    vec![(n / 4).max(2), (n / 2).max(3), n.max(4)]
}

fn spectrum(ctx: &Ctx<'_>, out: &mut Outputs, r: &mut Report) -> TaskResult {
    let sol = solve(ctx, r)?;
    let model = build_dirac(&sol);
    let x = parse_word(ctx.p.restriction.as_deref().unwrap_or(""))?;
    let checkpoints = ctx
        .checkpoints
        .clone()
        .unwrap_or_else(|| default_checkpoints(ctx.p.n.unwrap_or(100_000)));
    let n = ctx.p.n.unwrap_or(0).max(*checkpoints.last().unwrap());
    let opts = StreamOptions {
        node_budget: ctx.budget,
        include_boundary: ctx.p.include_boundary.unwrap_or(false),
    };
    let mut stream = model.singular_values(&x, opts).op("spectral::singular_values")?;
    let values = stream.take_values(n).op("spectral::singular_values")?;
    r.line(format!("restriction = {x}"));
    r.int("values", values.len(), "spectral::singular_values");
    r.int("nodes_visited", stream.nodes_visited(), "spectral::singular_values");
    if let Some(b) = stream.boundary_value() {
        r.real("boundary_value", b, "spectral::singular_values");
    }
    let mut t = Table::new(&["k", "value", "kind", "word", "index"]);
    for (k, v) in values.iter().take(ctx.p.dump.unwrap_or(1000)).enumerate() {
        t.push(vec![
            (k + 1).into(),
            v.value.into(),
            format!("{:?}", v.label.kind).to_lowercase().into(),
            v.label.word.to_string().into(),
            v.label.index.into(),
        ]);
    }
    out.csv("spectrum.csv", &t);
    let nums: Vec<f64> = values.iter().map(|v| v.value).collect();
    let pd = partial_dixmier(&nums, &checkpoints).op("spectral::partial_dixmier")?;
    let mut d = Table::new(&["N", "partial_sum", "normalized"]);
    for &(cn, norm) in &pd.rows {
        let sum: f64 = nums[..cn.min(nums.len())].iter().sum();
        d.push(vec![cn.into(), sum.into(), norm.into()]);
    }
    out.csv("dixmier.csv", &d);
    r.real("normalized_sum", pd.rows.last().unwrap().1, "spectral::partial_dixmier");
    r.real("checkpoint_spread", pd.spread, "spectral::partial_dixmier");
    let reference = sol.cylinder_mass(&x, Measure::Equilibrium).op("thermo::cylinder_mass")? / sol.entropy;
    r.real("reference", reference, "thermo::solve_thermo");
    if ctx.p.dimensions.unwrap_or(true) && nums.len() >= 64 {
        let xs: Vec<f64> = nums.iter().map(|v| 1.0 / v).collect();
        let e = dimension_estimators(&xs).op("spectral::dimension_estimators")?;
        let mut t = Table::new(&["estimator", "value"]);
        for (name, v) in [("d1", e.d1), ("d2", e.d2), ("d3", e.d3), ("d4", e.d4)] {
            t.push(vec![name.into(), v.into()]);
            r.real(name, v, "spectral::dimension_estimators");
        }
        out.csv("dimensions.csv", &t);
    }
    if x.is_empty() {
        let ps = ctx.p.p_values.clone().unwrap_or_else(|| vec![2.0, 0.5]);
        let rows = summability_report(&model, &ps, &checkpoints, opts).op("spectral::summability_report")?;
        let mut t = Table::new(&["p", "N", "sum", "normalized"]);
        for row in &rows {
            for &(cn, s, norm) in &row.checkpoints {
                t.push(vec![row.p.into(), cn.into(), s.into(), norm.into()]);
            }
            let verdict = match (row.converges, row.diverges) {
                (true, _) => "converges",
                (_, true) => "diverges",
                _ => "undecided",
            };
            r.line(format!("p = {}: {verdict}  [spectral::summability_report]", row.p));
        }
        out.csv("summability.csv", &t);
    }
    Ok(Ok(()))
}

fn dixmier(ctx: &Ctx<'_>, out: &mut Outputs, r: &mut Report) -> TaskResult {
    let sol = solve(ctx, r)?;
    let model = build_dirac(&sol);
    let checkpoints = ctx
        .checkpoints
        .clone()
        .unwrap_or_else(|| default_checkpoints(ctx.p.n.unwrap_or(100_000)));
    let opts = StreamOptions {
        node_budget: ctx.budget,
        include_boundary: ctx.p.include_boundary.unwrap_or(false),
    };
    let cylinders: Vec<Word> = match &ctx.p.cylinders {
        Some(c) => c.iter().map(|s| parse_word(s)).collect::<CliResult<_>>()?,
        None => std::iter::once(Word::empty())
            .chain((0..ctx.cfg.spec.alphabet_size() as u8).map(|a| Word::new(vec![a])))
            .collect(),
    };
    let mut t = Table::new(&["cylinder", "N", "normalized", "reference"]);
    for x in &cylinders {
        let a = LevelFunction::indicator(&ctx.cfg.spec, x, x.len().max(1)).op("sft::indicator")?;
        let e = dixmier_integral(&model, &a, &checkpoints, opts).op("spectral::dixmier_integral")?;
        for &(n, v) in &e.rows {
            t.push(vec![x.to_string().into(), n.into(), v.into(), e.reference.into()]);
        }
        r.line(format!("cylinder {x}"));
        r.real("  estimate", e.estimate, "spectral::dixmier_integral");
        r.real("  reference", e.reference, "spectral::dixmier_integral");
        r.real("  rel_error", (e.estimate - e.reference) / e.reference, "spectral::dixmier_integral");
        r.real("  spread", e.spread, "spectral::dixmier_integral");
    }
    out.csv("dixmier.csv", &t);
    Ok(Ok(()))
}

fn logspace(hi: f64, lo: f64, points: usize) -> Vec<f64> {
    let (a, b) = (hi.log10(), lo.log10());
    (0..points)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (points - 1) as f64))
        .collect()
}

fn renewal(ctx: &Ctx<'_>, out: &mut Outputs, r: &mut Report) -> TaskResult {
    let sol = solve(ctx, r)?;
    let kind = Measure::Equilibrium;
    let x = parse_word(ctx.p.restriction.as_deref().unwrap_or(""))?;
    r.line(format!("restriction = {x}"));
    let ts = ctx.p.t_grid.clone().unwrap_or_else(|| logspace(1e-2, 1e-6, 17));
    let prof = counting_profile(&sol, kind, &x, &ts).op("renewal::counting_profile")?;
    let mut t = Table::new(&["t", "upsilon", "xi"]);
    for i in 0..ts.len() {
        t.push(vec![ts[i].into(), prof.upsilon[i].into(), prof.xi[i].into()]);
    }
    out.csv("renewal.csv", &t);
    match upsilon_comparability(&sol, kind, &x, &ts) {
        Ok(c) => {
            r.real("c1", c.c1, "renewal::upsilon_comparability");
            r.real("c2", c.c2, "renewal::upsilon_comparability");
            r.real("band_ratio", c.ratio, "renewal::upsilon_comparability");
        }
        Err(e) => r.line(format!("comparability skipped: {e}")),
    }
    let rs = ctx
        .p
        .r_grid
        .clone()
        .unwrap_or_else(|| (0..=12).map(|i| 8.0 + 0.5 * i as f64).collect());
    let sl = xi_slope(&sol, kind, &x, &rs).op("renewal::xi_slope")?;
    r.real("xi_slope", sl.slope, "renewal::xi_slope");
    r.real("xi_reference", sl.reference, "renewal::xi_slope");
    r.real("xi_rel_error", sl.rel_error, "renewal::xi_slope");
    let mut t = Table::new(&["r", "xi", "fit"]);
    for &(rr, xi, fit) in &sl.rows {
        t.push(vec![rr.into(), xi.into(), fit.into()]);
    }
    out.csv("xi_slope.csv", &t);
    if let Some(lr) = &ctx.p.lalley_r {
        let anchor = parse_word(ctx.p.anchor.as_deref().unwrap_or("1"))?;
        let mut t = Table::new(&["r", "value", "scaled"]);
        for &rr in lr {
            let v = lalley_sum(&sol, &anchor, &x, rr, ctx.budget).op("renewal::lalley_sum")?;
            t.push(vec![rr.into(), v.value.into(), v.scaled.into()]);
        }
        out.csv("lalley.csv", &t);
    }
    if let Some(kt) = ctx.p.krw_t {
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
        let k = krw_surrogate(&sol, kt, ctx.p.krw_samples.unwrap_or(10_000), &mut rng)
            .op("renewal::krw_surrogate")?;
        r.real("krw_mean", k.mean, "renewal::krw_surrogate");
        r.real("krw_std_error", k.std_error, "renewal::krw_surrogate");
        r.real("krw_reference", k.reference, "renewal::krw_surrogate");
    }
    Ok(Ok(()))
}

fn connes(ctx: &Ctx<'_>, out: &mut Outputs, r: &mut Report) -> TaskResult {
    let sol = solve(ctx, r)?;
    let model = build_dirac(&sol);
    let spec = &ctx.cfg.spec;
    let pw = parse_word(ctx.p.p.as_deref().unwrap_or_default())?;
    let qw = parse_word(ctx.p.q.as_deref().unwrap_or_default())?;
    let p = State::point(spec, &pw).op("duality::State")?;
    let q = State::point(spec, &qw).op("duality::State")?;
    let from = ctx.p.k_from.unwrap_or(pw.len().max(qw.len()).max(1));
    let to = ctx.p.k_to.unwrap_or(from + 3);
    if to < from || from < pw.len().max(qw.len()) {
        return Err(CliError::Config("need max(|p|, |q|) <= k_from <= k_to".into()));
    }
    let d = OptParams::default();
    let params = OptParams {
        restarts: ctx.p.restarts.unwrap_or(d.restarts),
        iterations: ctx.p.iterations.unwrap_or(d.iterations),
        seed: ctx.seed,
    };
    r.line(format!("p = point mass on {pw}, q = point mass on {qw}"));
    let bound = match proof_constants(&sol) {
        Ok(pc) => {
            r.real("c_prime", pc.c_prime, "duality::proof_constants");
            r.real("oscillation_bound", pc.bound, "duality::proof_constants");
            r.real("diameter_bound", 2.0 * pc.bound, "duality::proof_constants");
            Some(pc.bound)
        }
        Err(e) => {
            r.line(format!("proof constants unavailable: {e}  [duality::proof_constants]"));
            None
        }
    };
    let levels = connes_distance_levels(&model, &p, &q, from, to, params).op("duality::connes_distance")?;
    let mut t = Table::new(&["k", "distance", "mk_dyadic", "mk_gibbs", "ratio_dyadic", "ratio_gibbs"]);
    let mut cert = Table::new(&["k", "word", "a"]);
    let mut within = true;
    for e in &levels {
        let k = e.certificate.level;
        let pk = p.lift(&sol, Measure::Equilibrium, k).op("duality::State::lift")?;
        let qk = q.lift(&sol, Measure::Equilibrium, k).op("duality::State::lift")?;
        let dy = monge_kantorovich(&sol, &pk, &qk, UltraMetric::Dyadic).op("duality::monge_kantorovich")?;
        let gi = monge_kantorovich(&sol, &pk, &qk, UltraMetric::Gibbs).op("duality::monge_kantorovich")?;
        t.push(vec![k.into(), e.value.into(), dy.into(), gi.into(), (e.value / dy).into(), (e.value / gi).into()]);
        for (w, a) in spec.enumerate_cylinders(k).iter().zip(&e.certificate.function) {
            cert.push(vec![k.into(), w.to_string().into(), (*a).into()]);
        }
        r.real(&format!("distance_k{k}"), e.value, "duality::connes_distance");
        r.real(&format!("max_oscillation_k{k}"), e.max_oscillation, "duality::connes_distance");
        if let Some(b) = bound {
            within &= e.max_oscillation <= b;
        }
    }
    let monotone = levels.windows(2).all(|w| w[1].value >= w[0].value * (1.0 - 1e-12));
    r.int("nondecreasing_in_k", monotone, "duality::connes_distance");
    if bound.is_some() {
        r.int("iterates_within_bound", within, "duality::connes_distance");
    }
    out.csv("connes.csv", &t);
    out.csv("certificate.csv", &cert);
    Ok(Ok(()))
}
