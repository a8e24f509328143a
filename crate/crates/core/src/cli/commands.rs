//! Subcommand implementations. Each writes its tables under the output
//! directory and reports whether its `--check` condition holds.

use std::fmt::Write as _;
use std::path::Path;

use super::config::Settings;
use super::output::{write_plot_stub, Cell, Table};
use crate::acceptance::ibp_pairs;
use crate::dynamics::{simulate_coupled, simulate_replica, RunConfig};
use crate::error::Result;
use crate::gaussian::{
    renorm_constant, sample_gff_on, wick_exp, wick_exp_diff_norm_oracle, wick_power,
};
use crate::measure::WeightedMeasure;
use crate::rng::{StreamKey, INITIAL_STREAM};
use crate::snapshot::{SnapshotFile, SnapshotHeader};
use crate::spectral::{forward_field, inverse_transform, sobolev_norm, Grid, ModeSet, SpectralCutoff, Spectrum};
use crate::stats::MCEstimate;
use crate::verification::{
    comparison_experiment, contraction_experiment, dirichlet_ibp_check, invariance_test,
    per_replica, sn_statistic_sweep, standard_observables, SnConfig,
};

/// Subcommands that produce artifacts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommandKind {
    SampleGff,
    Simulate,
    ConvergeN,
    VerifyWick,
    SnDecay,
    Invariance,
    Ibp,
    Comparison,
    Contraction,
}

impl CommandKind {
    pub const ALL: [CommandKind; 9] = [
        Self::SampleGff,
        Self::Simulate,
        Self::ConvergeN,
        Self::VerifyWick,
        Self::SnDecay,
        Self::Invariance,
        Self::Ibp,
        Self::Comparison,
        Self::Contraction,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::SampleGff => "sample-gff",
            Self::Simulate => "simulate",
            Self::ConvergeN => "converge-n",
            Self::VerifyWick => "verify-wick",
            Self::SnDecay => "sn-decay",
            Self::Invariance => "invariance",
            Self::Ibp => "ibp",
            Self::Comparison => "comparison",
            Self::Contraction => "contraction",
        }
    }

    /// Defaults applied on top of the global ones.
    pub fn defaults(&self) -> &'static [(&'static str, &'static str)] {
        match self {
            Self::SampleGff => &[("replicas", "2000")],
            Self::Simulate => &[("replicas", "1")],
            Self::ConvergeN => &[("output_every", "40")],
            Self::VerifyWick => &[("replicas", "10000")],
            Self::SnDecay => &[("A", "3"), ("replicas", "200"), ("oversampling", "2")],
            Self::Invariance => &[("N", "0"), ("grid", "8"), ("dt", "1e-3"), ("replicas", "1000")],
            Self::Ibp => &[("N", "0"), ("grid", "8"), ("replicas", "20000")],
            Self::Comparison => &[("measure", "exp"), ("N", "3"), ("dt", "1e-3"), ("output_every", "10")],
            Self::Contraction => &[("N", "3"), ("dt", "1e-3"), ("output_every", "10")],
        }
    }

    pub fn run(&self, s: &Settings, out: &Path) -> Result<Option<bool>> {
        let ctx = Context::new(*self, s)?;
        match self {
            Self::SampleGff => sample_gff(&ctx, out),
            Self::Simulate => simulate_cmd(&ctx, out),
            Self::ConvergeN => converge_n(&ctx, out),
            Self::VerifyWick => verify_wick(&ctx, out),
            Self::SnDecay => sn_decay(&ctx, out),
            Self::Invariance => invariance(&ctx, out),
            Self::Ibp => ibp(&ctx, out),
            Self::Comparison => comparison(&ctx, out),
            Self::Contraction => contraction(&ctx, out),
        }
    }
}

/// Validated inputs shared by every subcommand.
struct Context<'a> {
    kind: CommandKind,
    s: &'a Settings,
    nu: WeightedMeasure,
    cfg: RunConfig,
}

impl<'a> Context<'a> {
    fn new(kind: CommandKind, s: &'a Settings) -> Result<Self> {
        let nu = s.measure()?;
        let cfg = s.run_config()?;
        if !matches!(kind, CommandKind::VerifyWick | CommandKind::SnDecay | CommandKind::SampleGff) {
            cfg.validate(&nu)?;
        }
        Ok(Self { kind, s, nu, cfg })
    }

    fn preamble(&self) -> String {
        let mut p = format!("# sqe {} {}\n", env!("CARGO_PKG_VERSION"), self.kind.name());
        p.push_str(&self.s.comment_block());
        let digest: String = self.nu.digest().iter().map(|b| format!("{b:02x}")).collect();
        let _ = writeln!(p, "# measure_digest = {digest}");
        p
    }

    fn emit(&self, out: &Path, tables: &[&Table]) -> Result<()> {
        std::fs::create_dir_all(out)?;
        let pre = self.preamble();
        for t in tables {
            t.write(out, &pre)?;
        }
        write_plot_stub(out, self.kind.name(), tables)
    }

    fn seeds(&self) -> Result<Vec<u64>> {
        let base = self.s.u64("seed")?;
        Ok((0..self.s.u64("seeds")?).map(|i| base + i).collect())
    }

    fn snapshot(&self, out: &Path, name: &str, phi: &Spectrum, time: f64) -> Result<()> {
        let grid = phi.grid();
        let field = inverse_transform(phi, grid)?;
        let header = SnapshotHeader {
            grid_size: grid.size() as u32,
            a: self.cfg.a,
            n: self.cfg.n,
            time,
            seed: self.cfg.seed,
            measure_digest: self.nu.digest(),
        };
        SnapshotFile::new(header, field.into_values())?.write(&out.join(name))
    }
}

fn nan_if_none(x: Option<f64>) -> f64 {
    x.unwrap_or(f64::NAN)
}

fn sample_gff(ctx: &Context, out: &Path) -> Result<Option<bool>> {
    let cutoff = ctx.cfg.cutoff()?;
    let grid = ctx.cfg.grid()?;
    let set = ModeSet::new(&cutoff, grid)?;
    let reps = ctx.cfg.replicas;
    let draws = per_replica(reps, |r| {
        Ok(sample_gff_on(&mut StreamKey::new(ctx.cfg.seed, r).stream(INITIAL_STREAM), &set))
    })?;
    let mut t = Table::new(
        "gff_modes",
        &[
            ("l1", "first mode index"),
            ("l2", "second mode index"),
            ("lambda", "1 + |l|^2"),
            ("variance", "Monte Carlo mean of |phi_hat(l)|^2"),
            ("std_error", "standard error of variance"),
            ("expected", "exact variance 1 / lambda"),
            ("z", "|variance - expected| / std_error"),
        ],
    );
    for e in set.entries() {
        let v: Vec<f64> = draws.iter().map(|d| d.raw()[e.offset].norm_sqr()).collect();
        let est = MCEstimate::from_samples(&v)?;
        let expected = 1.0 / e.lambda;
        t.push(vec![
            Cell::S(e.mode.0.to_string()),
            Cell::S(e.mode.1.to_string()),
            e.lambda.into(),
            est.mean.into(),
            est.std_error.into(),
            expected.into(),
            est.z_score(expected).into(),
        ]);
    }
    ctx.emit(out, &[&t])?;
    if ctx.s.bool("snapshots")? {
        ctx.snapshot(out, "gff_r0.sqesnap", &draws[0], 0.0)?;
    }
    Ok(None)
}

fn simulate_cmd(ctx: &Context, out: &Path) -> Result<Option<bool>> {
    let scheme = ctx.s.scheme()?;
    let dt = ctx.cfg.time_step()?;
    let trajs = per_replica(ctx.cfg.replicas, |r| simulate_replica(&ctx.cfg, &ctx.nu, scheme, r))?;
    let mut t = Table::new(
        "trajectory",
        &[
            ("replica", "replica index"),
            ("step", "time step index"),
            ("time", "simulation time"),
            ("l2_norm", "L2 norm of the field"),
            ("h_minus_beta_norm", "H^{-beta} norm of the field"),
            ("mean", "spatial mean of the field"),
            ("min", "grid minimum"),
            ("max", "grid maximum"),
        ],
    );
    let mut summary = Table::new(
        "trajectory_summary",
        &[
            ("replica", "replica index"),
            ("steps", "time steps taken"),
            ("final_time", "time of the last state"),
            ("clamp_events", "exponent evaluations hitting the clamp"),
        ],
    );
    for (r, traj) in trajs.iter().enumerate() {
        for (k, st) in traj.states.iter().enumerate() {
            let f = inverse_transform(&st.phi, st.phi.grid())?;
            let step = (st.time / dt).round() as u64;
            t.push(vec![
                r.into(),
                step.into(),
                st.time.into(),
                st.phi.norm_sq().sqrt().into(),
                sobolev_norm(&st.phi, -ctx.cfg.beta).into(),
                f.mean().into(),
                f.min().into(),
                f.max().into(),
            ]);
            if r == 0 && ctx.s.bool("snapshots")? {
                ctx.snapshot(out_dir(out)?, &format!("snap_r0_{k:05}.sqesnap"), &st.phi, st.time)?;
            }
        }
        let last = traj.states.last().expect("initial state is recorded");
        summary.push(vec![
            r.into(),
            ((last.time / dt).round() as u64).into(),
            last.time.into(),
            traj.clamp_events.into(),
        ]);
    }
    ctx.emit(out, &[&t, &summary])?;
    Ok(None)
}

fn out_dir(out: &Path) -> Result<&Path> {
    std::fs::create_dir_all(out)?;
    Ok(out)
}

fn converge_n(ctx: &Context, out: &Path) -> Result<Option<bool>> {
    let lo = ctx.s.u32("n_min")?;
    let hi = ctx.s.u32("n_max")?;
    if lo > hi {
        return Err(crate::SqeError::InvalidConfig("n_min exceeds n_max".into()));
    }
    let ns: Vec<u32> = (lo..=hi + 1).collect();
    let top = RunConfig { n: hi + 1, ..ctx.cfg.clone() };
    top.validate(&ctx.nu)?;
    let seeds = ctx.seeds()?;
    let mut t = Table::new(
        "converge",
        &[
            ("seed", "seed of the coupled runs"),
            ("n", "cutoff level N"),
            ("sup_diff", "max over recorded t of ||Phi^{N+1}_t - Phi^N_t||_{H^{-beta}}"),
        ],
    );
    let mut summary = Table::new(
        "converge_summary",
        &[("seed", "seed"), ("strictly_decreasing", "sup_diff strictly decreasing in N")],
    );
    let mut good = 0;
    for &seed in &seeds {
        let runs = simulate_coupled(&RunConfig { seed, ..ctx.cfg.clone() }, &ctx.nu, &ns, 0)?;
        let mut sups = Vec::new();
        for (w, &n) in runs.windows(2).zip(&ns) {
            let mut m = 0.0f64;
            for (a, b) in w[0].states.iter().zip(&w[1].states) {
                m = m.max(sobolev_norm(&b.phi.sub(&a.phi)?, -ctx.cfg.beta));
            }
            t.push(vec![seed.into(), n.into(), m.into()]);
            sups.push(m);
        }
        let dec = sups.windows(2).all(|w| w[1] < w[0]);
        good += dec as usize;
        summary.push(vec![seed.into(), dec.into()]);
    }
    ctx.emit(out, &[&t, &summary])?;
    Ok(Some(good * 10 >= 8 * seeds.len()))
}

fn verify_wick(ctx: &Context, out: &Path) -> Result<Option<bool>> {
    let reps = ctx.cfg.replicas;
    let seed = ctx.cfg.seed;
    let mut ok = true;
    let mut exp_t = Table::new(
        "wick_exp",
        &[
            ("radius", "cutoff radius K"),
            ("alpha", "coupling"),
            ("mean", "Monte Carlo mean of exp_N(alpha phi)(0)"),
            ("std_error", "standard error"),
            ("target", "exact mean"),
            ("z", "|mean - target| / std_error"),
        ],
    );
    let alphas = ctx.s.f64_list("alphas")?;
    for k in ctx.s.f64_list("radii")? {
        let c = SpectralCutoff::from_radius(k)?;
        let grid = Grid::for_cutoff(&c, 4.0);
        let set = ModeSet::new(&c, grid)?;
        let draws = per_replica(reps, |r| Ok(sample_gff_on(&mut StreamKey::new(seed, r).stream(INITIAL_STREAM), &set)))?;
        for &alpha in &alphas {
            let v: Vec<f64> = draws
                .iter()
                .map(|phi| Ok(wick_exp(phi, alpha, &c, grid)?.at(0, 0)))
                .collect::<Result<_>>()?;
            let e = MCEstimate::from_samples(&v)?;
            ok &= e.within(1.0, 3.0);
            exp_t.push(vec![k.into(), alpha.into(), e.mean.into(), e.std_error.into(), 1.0.into(), e.z_score(1.0).into()]);
        }
    }

    let mut pow_t = Table::new(
        "wick_powers",
        &[
            ("radius", "cutoff radius K"),
            ("n", "Wick power"),
            ("mean", "Monte Carlo mean of the spatial average of :(P_N phi)^n:^2"),
            ("std_error", "standard error"),
            ("target", "n! C_N^n"),
            ("z", "|mean - target| / std_error"),
        ],
    );
    let k = ctx.s.f64("power_radius")?;
    let c = SpectralCutoff::from_radius(k)?;
    let grid = Grid::for_cutoff(&c, 4.0);
    let set = ModeSet::new(&c, grid)?;
    let cn = renorm_constant(&c).value;
    let draws = per_replica(reps, |r| Ok(sample_gff_on(&mut StreamKey::new(seed, r).stream(INITIAL_STREAM), &set)))?;
    for n in 1..=ctx.s.u32("powers")? {
        let v: Vec<f64> = draws
            .iter()
            .map(|phi| Ok(wick_power(phi, n, &c, grid)?.map(|x| x * x).mean()))
            .collect::<Result<_>>()?;
        let e = MCEstimate::from_samples(&v)?;
        let target = (1..=n).map(f64::from).product::<f64>() * cn.powi(n as i32);
        ok &= e.within(target, 3.0);
        pow_t.push(vec![k.into(), n.into(), e.mean.into(), e.std_error.into(), target.into(), e.z_score(target).into()]);
    }

    let mut or_t = Table::new(
        "wick_oracle",
        &[
            ("A", "cutoff base"),
            ("N", "cutoff level"),
            ("alpha", "coupling"),
            ("beta", "Sobolev index"),
            ("mean", "Monte Carlo mean of ||exp_{N+1} - exp_N||^2_{H^{-beta}}"),
            ("std_error", "standard error"),
            ("oracle", "exact expectation"),
            ("z", "|mean - oracle| / std_error"),
        ],
    );
    let lo = ctx.cfg.cutoff()?;
    let hi = lo.next()?;
    let grid = Grid::for_cutoff(&hi, ctx.cfg.oversampling);
    let set = ModeSet::new(&hi, grid)?;
    let alpha = ctx.s.f64("alpha")?;
    let beta = ctx.cfg.beta;
    let v = per_replica(reps, |r| {
        let phi = sample_gff_on(&mut StreamKey::new(seed, r).stream(INITIAL_STREAM), &set);
        let d = wick_exp(&phi, alpha, &hi, grid)?.zip_map(&wick_exp(&phi, alpha, &lo, grid)?, |a, b| a - b)?;
        Ok(sobolev_norm(&forward_field(&d), -beta).powi(2))
    })?;
    let e = MCEstimate::from_samples(&v)?;
    let oracle = wick_exp_diff_norm_oracle(alpha, &lo, beta, grid)?;
    ok &= e.within(oracle, 3.0);
    or_t.push(vec![
        ctx.cfg.a.into(),
        ctx.cfg.n.into(),
        alpha.into(),
        beta.into(),
        e.mean.into(),
        e.std_error.into(),
        oracle.into(),
        e.z_score(oracle).into(),
    ]);
    ctx.emit(out, &[&exp_t, &pow_t, &or_t])?;
    Ok(Some(ok))
}

fn sn_decay(ctx: &Context, out: &Path) -> Result<Option<bool>> {
    let s = ctx.s;
    let grid = s.usize("grid")?;
    let cfg = SnConfig {
        p: s.f64("p")?,
        epsilon: s.f64("epsilon")?,
        kappa: s.f64("kappa")?,
        a: s.f64("A")?,
        n_min: s.u32("n_min")?,
        n_max: s.u32("n_max")?,
        horizon: s.f64("T")?,
        grid_size: (grid > 0).then_some(grid),
        oversampling: s.f64("oversampling")?,
        replicas: s.usize("replicas")?,
        bootstrap: s.usize("bootstrap")?,
        seed: s.u64("seed")?,
    };
    let reports = sn_statistic_sweep(&cfg, &s.f64_list("epsilons")?, &ctx.nu)?;
    let mut t = Table::new(
        "sn_decay",
        &[
            ("epsilon", "norm index"),
            ("n", "cutoff level N"),
            ("estimate", "Monte Carlo mean of S_N"),
            ("std_error", "standard error"),
            ("oracle", "exact mean when every p(alpha) = 2, else nan"),
            ("z", "|estimate - oracle| / std_error, nan without oracle"),
        ],
    );
    let mut fit = Table::new(
        "sn_fit",
        &[
            ("epsilon", "norm index"),
            ("ratio", "least-squares geometric ratio of the estimates"),
            ("ci", "bootstrap standard deviation of the ratio"),
            ("ratio_plus_2ci", "ratio + 2 ci"),
            ("decays", "ratio + 2 ci < 1"),
            ("oracle_match", "every oracle within 3 standard errors"),
        ],
    );
    let mut ok = true;
    for rep in &reports {
        for row in &rep.rows {
            t.push(vec![
                rep.epsilon.into(),
                row.n.into(),
                row.estimate.mean.into(),
                row.estimate.std_error.into(),
                nan_if_none(row.oracle).into(),
                nan_if_none(row.oracle.map(|o| row.estimate.z_score(o))).into(),
            ]);
        }
        let (r, c) = rep.fit.map_or((f64::NAN, f64::NAN), |f| (f.ratio, f.ci));
        fit.push(vec![
            rep.epsilon.into(),
            r.into(),
            c.into(),
            (r + 2.0 * c).into(),
            rep.decays().into(),
            rep.matches_oracle(3.0).into(),
        ]);
        ok &= rep.decays() && rep.matches_oracle(3.0);
    }
    ctx.emit(out, &[&t, &fit])?;
    Ok(Some(ok))
}

fn invariance(ctx: &Context, out: &Path) -> Result<Option<bool>> {
    let obs = standard_observables(ctx.cfg.grid()?)?;
    let rep = invariance_test(
        &ctx.nu,
        &ctx.cfg,
        &obs,
        ctx.s.bool("doubling")?,
        ctx.s.f64("min_acceptance")?,
    )?;
    let mut t = Table::new(
        "invariance",
        &[
            ("observable", "cylindrical functional"),
            ("mean_t0", "mean at t = 0"),
            ("se_t0", "standard error at t = 0"),
            ("mean_T", "mean at t = T"),
            ("se_T", "standard error at t = T"),
            ("diff", "paired mean of F(T) - F(0)"),
            ("diff_se", "standard error of diff"),
            ("z", "|diff| / diff_se"),
            ("diff_2T", "paired mean of F(2T) - F(0), nan without doubling"),
            ("diff_2T_se", "standard error of diff_2T"),
        ],
    );
    let mut ok = true;
    for o in &rep.observables {
        ok &= o.agrees(3.0);
        t.push(vec![
            o.name.as_str().into(),
            o.initial.mean.into(),
            o.initial.std_error.into(),
            o.terminal.mean.into(),
            o.terminal.std_error.into(),
            o.difference.mean.into(),
            o.difference.std_error.into(),
            o.difference.z_score(0.0).into(),
            nan_if_none(o.doubled.map(|d| d.mean)).into(),
            nan_if_none(o.doubled.map(|d| d.std_error)).into(),
        ]);
    }
    let mut summary = Table::new(
        "invariance_summary",
        &[
            ("horizon", "T"),
            ("acceptance_rate", "rejection sampler acceptance rate"),
            ("normalization", "estimate of the partition function Z"),
        ],
    );
    summary.push(vec![rep.horizon.into(), rep.acceptance_rate.into(), rep.normalization.into()]);
    ctx.emit(out, &[&t, &summary])?;
    Ok(Some(ok))
}

fn ibp(ctx: &Context, out: &Path) -> Result<Option<bool>> {
    let grid = ctx.cfg.grid()?;
    let cutoff = ctx.cfg.cutoff()?;
    let mut t = Table::new(
        "ibp",
        &[
            ("pair", "(F, G) pair"),
            ("energy", "E[1/2 <grad F, grad G>]"),
            ("energy_se", "standard error of energy"),
            ("generator", "E[G L F]"),
            ("generator_se", "standard error of generator"),
            ("defect", "energy + generator"),
            ("defect_se", "standard error of defect"),
            ("z", "|defect| / defect_se"),
        ],
    );
    let mut ok = true;
    let min_rate = ctx.s.f64("min_acceptance")?;
    for (name, f, g) in ibp_pairs(grid)? {
        let rep = dirichlet_ibp_check(&f, &g, &ctx.nu, &cutoff, grid, ctx.cfg.seed, ctx.cfg.replicas, min_rate)?;
        ok &= rep.defect.within(0.0, 3.0);
        t.push(vec![
            name.into(),
            rep.energy.mean.into(),
            rep.energy.std_error.into(),
            rep.generator.mean.into(),
            rep.generator.std_error.into(),
            rep.defect.mean.into(),
            rep.defect.std_error.into(),
            rep.defect.z_score(0.0).into(),
        ]);
    }
    ctx.emit(out, &[&t])?;
    Ok(Some(ok))
}

fn comparison(ctx: &Context, out: &Path) -> Result<Option<bool>> {
    let reps = comparison_experiment(&ctx.cfg, &ctx.nu, &ctx.seeds()?, ctx.s.f64("profile_radius")?)?;
    let mut t = Table::new(
        "comparison",
        &[
            ("seed", "seed"),
            ("time", "recorded time"),
            ("max_signed_y", "max over the grid of sign(nu) Y_t"),
            ("bound", "||eta||_inf + 10 dt t"),
            ("heat_flow_max", "max over the grid of sign(nu) (heat flow of eta)_t"),
        ],
    );
    let mut summary = Table::new(
        "comparison_summary",
        &[
            ("seed", "seed"),
            ("max_violation", "largest max_signed_y - bound"),
            ("heat_violation", "largest max_signed_y - heat_flow_max - 10 dt t"),
            ("holds", "max_violation <= 0"),
        ],
    );
    let mut ok = true;
    for (seed, r) in &reps {
        for &(time, y, b, h) in &r.rows {
            t.push(vec![(*seed).into(), time.into(), y.into(), b.into(), h.into()]);
        }
        ok &= r.holds();
        summary.push(vec![(*seed).into(), r.max_violation.into(), r.heat_violation.into(), r.holds().into()]);
    }
    ctx.emit(out, &[&t, &summary])?;
    Ok(Some(ok))
}

fn contraction(ctx: &Context, out: &Path) -> Result<Option<bool>> {
    let reps = contraction_experiment(
        &ctx.cfg,
        &ctx.nu,
        &ctx.seeds()?,
        ctx.s.f64("profile_radius")?,
        ctx.s.f64("perturbation")?,
    )?;
    let mut t = Table::new(
        "contraction",
        &[
            ("seed", "seed"),
            ("time", "recorded time"),
            ("functional", "integral of Z arctan Z, Z = Y - Y'"),
        ],
    );
    let mut summary = Table::new(
        "contraction_summary",
        &[
            ("seed", "seed"),
            ("max_increase", "largest F(t_k+1) - F(t_k) - 10 dt (t_k+1 - t_k)"),
            ("holds", "max_increase <= 0"),
        ],
    );
    let mut ok = true;
    for (seed, r) in &reps {
        for &(time, f) in &r.rows {
            t.push(vec![(*seed).into(), time.into(), f.into()]);
        }
        ok &= r.holds();
        summary.push(vec![(*seed).into(), r.max_increase.into(), r.holds().into()]);
    }
    ctx.emit(out, &[&t, &summary])?;
    Ok(Some(ok))
}
