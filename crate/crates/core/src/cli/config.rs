//! Flat `key = value` configuration with layered defaults.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;

use crate::dynamics::{ExponentConvention, RunConfig, Scheme};
use crate::error::{Result, SqeError};
use crate::measure::{Atom, WeightedMeasure};
use crate::rng::{StreamKey, PROFILE_STREAM};
use crate::verification::smooth_profile;

/// Every recognised key with its global default and a one-line description.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("seed", "0", "base seed; replica r of seed s uses stream family (s, r)"),
    ("replicas", "100", "Monte Carlo replicas (or samples)"),
    ("threads", "0", "worker threads, 0 = one per core"),
    ("measure", "sinh", "zero | exp | sinh | uniform | atoms"),
    ("alpha", "1", "coupling of the exp and sinh presets"),
    ("mass", "1", "total mass of the uniform preset"),
    ("alpha0", "0", "support half-width, 0 = smallest that fits"),
    ("atoms", "", "extra atoms `alpha@weight;alpha@weight`"),
    ("nodes", "16", "Gauss-Legendre nodes for densities"),
    ("A", "2", "cutoff base; the cutoff radius is A^N"),
    ("N", "2", "cutoff level"),
    ("grid", "0", "grid size M, 0 = chosen from the cutoff"),
    ("oversampling", "4", "grid points per unit of cutoff radius when grid = 0"),
    ("dt", "0", "time step, 0 = 1e-3 up to radius 8, halved per doubling"),
    ("T", "1", "time horizon"),
    ("beta", "0.5", "Sobolev index of the H^{-beta} monitoring norm"),
    ("epsilon", "0.1", "index of the H^{-1+epsilon} norm in the S_N statistic"),
    ("epsilons", "0.05,0.1,0.2", "epsilon sweep of sn-decay"),
    ("lambda", "0.5", "decay-test index, recorded with the run"),
    ("p", "2", "base exponent p of the S_N statistic"),
    ("kappa", "1", "slope of the S_N weight C(alpha) = kappa |alpha|"),
    ("n_min", "1", "first level of cutoff studies"),
    ("n_max", "4", "last level of cutoff studies"),
    ("bootstrap", "200", "bootstrap resamples of the fitted ratio"),
    ("drift", "projected", "projected | unprojected drift"),
    ("exponent", "projected", "projected | literal field in the drift exponent"),
    ("clamp", "50", "bound on every exponent argument"),
    ("scheme", "full", "full | decomposed"),
    ("eta", "zero", "initial profile: zero | cos:AMP | random:RADIUS:SUP"),
    ("random_initial", "true", "add P_N xi with xi ~ GFF to the initial field"),
    ("noise", "true", "drive with P_N of space-time white noise"),
    ("output_every", "100", "steps between recorded states"),
    ("snapshots", "false", "write binary field snapshots of replica 0"),
    ("seeds", "10", "number of consecutive seeds in trajectory studies"),
    ("profile_radius", "3", "mode radius of random profiles"),
    ("perturbation", "0.5", "sup norm of the contraction perturbation"),
    ("alphas", "1,-2,2.5", "couplings checked by verify-wick"),
    ("radii", "1,4,8", "cutoff radii checked by verify-wick"),
    ("powers", "4", "highest Wick power checked by verify-wick"),
    ("power_radius", "4", "cutoff radius of the Wick power check"),
    ("min_acceptance", "1e-4", "rejection sampler acceptance floor"),
    ("doubling", "true", "invariance: also evolve to 2T"),
];

/// Resolved settings; every key in [`KEYS`] is present.
#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

fn bad(msg: impl Into<String>) -> SqeError {
    SqeError::InvalidConfig(msg.into())
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("line {}: expected key = value", i + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub fn parse_override(s: &str) -> Result<(String, String)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| bad(format!("override `{s}` is not key=value")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

impl Settings {
    /// Global defaults, then `layers` in order; unknown keys are rejected.
    pub fn resolve<'a>(layers: impl IntoIterator<Item = &'a [(String, String)]>) -> Result<Self> {
        let mut values: BTreeMap<String, String> =
            KEYS.iter().map(|(k, v, _)| (k.to_string(), v.to_string())).collect();
        for layer in layers {
            for (k, v) in layer {
                match values.get_mut(k) {
                    Some(slot) => *slot = v.clone(),
                    None => return Err(bad(format!("unknown key `{k}`"))),
                }
            }
        }
        Ok(Self { values })
    }

    pub fn from_file_and_overrides(
        command_defaults: &[(&str, &str)],
        file: Option<&Path>,
        overrides: &[String],
    ) -> Result<Self> {
        let cmd: Vec<(String, String)> = command_defaults
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        let file_layer = match file {
            Some(p) => parse_config_text(&std::fs::read_to_string(p).map_err(|e| {
                bad(format!("cannot read config {}: {e}", p.display()))
            })?)?,
            None => Vec::new(),
        };
        let over: Vec<(String, String)> = overrides.iter().map(|s| parse_override(s)).collect::<Result<_>>()?;
        Self::resolve([cmd.as_slice(), file_layer.as_slice(), over.as_slice()])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let v = self.raw(key);
        v.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| bad(format!("`{key}` = `{v}` is not a finite number")))
    }

    pub fn u64(&self, key: &str) -> Result<u64> {
        let v = self.raw(key);
        v.parse().map_err(|_| bad(format!("`{key}` = `{v}` is not a nonnegative integer")))
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        Ok(self.u64(key)? as usize)
    }

    pub fn u32(&self, key: &str) -> Result<u32> {
        let v = self.raw(key);
        v.parse().map_err(|_| bad(format!("`{key}` = `{v}` is not a nonnegative integer")))
    }

    pub fn bool(&self, key: &str) -> Result<bool> {
        match self.raw(key) {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            v => Err(bad(format!("`{key}` = `{v}` is not a boolean"))),
        }
    }

    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>> {
        self.raw(key)
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| bad(format!("`{key}`: `{s}` is not a number")))
            })
            .collect()
    }

    pub fn measure(&self) -> Result<WeightedMeasure> {
        let alpha = self.f64("alpha")?;
        let mut atoms = Vec::new();
        for part in self.raw("atoms").split(';').filter(|s| !s.trim().is_empty()) {
            let (a, w) = part
                .split_once('@')
                .ok_or_else(|| bad(format!("atom `{part}` is not alpha@weight")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| bad(format!("atom `{part}` is not alpha@weight")))
            };
            atoms.push(Atom {
                alpha: parse(a)?,
                weight: parse(w)?,
            });
        }
        let extra_max = atoms.iter().fold(0.0f64, |m, a| m.max(a.alpha.abs()));
        let base = match self.raw("measure") {
            "zero" => WeightedMeasure::zero(alpha.abs().max(extra_max).max(f64::MIN_POSITIVE))?,
            "exp" => WeightedMeasure::dirac(alpha)?,
            "sinh" => WeightedMeasure::sinh(alpha)?,
            "uniform" => WeightedMeasure::uniform(alpha.abs(), self.f64("mass")?, self.usize("nodes")?)?,
            "atoms" => WeightedMeasure::zero(extra_max.max(f64::MIN_POSITIVE))?,
            other => return Err(bad(format!("unknown measure `{other}`"))),
        };
        let fit = base.alpha0().max(extra_max);
        let declared = self.f64("alpha0")?;
        let alpha0 = if declared > 0.0 { declared } else { fit };
        if alpha0 < fit {
            return Err(SqeError::InvalidMeasure(format!(
                "alpha0 = {alpha0} does not cover couplings up to {fit}"
            )));
        }
        base.with_alpha0(alpha0)?.with_atoms(atoms)
    }

    /// Initial profile `η` as Fourier modes.
    pub fn eta(&self, grid: crate::spectral::Grid) -> Result<Vec<((i64, i64), Complex64)>> {
        let spec = self.raw("eta");
        let parts: Vec<&str> = spec.split(':').collect();
        let num = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| bad(format!("eta `{spec}`: `{s}` is not a number")))
        };
        match parts.as_slice() {
            ["zero"] => Ok(Vec::new()),
            // AMP cos(x_1) = AMP π (e_{1,0} + e_{-1,0})
            ["cos", amp] => {
                let z = Complex64::new(num(amp)? * PI, 0.0);
                Ok(vec![((1, 0), z), ((-1, 0), z)])
            }
            ["random", radius, sup] => {
                let mut rng = StreamKey::new(self.u64("seed")?, 0).stream(PROFILE_STREAM);
                let s = smooth_profile(&mut rng, num(radius)?, num(sup)?, grid)?;
                Ok(s.modes().filter(|(_, z)| z.norm_sqr() > 0.0).collect())
            }
            _ => Err(bad(format!("eta `{spec}` is not zero | cos:AMP | random:RADIUS:SUP"))),
        }
    }

    pub fn scheme(&self) -> Result<Scheme> {
        match self.raw("scheme") {
            "full" => Ok(Scheme::Full),
            "decomposed" => Ok(Scheme::Decomposed),
            v => Err(bad(format!("scheme `{v}` is not full | decomposed"))),
        }
    }

    pub fn run_config(&self) -> Result<RunConfig> {
        let grid = self.usize("grid")?;
        let dt = self.f64("dt")?;
        let mut cfg = RunConfig {
            grid_size: (grid > 0).then_some(grid),
            oversampling: self.f64("oversampling")?,
            a: self.f64("A")?,
            n: self.u32("N")?,
            dt: (dt != 0.0).then_some(dt),
            horizon: self.f64("T")?,
            beta: self.f64("beta")?,
            epsilon: self.f64("epsilon")?,
            lambda: self.f64("lambda")?,
            seed: self.u64("seed")?,
            replicas: self.usize("replicas")?,
            drift_projected: match self.raw("drift") {
                "projected" => true,
                "unprojected" => false,
                v => return Err(bad(format!("drift `{v}` is not projected | unprojected"))),
            },
            exponent: match self.raw("exponent") {
                "projected" => ExponentConvention::Projected,
                "literal" => ExponentConvention::Literal,
                v => return Err(bad(format!("exponent `{v}` is not projected | literal"))),
            },
            exponent_clamp: self.f64("clamp")?,
            eta: Vec::new(),
            random_initial: self.bool("random_initial")?,
            noise: self.bool("noise")?,
            output_every: self.usize("output_every")?,
        };
        cfg.eta = self.eta(cfg.grid()?)?;
        Ok(cfg)
    }

    /// `# key = value` lines of the resolved configuration, without
    /// `threads`, which never changes results.
    pub fn comment_block(&self) -> String {
        self.iter()
            .filter(|(k, _)| *k != "threads")
            .map(|(k, v)| format!("# {k} = {v}\n"))
            .collect()
    }
}

/// `--help` text listing every key.
pub fn keys_help() -> String {
    let mut s = String::from("Configuration keys (config file lines `key = value`, or --set key=value):\n");
    for (k, d, h) in KEYS {
        let d = if d.is_empty() { "\"\"" } else { d };
        s.push_str(&format!("  {k:<15} {h} [default: {d}]\n"));
    }
    s
}
