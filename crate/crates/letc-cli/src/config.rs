//! Run configuration: stock defaults, overridden by a key-value config
//! file, overridden by command-line flags. The manifest written next to
//! every run is itself a valid config file, so a run can be reproduced from
//! its manifest alone.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use letc::graph::{DegreeMode, DiffusionKernel};
use letc::harness::GraphOptions;
use letc::solver::SolverConfig;
use letc::Error;

/// Every tunable of a run, with `None` meaning "not set at this layer".
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub tau: Option<usize>,
    pub mu0: Option<f64>,
    pub mu_growth: Option<f64>,
    pub mu_max: Option<f64>,
    pub epsilon: Option<f64>,
    pub max_iters: Option<usize>,
    pub cg_iters: Option<usize>,
    pub rank_init: Option<usize>,
    pub rank_step: Option<usize>,
    pub rank_cap: Option<usize>,
    pub power_iters: Option<usize>,
    pub oversample: Option<usize>,
    pub exact_svt: Option<bool>,
    pub kernel: Option<String>,
    pub period: Option<usize>,
    pub omega_day: Option<f64>,
    pub omega_period: Option<f64>,
    pub decay: Option<f64>,
    pub weekend: Option<String>,
    pub degree_mode: Option<String>,
    pub seed: Option<u64>,
    pub init_column_mean: Option<bool>,
    pub sigma: Option<f64>,
    pub delta: Option<f64>,
    pub radius_quantile: Option<f64>,
}

/// Keys a manifest carries beyond the tunables; accepted and ignored when a
/// manifest is passed back as a config file.
const METADATA_KEYS: &[&str] = &[
    "tool_version",
    "command",
    "values",
    "graph",
    "out",
    "intervals_per_day",
    "sm",
    "tm",
    "em",
    "repeats",
    "scenario_seed",
    "locations",
    "days",
    "noise_sd",
    "threads",
    "lambda1_grid",
    "lambda2_grid",
    "tau_grid",
];

impl Overrides {
    /// Parses a `key = value` config file. `#` starts a comment; metadata
    /// keys from manifests are tolerated, anything else unknown is an error.
    pub fn from_file(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        let display = path.display().to_string();
        let mut out = Overrides::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::ingest(&display, idx + 1, "expected 'key = value'")
            })?;
            let (key, value) = (key.trim(), value.trim());
            out.set(key, value)
                .map_err(|msg| Error::ingest(&display, idx + 1, msg))?;
        }
        Ok(out)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
            value
                .parse()
                .map_err(|_| format!("cannot parse '{value}' for key '{key}'"))
        }
        match key {
            "lambda1" => self.lambda1 = Some(parse(key, value)?),
            "lambda2" => self.lambda2 = Some(parse(key, value)?),
            "tau" => self.tau = Some(parse(key, value)?),
            "mu0" => self.mu0 = Some(parse(key, value)?),
            "mu_growth" => self.mu_growth = Some(parse(key, value)?),
            "mu_max" => self.mu_max = Some(parse(key, value)?),
            "epsilon" => self.epsilon = Some(parse(key, value)?),
            "max_iters" => self.max_iters = Some(parse(key, value)?),
            "cg_iters" => self.cg_iters = Some(parse(key, value)?),
            "rank_init" => self.rank_init = Some(parse(key, value)?),
            "rank_step" => self.rank_step = Some(parse(key, value)?),
            "rank_cap" => self.rank_cap = Some(parse(key, value)?),
            "power_iters" => self.power_iters = Some(parse(key, value)?),
            "oversample" => self.oversample = Some(parse(key, value)?),
            "exact_svt" => self.exact_svt = Some(parse(key, value)?),
            "kernel" => self.kernel = Some(value.to_string()),
            "period" => self.period = Some(parse(key, value)?),
            "omega_day" => self.omega_day = Some(parse(key, value)?),
            "omega_period" => self.omega_period = Some(parse(key, value)?),
            "decay" => self.decay = Some(parse(key, value)?),
            "weekend" => self.weekend = Some(value.to_string()),
            "degree_mode" => self.degree_mode = Some(value.to_string()),
            "seed" => self.seed = Some(parse(key, value)?),
            "init_column_mean" => self.init_column_mean = Some(parse(key, value)?),
            "sigma" => self.sigma = Some(parse(key, value)?),
            "delta" => self.delta = Some(parse(key, value)?),
            "radius_quantile" => self.radius_quantile = Some(parse(key, value)?),
            _ if METADATA_KEYS.contains(&key) => {}
            _ => return Err(format!("unknown configuration key '{key}'")),
        }
        Ok(())
    }

    /// Overlays `higher` on top of `self`.
    pub fn merged_with(mut self, higher: &Overrides) -> Overrides {
        macro_rules! take {
            ($($field:ident),* $(,)?) => {
                $(if higher.$field.is_some() { self.$field = higher.$field.clone(); })*
            };
        }
        take!(
            lambda1, lambda2, tau, mu0, mu_growth, mu_max, epsilon, max_iters, cg_iters,
            rank_init, rank_step, rank_cap, power_iters, oversample, exact_svt, kernel, period,
            omega_day, omega_period, decay, weekend, degree_mode, seed, init_column_mean, sigma,
            delta, radius_quantile,
        );
        self
    }

    /// Resolves the layered overrides into concrete solver and graph
    /// settings.
    pub fn resolve(&self) -> Result<(SolverConfig, GraphOptions), Error> {
        let mut config = SolverConfig::default();
        if let Some(v) = self.lambda1 {
            config.lambda1 = v;
        }
        if let Some(v) = self.lambda2 {
            config.lambda2 = v;
        }
        if let Some(v) = self.tau {
            config.tau = v;
        }
        if let Some(v) = self.mu0 {
            config.mu0 = v;
        }
        if let Some(v) = self.mu_growth {
            config.mu_growth = v;
        }
        if let Some(v) = self.mu_max {
            config.mu_max = v;
        }
        if let Some(v) = self.epsilon {
            config.epsilon = v;
        }
        if let Some(v) = self.max_iters {
            config.max_outer_iters = v;
        }
        if let Some(v) = self.cg_iters {
            config.cg_iters = v;
        }
        if let Some(v) = self.rank_init {
            config.rank_init = v;
        }
        if let Some(v) = self.rank_step {
            config.rank_step = v;
        }
        if let Some(v) = self.rank_cap {
            config.rank_cap = Some(v);
        }
        if let Some(v) = self.power_iters {
            config.power_iters = v;
        }
        if let Some(v) = self.oversample {
            config.oversample = v;
        }
        if let Some(v) = self.exact_svt {
            config.exact_svt = v;
        }
        if let Some(kernel) = &self.kernel {
            config.kernel = parse_kernel(kernel)?;
        }
        if let Some(v) = self.period {
            config.period_days = v;
        }
        if let Some(v) = self.omega_day {
            config.temporal_weights.omega_day = v;
        }
        if let Some(v) = self.omega_period {
            config.temporal_weights.omega_period = v;
        }
        if let Some(v) = self.decay {
            config.temporal_weights.decay = Some(v);
        }
        if let Some(spec) = &self.weekend {
            config.temporal_weights.weekend = Some(parse_weekend(spec)?);
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        if let Some(v) = self.init_column_mean {
            config.init_column_mean = v;
        }

        let mut graph = GraphOptions::default();
        if let Some(mode) = &self.degree_mode {
            graph.degree_mode = match mode.as_str() {
                "out" => DegreeMode::Out,
                "in" => DegreeMode::In,
                other => {
                    return Err(Error::parameter(format!(
                        "degree mode must be 'out' or 'in', got '{other}'"
                    )))
                }
            };
        }
        if let Some(v) = self.sigma {
            graph.sigma = Some(v);
        }
        if let Some(v) = self.delta {
            graph.delta = v;
        }
        if let Some(v) = self.radius_quantile {
            graph.radius_quantile = v;
        }
        Ok((config, graph))
    }
}

/// Kernel grammar: `one-step`, `high-order:K`, `ppr:ALPHA`, `heat:TIME` or
/// `bidirectional`.
pub fn parse_kernel(spec: &str) -> Result<DiffusionKernel, Error> {
    let (name, arg) = match spec.split_once(':') {
        Some((n, a)) => (n.trim(), Some(a.trim())),
        None => (spec.trim(), None),
    };
    let needs = |what: &str| {
        Error::parameter(format!("kernel '{name}' needs an argument: {name}:{what}"))
    };
    match name {
        "one-step" => Ok(DiffusionKernel::OneStep),
        "bidirectional" => Ok(DiffusionKernel::Bidirectional),
        "high-order" => {
            let steps = arg
                .ok_or_else(|| needs("STEPS"))?
                .parse()
                .map_err(|_| Error::parameter("high-order steps must be an integer"))?;
            Ok(DiffusionKernel::HighOrder { steps })
        }
        "ppr" => {
            let alpha = arg
                .ok_or_else(|| needs("ALPHA"))?
                .parse()
                .map_err(|_| Error::parameter("ppr alpha must be a number"))?;
            Ok(DiffusionKernel::PageRank {
                alpha,
                truncation: None,
            })
        }
        "heat" => {
            let time = arg
                .ok_or_else(|| needs("TIME"))?
                .parse()
                .map_err(|_| Error::parameter("heat time must be a number"))?;
            Ok(DiffusionKernel::Heat {
                time,
                truncation: None,
            })
        }
        other => Err(Error::parameter(format!(
            "unknown kernel '{other}'; expected one-step, high-order:K, ppr:A, heat:T or bidirectional"
        ))),
    }
}

/// Weekend grammar: `WEIGHT:DAYS` or just `WEIGHT` (two pattern days).
fn parse_weekend(spec: &str) -> Result<(f64, usize), Error> {
    let (w, d) = match spec.split_once(':') {
        Some((w, d)) => (w, Some(d)),
        None => (spec, None),
    };
    let weight = w
        .trim()
        .parse()
        .map_err(|_| Error::parameter("weekend weight must be a number"))?;
    let days = match d {
        Some(d) => d
            .trim()
            .parse()
            .map_err(|_| Error::parameter("weekend day count must be an integer"))?,
        None => 2,
    };
    Ok((weight, days))
}

fn kernel_spec(kernel: &DiffusionKernel) -> String {
    match kernel {
        DiffusionKernel::OneStep => "one-step".to_string(),
        DiffusionKernel::Bidirectional => "bidirectional".to_string(),
        DiffusionKernel::HighOrder { steps } => format!("high-order:{steps}"),
        DiffusionKernel::PageRank { alpha, .. } => format!("ppr:{alpha}"),
        DiffusionKernel::Heat { time, .. } => format!("heat:{time}"),
    }
}

/// Renders the fully resolved configuration plus run metadata as a manifest
/// that doubles as a config file.
pub fn render_manifest(
    command: &str,
    metadata: &[(&str, String)],
    config: &SolverConfig,
    graph: &GraphOptions,
) -> String {
    let mut entries: BTreeMap<&str, String> = BTreeMap::new();
    entries.insert("tool_version", env!("CARGO_PKG_VERSION").to_string());
    entries.insert("command", command.to_string());
    entries.insert("lambda1", config.lambda1.to_string());
    entries.insert("lambda2", config.lambda2.to_string());
    entries.insert("tau", config.tau.to_string());
    entries.insert("mu0", config.mu0.to_string());
    entries.insert("mu_growth", config.mu_growth.to_string());
    entries.insert("mu_max", config.mu_max.to_string());
    entries.insert("epsilon", config.epsilon.to_string());
    entries.insert("max_iters", config.max_outer_iters.to_string());
    entries.insert("cg_iters", config.cg_iters.to_string());
    entries.insert("rank_init", config.rank_init.to_string());
    entries.insert("rank_step", config.rank_step.to_string());
    if let Some(cap) = config.rank_cap {
        entries.insert("rank_cap", cap.to_string());
    }
    entries.insert("power_iters", config.power_iters.to_string());
    entries.insert("oversample", config.oversample.to_string());
    entries.insert("exact_svt", config.exact_svt.to_string());
    entries.insert("kernel", kernel_spec(&config.kernel));
    entries.insert("period", config.period_days.to_string());
    entries.insert("omega_day", config.temporal_weights.omega_day.to_string());
    entries.insert(
        "omega_period",
        config.temporal_weights.omega_period.to_string(),
    );
    if let Some(beta) = config.temporal_weights.decay {
        entries.insert("decay", beta.to_string());
    }
    if let Some((w, d)) = config.temporal_weights.weekend {
        entries.insert("weekend", format!("{w}:{d}"));
    }
    entries.insert("seed", config.seed.to_string());
    entries.insert("init_column_mean", config.init_column_mean.to_string());
    if let Some(s) = graph.sigma {
        entries.insert("sigma", s.to_string());
    }
    entries.insert("delta", graph.delta.to_string());
    entries.insert(
        "degree_mode",
        match graph.degree_mode {
            DegreeMode::Out => "out".to_string(),
            DegreeMode::In => "in".to_string(),
        },
    );
    entries.insert("radius_quantile", graph.radius_quantile.to_string());
    for (k, v) in metadata {
        entries.insert(k, v.clone());
    }
    let mut out = String::from("# letc run manifest; valid as a --config file\n");
    for (k, v) in entries {
        writeln!(out, "{k} = {v}").expect("writing to a string cannot fail");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_overrides_defaults_and_flags_override_file() {
        let dir = std::env::temp_dir().join(format!("letc-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("layered.cfg");
        std::fs::write(&path, "lambda1 = 0.5\ntau = 3\n# comment\nkernel = ppr:0.2\n").unwrap();
        let file = Overrides::from_file(&path).unwrap();
        let flags = Overrides {
            tau: Some(2),
            ..Overrides::default()
        };
        let (config, _) = file.merged_with(&flags).resolve().unwrap();
        assert_eq!(config.lambda1, 0.5);
        assert_eq!(config.tau, 2);
        assert!(matches!(config.kernel, DiffusionKernel::PageRank { alpha, .. } if alpha == 0.2));
        assert_eq!(config.lambda2, SolverConfig::default().lambda2);
    }

    #[test]
    fn unknown_keys_are_rejected_with_their_line() {
        let dir = std::env::temp_dir().join(format!("letc-cfg2-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.cfg");
        std::fs::write(&path, "lambda1 = 0.5\nwat = 1\n").unwrap();
        let err = Overrides::from_file(&path).unwrap_err().to_string();
        assert!(err.contains(":2:") && err.contains("wat"), "{err}");
    }

    #[test]
    fn kernel_grammar_round_trips() {
        for spec in ["one-step", "high-order:3", "ppr:0.15", "heat:2", "bidirectional"] {
            let kernel = parse_kernel(spec).unwrap();
            assert_eq!(kernel_spec(&kernel), spec);
        }
        assert!(parse_kernel("warp").is_err());
        assert!(parse_kernel("ppr").is_err());
    }

    #[test]
    fn weekend_grammar_defaults_to_two_days() {
        assert_eq!(parse_weekend("0.5").unwrap(), (0.5, 2));
        assert_eq!(parse_weekend("0.25:3").unwrap(), (0.25, 3));
        assert!(parse_weekend("x:2").is_err());
    }

    #[test]
    fn manifest_parses_back_as_config() {
        let config = SolverConfig {
            lambda1: 0.123,
            tau: 2,
            ..SolverConfig::default()
        };
        let graph = GraphOptions::default();
        let manifest = render_manifest(
            "krige",
            &[("values", "v.csv".into()), ("out", "o".into())],
            &config,
            &graph,
        );
        let dir = std::env::temp_dir().join(format!("letc-cfg3-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("manifest.txt");
        std::fs::write(&path, manifest).unwrap();
        let (parsed, _) = Overrides::from_file(&path).unwrap().resolve().unwrap();
        assert_eq!(parsed.lambda1, 0.123);
        assert_eq!(parsed.tau, 2);
        assert_eq!(parsed.mu0, config.mu0);
    }
}
