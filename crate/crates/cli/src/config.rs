//! Experiment settings: config file, command-line overrides, validation.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use topt_core::{NewtonOptions, Preset};

/// Per-preset section of the config file. Every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Section {
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Time-step counts for `sweep`.
    #[serde(rename = "M_list", skip_serializing_if = "Option::is_none")]
    pub m_list: Option<Vec<usize>>,
    /// Mesh parameters for `sweep`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu0: Option<f64>,
    /// Outer tolerance on `|delta|`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub damping: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accelerate: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub history_cap: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prune_threshold: Option<f64>,
    /// Number of value-function samples; 0 disables sampling.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_from: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_to: Option<f64>,
}

impl Section {
    /// Fills unset keys from `base`.
    fn or(self, base: &Section) -> Section {
        Section {
            m: self.m.or(base.m),
            n: self.n.or(base.n),
            m_list: self.m_list.or_else(|| base.m_list.clone()),
            n_list: self.n_list.or_else(|| base.n_list.clone()),
            delta0: self.delta0.or(base.delta0),
            nu0: self.nu0.or(base.nu0),
            tol: self.tol.or(base.tol),
            max_steps: self.max_steps.or(base.max_steps),
            damping: self.damping.or(base.damping),
            tol_gap: self.tol_gap.or(base.tol_gap),
            max_iter: self.max_iter.or(base.max_iter),
            accelerate: self.accelerate.or(base.accelerate),
            history_cap: self.history_cap.or(base.history_cap),
            prune_threshold: self.prune_threshold.or(base.prune_threshold),
            samples: self.samples.or(base.samples),
            sample_from: self.sample_from.or(base.sample_from),
            sample_to: self.sample_to.or(base.sample_to),
        }
    }
}

/// The whole config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    /// Recorded in the trace; the solvers are deterministic.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pendulum: Option<Section>,
    #[serde(rename = "heat-distributed", skip_serializing_if = "Option::is_none")]
    pub heat_distributed: Option<Section>,
    #[serde(rename = "heat-neumann", skip_serializing_if = "Option::is_none")]
    pub heat_neumann: Option<Section>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }

    fn section(&self, preset: Preset) -> Option<&Section> {
        match preset {
            Preset::Pendulum => self.pendulum.as_ref(),
            Preset::HeatDistributed => self.heat_distributed.as_ref(),
            Preset::HeatNeumann => self.heat_neumann.as_ref(),
        }
    }

    /// Every preset section filled with its defaults.
    pub fn defaults() -> Self {
        FileConfig {
            preset: Some(Preset::Pendulum.name().into()),
            out: Some(PathBuf::from("out")),
            jobs: Some(1),
            seed: Some(0),
            pendulum: Some(default_section(Preset::Pendulum)),
            heat_distributed: Some(default_section(Preset::HeatDistributed)),
            heat_neumann: Some(default_section(Preset::HeatNeumann)),
        }
    }
}

/// Default problem sizes: `M = 10^4` for the pendulum,
/// `M = 320` on the 65 x 65 mesh otherwise.
pub fn default_section(preset: Preset) -> Section {
    let o = preset.options(preset.radius());
    let (m, n) = match preset {
        Preset::Pendulum => (10_000, None),
        _ => (320, Some(64)),
    };
    Section {
        m: Some(m),
        n,
        m_list: Some(match preset {
            Preset::Pendulum => vec![100, 1000, 10_000],
            _ => vec![m],
        }),
        n_list: n.map(|_| vec![8, 16, 32, 64]),
        delta0: Some(preset.radius()),
        nu0: Some(o.nu0),
        tol: Some(o.tol_delta),
        max_steps: Some(o.max_steps),
        damping: Some(o.damping),
        tol_gap: Some(o.inner.tol_gap),
        max_iter: Some(o.inner.max_iter),
        accelerate: Some(o.inner.accelerate),
        history_cap: Some(o.inner.history_cap),
        prune_threshold: Some(o.inner.prune_threshold),
        samples: Some(0),
        sample_from: Some(0.25 * o.nu0),
        sample_to: Some(2.0 * o.nu0),
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub preset: Option<String>,
    pub m: Vec<usize>,
    pub n: Vec<usize>,
    pub nu0: Option<f64>,
    pub tol: Option<f64>,
    pub accelerate: Option<bool>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub samples: Option<usize>,
}

/// A fully resolved single solve.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub preset: Preset,
    pub m: usize,
    pub n: usize,
    pub options: NewtonOptions<f64>,
    pub delta0: f64,
}

/// Value-function sampling request.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampling {
    pub count: usize,
    pub from: f64,
    pub to: f64,
}

impl Sampling {
    pub fn points(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.from + (self.to - self.from) * i as f64 / (self.count - 1) as f64).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Settings {
    pub preset: Preset,
    pub runs: Vec<RunSpec>,
    pub sampling: Option<Sampling>,
    pub out: PathBuf,
    pub jobs: usize,
    pub seed: u64,
}

fn positive(name: &str, v: f64) -> Result<f64, String> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("{name} must be positive, got {v}"))
    }
}

/// Merges file and overrides and checks everything that can be checked
/// before a solve starts. `sweep` takes lists of `M` and `n`.
pub fn resolve(file: &FileConfig, cli: &Overrides, sweep: bool) -> Result<Settings, String> {
    let name = cli.preset.clone().or_else(|| file.preset.clone()).unwrap_or_else(|| Preset::Pendulum.name().into());
    let preset: Preset = name.parse().map_err(|e: topt_core::Error| e.to_string())?;
    let sec = file.section(preset).cloned().unwrap_or_default().or(&default_section(preset));

    let ms: Vec<usize> = if !cli.m.is_empty() {
        cli.m.clone()
    } else if sweep {
        sec.m_list.clone().unwrap_or_default()
    } else {
        sec.m.into_iter().collect()
    };
    let ns: Vec<usize> = if !preset.has_mesh() {
        vec![0]
    } else if !cli.n.is_empty() {
        cli.n.clone()
    } else if sweep {
        sec.n_list.clone().unwrap_or_default()
    } else {
        sec.n.into_iter().collect()
    };
    if ms.is_empty() {
        return Err("empty list of time-step counts M".into());
    }
    if ns.is_empty() {
        return Err("empty list of mesh parameters n".into());
    }
    if !sweep && (ms.len() > 1 || ns.len() > 1) {
        return Err("run takes a single M and n; use sweep for lists".into());
    }
    if let Some(m) = ms.iter().find(|&&m| m == 0) {
        return Err(format!("M must be positive, got {m}"));
    }
    for &n in &ns {
        preset.validate_mesh(n).map_err(|e| e.to_string())?;
    }

    let delta0 = positive("delta0", sec.delta0.unwrap())?;
    // unset tolerances scale with the possibly overridden radius, so they
    // come from the file section alone, not from the merged defaults
    let user = file.section(preset);
    let base = preset.options(delta0);
    let mut options = base;
    options.nu0 = positive("nu0", cli.nu0.or(sec.nu0).unwrap())?;
    options.tol_delta = cli.tol.or(user.and_then(|s| s.tol)).unwrap_or(base.tol_delta);
    options.max_steps = sec.max_steps.unwrap();
    options.damping = sec.damping.unwrap();
    options.inner.tol_gap = user.and_then(|s| s.tol_gap).unwrap_or(base.inner.tol_gap);
    options.inner.max_iter = sec.max_iter.unwrap();
    options.inner.accelerate = cli.accelerate.or(sec.accelerate).unwrap();
    options.inner.history_cap = sec.history_cap.unwrap();
    options.inner.prune_threshold = sec.prune_threshold.unwrap();
    options.validate().map_err(|e| e.to_string())?;

    let count = cli.samples.or(sec.samples).unwrap();
    let sampling = match count {
        0 => None,
        1 => return Err("value-function sampling needs at least 2 points".into()),
        count => {
            let from = positive("sample_from", sec.sample_from.unwrap())?;
            let to = positive("sample_to", sec.sample_to.unwrap())?;
            if to <= from {
                return Err(format!("sample_to ({to}) must exceed sample_from ({from})"));
            }
            Some(Sampling { count, from, to })
        }
    };

    let jobs = cli.jobs.or(file.jobs).unwrap_or(1);
    if jobs == 0 {
        return Err("jobs must be at least 1".into());
    }
    let runs = ns
        .iter()
        .flat_map(|&n| ms.iter().map(move |&m| (m, n)))
        .map(|(m, n)| RunSpec { preset, m, n, options, delta0 })
        .collect();
    Ok(Settings {
        preset,
        runs,
        sampling,
        out: cli.out.clone().or_else(|| file.out.clone()).unwrap_or_else(|| PathBuf::from("out")),
        jobs,
        seed: file.seed.unwrap_or(0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let d = FileConfig::defaults();
        let text = toml::to_string(&d).unwrap();
        let back: FileConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn overrides_win() {
        let file: FileConfig = toml::from_str("preset = \"heat-neumann\"\n[heat-neumann]\nM = 40\nn = 8\n").unwrap();
        let cli = Overrides { m: vec![20], nu0: Some(0.5), ..Default::default() };
        let s = resolve(&file, &cli, false).unwrap();
        assert_eq!(s.preset, Preset::HeatNeumann);
        assert_eq!((s.runs[0].m, s.runs[0].n), (20, 8));
        assert_eq!(s.runs[0].options.nu0, 0.5);
        // loose defaults of this preset survive
        assert!(s.runs[0].options.inner.tol_gap > 1e-7);
    }

    #[test]
    fn default_tolerances_follow_the_radius() {
        let file: FileConfig = toml::from_str("[pendulum]\ndelta0 = 0.5\n").unwrap();
        let s = resolve(&file, &Overrides::default(), false).unwrap();
        assert_eq!(s.runs[0].options.tol_delta, 1e-8 * 1.5);
        assert_eq!(s.runs[0].options.inner.tol_gap, 1e-9 * 1.5);
        let file: FileConfig = toml::from_str("[pendulum]\ndelta0 = 0.5\ntol_gap = 1e-7\n").unwrap();
        let cli = Overrides { tol: Some(1e-4), ..Default::default() };
        let s = resolve(&file, &cli, false).unwrap();
        assert_eq!((s.runs[0].options.tol_delta, s.runs[0].options.inner.tol_gap), (1e-4, 1e-7));
    }

    #[test]
    fn invalid_settings_are_rejected() {
        let file = FileConfig::default();
        let bad = |cli: Overrides, sweep: bool| resolve(&file, &cli, sweep).is_err();
        assert!(bad(Overrides { preset: Some("heat".into()), ..Default::default() }, false));
        assert!(bad(Overrides { preset: Some("heat-distributed".into()), n: vec![6], ..Default::default() }, false));
        assert!(bad(Overrides { m: vec![10, 20], ..Default::default() }, false));
        assert!(bad(Overrides { m: vec![0], ..Default::default() }, false));
        assert!(bad(Overrides { nu0: Some(-1.0), ..Default::default() }, false));
        assert!(bad(Overrides { samples: Some(1), ..Default::default() }, false));
        let empty: FileConfig = toml::from_str("[pendulum]\nM_list = []\n").unwrap();
        assert!(resolve(&empty, &Overrides::default(), true).is_err());
    }

    #[test]
    fn unknown_keys_fail_to_parse() {
        assert!(toml::from_str::<FileConfig>("[pendulum]\nsteps = 3\n").is_err());
    }
}
