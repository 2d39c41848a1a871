//! Settings resolution: flags over config file over preset over defaults.
//!
//! Config file schema (TOML, every key optional):
//!
//! ```toml
//! threads = 4
//! format = "csv"
//!
//! [sweep]
//! g_over_eta = 20.0
//! delta_min = 14.0
//! delta_max = 26.0
//! points = 121
//! methods = ["exact", "boltzmann"]
//!
//! [wigner]
//! method = "boltzmann"
//! delta = 17.0
//! g = 20.0
//! eta = 1.0
//! half_width = 8.0
//! resolution = 161
//! reduced = false
//!
//! [critical]
//! g_grid = [20.0, 40.0, 60.0, 80.0, 100.0]
//! methods = ["exact", "boltzmann"]
//!
//! [simulate]
//! delta = 17.0
//! g = 20.0
//! eta = 1.0
//! mode = "single"
//! noise = true
//! index = 0
//!
//! [trajectory]
//! dt = 0.001
//! t_burn = 20.0
//! t_sample = 200.0
//! sample_stride = 10
//! n_traj = 2000
//! seed = 0
//! scheme = "stratonovich_heun"
//! system = "full_complex"
//! ```

use std::path::Path;

use serde::Deserialize;
use serde_json::{json, Map, Value};

use twophoton::langevin::TrajectoryConfig;
use twophoton::validation::EXPONENT_GRID;
use twophoton::{Method, ModelParams};

use crate::args::{Format, Preset};
use crate::error::{usage, CliError};

macro_rules! layer {
    ($name:ident { $($field:ident: $ty:ty),* $(,)? }) => {
        #[derive(Debug, Clone, Default, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct $name {
            $(pub $field: Option<$ty>,)*
        }

        impl $name {
            /// Keeps the fields set here and fills the rest from `lower`.
            pub fn over(self, lower: Self) -> Self {
                Self { $($field: self.$field.or(lower.$field),)* }
            }
        }
    };
}

layer!(SweepLayer {
    g_over_eta: f64,
    delta_min: f64,
    delta_max: f64,
    points: usize,
    methods: Vec<String>,
});

layer!(WignerLayer {
    method: String,
    delta: f64,
    g: f64,
    eta: f64,
    half_width: f64,
    resolution: usize,
    reduced: bool,
});

layer!(CriticalLayer {
    g_grid: Vec<f64>,
    methods: Vec<String>,
});

layer!(SimulateLayer {
    delta: f64,
    g: f64,
    eta: f64,
    mode: String,
    noise: bool,
    index: usize,
});

layer!(TrajectoryLayer {
    dt: f64,
    t_burn: f64,
    t_sample: f64,
    sample_stride: usize,
    n_traj: usize,
    seed: u64,
    scheme: String,
    system: String,
});

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub threads: Option<usize>,
    pub format: Option<String>,
    #[serde(default)]
    pub sweep: SweepLayer,
    #[serde(default)]
    pub wigner: WignerLayer,
    #[serde(default)]
    pub critical: CriticalLayer,
    #[serde(default)]
    pub simulate: SimulateLayer,
    #[serde(default)]
    pub trajectory: TrajectoryLayer,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
    }

    pub fn format(&self, flag: Option<Format>) -> Result<Format, CliError> {
        if let Some(f) = flag {
            return Ok(f);
        }
        match self.format.as_deref() {
            None | Some("csv") => Ok(Format::Csv),
            Some("json") => Ok(Format::Json),
            Some(other) => Err(usage(format!("unknown format '{other}'"))),
        }
    }
}

fn strings(items: &[&str]) -> Option<Vec<String>> {
    Some(items.iter().map(|s| s.to_string()).collect())
}

fn sweep_preset(preset: Option<Preset>) -> Result<SweepLayer, CliError> {
    let (lo, hi, points, methods): (f64, f64, usize, &[&str]) = match preset {
        None => return Ok(SweepLayer::default()),
        Some(Preset::Overview) => (0.0, 40.0, 161, &["semiclassical", "exact"]),
        Some(Preset::Threshold) => (14.0, 26.0, 121, &["semiclassical", "exact", "boltzmann"]),
        Some(Preset::Bunching) => (10.0, 30.0, 81, &["semiclassical", "exact", "boltzmann"]),
        Some(p) => return Err(preset_mismatch(p, "sweep")),
    };
    Ok(SweepLayer {
        g_over_eta: Some(20.0),
        delta_min: Some(lo),
        delta_max: Some(hi),
        points: Some(points),
        methods: strings(methods),
    })
}

fn wigner_preset(preset: Option<Preset>) -> Result<WignerLayer, CliError> {
    match preset {
        None => Ok(WignerLayer::default()),
        Some(Preset::Marginal) => Ok(WignerLayer {
            delta: Some(20.0),
            g: Some(20.0),
            eta: Some(1.0),
            half_width: Some(8.0),
            resolution: Some(801),
            reduced: Some(true),
            ..WignerLayer::default()
        }),
        Some(p) => Err(preset_mismatch(p, "wigner")),
    }
}

fn critical_preset(preset: Option<Preset>) -> Result<CriticalLayer, CliError> {
    match preset {
        None => Ok(CriticalLayer::default()),
        Some(Preset::Scaling) => Ok(CriticalLayer {
            g_grid: Some((0..17).map(|k| 20.0 + 5.0 * k as f64).collect()),
            methods: strings(&["exact", "boltzmann"]),
        }),
        Some(p) => Err(preset_mismatch(p, "critical")),
    }
}

fn preset_mismatch(p: Preset, command: &str) -> CliError {
    let owner = match p {
        Preset::Overview | Preset::Threshold | Preset::Bunching => "sweep",
        Preset::Marginal => "wigner",
        Preset::Scaling => "critical",
    };
    usage(format!("preset {p:?} belongs to '{owner}', not '{command}'").to_lowercase())
}

fn parse_methods(names: &[String]) -> Result<Vec<Method>, CliError> {
    let mut methods = names
        .iter()
        .map(|s| s.trim().parse::<Method>().map_err(|e| usage(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    if methods.is_empty() {
        return Err(usage("at least one method is required"));
    }
    // Canonical order keeps the column layout independent of how the list
    // was spelled.
    methods.sort();
    methods.dedup();
    Ok(methods)
}

fn params(delta: f64, g: f64, eta: f64) -> Result<ModelParams, CliError> {
    ModelParams::new(delta, g, eta).map_err(|e| usage(e.to_string()))
}

fn method_names(methods: &[Method]) -> Value {
    Value::from(methods.iter().map(|m| m.name()).collect::<Vec<_>>())
}

fn parse_opt<T: std::str::FromStr<Err = twophoton::Error>>(
    s: Option<String>,
) -> Option<Result<T, CliError>> {
    s.map(|s| {
        s.parse()
            .map_err(|e: twophoton::Error| usage(e.to_string()))
    })
}

pub fn resolve_trajectory(layer: TrajectoryLayer) -> Result<TrajectoryConfig, CliError> {
    let d = TrajectoryConfig::default();
    Ok(TrajectoryConfig {
        dt: layer.dt.unwrap_or(d.dt),
        t_burn: layer.t_burn.unwrap_or(d.t_burn),
        t_sample: layer.t_sample.unwrap_or(d.t_sample),
        sample_stride: layer.sample_stride.unwrap_or(d.sample_stride),
        n_traj: layer.n_traj.unwrap_or(d.n_traj),
        seed: layer.seed.unwrap_or(d.seed),
        scheme: parse_opt(layer.scheme).transpose()?.unwrap_or(d.scheme),
        system: parse_opt(layer.system).transpose()?.unwrap_or(d.system),
    })
}

pub fn echo_trajectory(c: &TrajectoryConfig, out: &mut Map<String, Value>) {
    out.insert("trajectory.dt".into(), json!(c.dt));
    out.insert("trajectory.t_burn".into(), json!(c.t_burn));
    out.insert("trajectory.t_sample".into(), json!(c.t_sample));
    out.insert("trajectory.sample_stride".into(), json!(c.sample_stride));
    out.insert("trajectory.n_traj".into(), json!(c.n_traj));
    out.insert("trajectory.seed".into(), json!(c.seed));
    out.insert("trajectory.scheme".into(), json!(c.scheme.name()));
    out.insert("trajectory.system".into(), json!(c.system.name()));
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub g_over_eta: f64,
    pub delta_min: f64,
    pub delta_max: f64,
    pub points: usize,
    pub methods: Vec<Method>,
    /// Present iff langevin is among the methods.
    pub trajectory: Option<TrajectoryConfig>,
}

impl SweepSpec {
    pub fn resolve(
        flags: SweepLayer,
        traj_flags: TrajectoryLayer,
        file: &FileConfig,
        preset: Option<Preset>,
    ) -> Result<Self, CliError> {
        let l = flags.over(file.sweep.clone()).over(sweep_preset(preset)?);
        let methods = parse_methods(
            &l.methods
                .unwrap_or_else(|| strings(&["semiclassical", "exact"]).unwrap()),
        )?;
        let spec = Self {
            g_over_eta: l.g_over_eta.unwrap_or(20.0),
            delta_min: l.delta_min.unwrap_or(0.0),
            delta_max: l.delta_max.unwrap_or(40.0),
            points: l.points.unwrap_or(81),
            trajectory: if methods.contains(&Method::Langevin) {
                Some(resolve_trajectory(
                    traj_flags.over(file.trajectory.clone()),
                )?)
            } else {
                None
            },
            methods,
        };
        if spec.points < 2 {
            return Err(usage(format!("points must be >= 2, got {}", spec.points)));
        }
        if !(spec.delta_min < spec.delta_max)
            || !spec.delta_max.is_finite()
            || !spec.delta_min.is_finite()
        {
            return Err(usage(format!(
                "need finite delta_min < delta_max, got {} and {}",
                spec.delta_min, spec.delta_max
            )));
        }
        params(spec.delta_min, spec.g_over_eta, 1.0)?;
        Ok(spec)
    }

    /// Evenly spaced detunings including both ends.
    pub fn deltas(&self) -> Vec<f64> {
        let step = (self.delta_max - self.delta_min) / (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                if i == self.points - 1 {
                    self.delta_max
                } else {
                    self.delta_min + step * i as f64
                }
            })
            .collect()
    }

    pub fn echo(&self) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("sweep.g_over_eta".into(), json!(self.g_over_eta));
        m.insert("sweep.delta_min".into(), json!(self.delta_min));
        m.insert("sweep.delta_max".into(), json!(self.delta_max));
        m.insert("sweep.points".into(), json!(self.points));
        m.insert("sweep.methods".into(), method_names(&self.methods));
        if let Some(t) = &self.trajectory {
            echo_trajectory(t, &mut m);
        }
        m
    }
}

#[derive(Debug, Clone)]
pub struct WignerSpec {
    pub method: Method,
    pub params: ModelParams,
    pub half_width: f64,
    pub resolution: usize,
    pub reduced: bool,
}

impl WignerSpec {
    pub fn resolve(
        flags: WignerLayer,
        file: &FileConfig,
        preset: Option<Preset>,
    ) -> Result<Self, CliError> {
        let l = flags.over(file.wigner.clone()).over(wigner_preset(preset)?);
        let method: Method = l
            .method
            .as_deref()
            .unwrap_or("boltzmann")
            .parse()
            .map_err(|e: twophoton::Error| usage(e.to_string()))?;
        if !matches!(method, Method::Exact | Method::Boltzmann) {
            return Err(usage(format!(
                "wigner needs method exact or boltzmann, got {method}"
            )));
        }
        let spec = Self {
            method,
            params: params(
                l.delta.unwrap_or(20.0),
                l.g.unwrap_or(20.0),
                l.eta.unwrap_or(1.0),
            )?,
            half_width: l.half_width.unwrap_or(8.0),
            resolution: l.resolution.unwrap_or(161),
            reduced: l.reduced.unwrap_or(false),
        };
        if !(spec.half_width > 0.0) || !spec.half_width.is_finite() {
            return Err(usage(format!(
                "half_width must be positive, got {}",
                spec.half_width
            )));
        }
        if spec.resolution < 3 || spec.resolution % 2 == 0 {
            return Err(usage(format!(
                "resolution must be odd and >= 3, got {}",
                spec.resolution
            )));
        }
        Ok(spec)
    }

    pub fn echo(&self) -> Map<String, Value> {
        let mut m = Map::new();
        if !self.reduced {
            m.insert("wigner.method".into(), json!(self.method.name()));
        }
        m.insert("wigner.delta".into(), json!(self.params.delta()));
        m.insert("wigner.g".into(), json!(self.params.g()));
        m.insert("wigner.eta".into(), json!(self.params.eta()));
        m.insert("wigner.half_width".into(), json!(self.half_width));
        m.insert("wigner.resolution".into(), json!(self.resolution));
        m.insert("wigner.reduced".into(), json!(self.reduced));
        m
    }
}

#[derive(Debug, Clone)]
pub struct CriticalSpec {
    pub g_grid: Vec<f64>,
    pub methods: Vec<Method>,
    pub trajectory: Option<TrajectoryConfig>,
}

impl CriticalSpec {
    pub fn resolve(
        flags: CriticalLayer,
        traj_flags: TrajectoryLayer,
        file: &FileConfig,
        preset: Option<Preset>,
    ) -> Result<Self, CliError> {
        let l = flags
            .over(file.critical.clone())
            .over(critical_preset(preset)?);
        let methods = parse_methods(
            &l.methods
                .unwrap_or_else(|| strings(&["exact", "boltzmann"]).unwrap()),
        )?;
        if methods.contains(&Method::Semiclassical) {
            return Err(usage(
                "the semiclassical photon number vanishes at delta = G; pick other methods",
            ));
        }
        let g_grid = l.g_grid.unwrap_or_else(|| EXPONENT_GRID.to_vec());
        if g_grid.is_empty() || g_grid.iter().any(|g| !(*g > 0.0) || !g.is_finite()) {
            return Err(usage(format!(
                "g_grid needs positive finite values, got {g_grid:?}"
            )));
        }
        Ok(Self {
            g_grid,
            trajectory: if methods.contains(&Method::Langevin) {
                Some(resolve_trajectory(
                    traj_flags.over(file.trajectory.clone()),
                )?)
            } else {
                None
            },
            methods,
        })
    }

    pub fn echo(&self) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("critical.g_grid".into(), json!(self.g_grid));
        m.insert("critical.methods".into(), method_names(&self.methods));
        if let Some(t) = &self.trajectory {
            echo_trajectory(t, &mut m);
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimulateMode {
    Single,
    Ensemble,
}

#[derive(Debug, Clone)]
pub struct SimulateSpec {
    pub params: ModelParams,
    pub mode: SimulateMode,
    pub noise: bool,
    pub index: usize,
    pub trajectory: TrajectoryConfig,
}

impl SimulateSpec {
    pub fn resolve(
        flags: SimulateLayer,
        traj_flags: TrajectoryLayer,
        file: &FileConfig,
        preset: Option<Preset>,
    ) -> Result<Self, CliError> {
        if let Some(p) = preset {
            return Err(preset_mismatch(p, "simulate"));
        }
        let l = flags.over(file.simulate.clone());
        let mode = match l.mode.as_deref().unwrap_or("ensemble") {
            "single" => SimulateMode::Single,
            "ensemble" => SimulateMode::Ensemble,
            other => {
                return Err(usage(format!(
                    "mode must be single or ensemble, got '{other}'"
                )))
            }
        };
        let spec = Self {
            params: params(
                l.delta.unwrap_or(20.0),
                l.g.unwrap_or(20.0),
                l.eta.unwrap_or(1.0),
            )?,
            mode,
            noise: l.noise.unwrap_or(true),
            index: l.index.unwrap_or(0),
            trajectory: resolve_trajectory(traj_flags.over(file.trajectory.clone()))?,
        };
        if !spec.noise && mode == SimulateMode::Ensemble {
            return Err(usage("--no-noise applies to single trajectories only"));
        }
        if mode == SimulateMode::Ensemble {
            spec.trajectory
                .validate(&spec.params)
                .map_err(|e| usage(e.to_string()))?;
        }
        Ok(spec)
    }

    pub fn echo(&self) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("simulate.delta".into(), json!(self.params.delta()));
        m.insert("simulate.g".into(), json!(self.params.g()));
        m.insert("simulate.eta".into(), json!(self.params.eta()));
        m.insert(
            "simulate.mode".into(),
            json!(match self.mode {
                SimulateMode::Single => "single",
                SimulateMode::Ensemble => "ensemble",
            }),
        );
        if self.mode == SimulateMode::Single {
            m.insert("simulate.noise".into(), json!(self.noise));
            m.insert("simulate.index".into(), json!(self.index));
        }
        echo_trajectory(&self.trajectory, &mut m);
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_beat_file_beat_preset() {
        let file: FileConfig = toml::from_str("[sweep]\npoints = 7\ndelta_min = 1.0\n").unwrap();
        let flags = SweepLayer {
            points: Some(5),
            ..SweepLayer::default()
        };
        let s = SweepSpec::resolve(
            flags,
            TrajectoryLayer::default(),
            &file,
            Some(Preset::Threshold),
        )
        .unwrap();
        assert_eq!(s.points, 5);
        assert_eq!(s.delta_min, 1.0);
        assert_eq!(s.delta_max, 26.0);
        assert_eq!(
            s.methods,
            vec![Method::Semiclassical, Method::Exact, Method::Boltzmann]
        );
        assert!(s.trajectory.is_none());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<FileConfig>("[sweep]\npionts = 3\n").is_err());
        assert!(toml::from_str::<FileConfig>("colour = 1\n").is_err());
    }

    #[test]
    fn methods_are_canonicalized() {
        let m = parse_methods(&["langevin".into(), "exact".into(), "exact".into()]).unwrap();
        assert_eq!(m, vec![Method::Exact, Method::Langevin]);
        assert!(parse_methods(&["quantum".into()]).is_err());
    }

    #[test]
    fn langevin_pulls_in_trajectory_config() {
        let flags = SweepLayer {
            methods: Some(vec!["langevin".into()]),
            ..SweepLayer::default()
        };
        let traj = TrajectoryLayer {
            seed: Some(7),
            scheme: Some("ito".into()),
            ..TrajectoryLayer::default()
        };
        let s = SweepSpec::resolve(flags, traj, &FileConfig::default(), None).unwrap();
        let t = s.trajectory.unwrap();
        assert_eq!(t.seed, 7);
        assert_eq!(t.scheme.name(), "ito_euler_maruyama");
        assert_eq!(t.n_traj, TrajectoryConfig::default().n_traj);
    }

    #[test]
    fn sweep_grid_hits_both_ends() {
        let flags = SweepLayer {
            delta_min: Some(14.0),
            delta_max: Some(26.0),
            points: Some(121),
            ..SweepLayer::default()
        };
        let s = SweepSpec::resolve(
            flags,
            TrajectoryLayer::default(),
            &FileConfig::default(),
            None,
        )
        .unwrap();
        let d = s.deltas();
        assert_eq!(d.len(), 121);
        assert_eq!((d[0], d[120]), (14.0, 26.0));
        assert!((d[60] - 20.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_values_are_usage_errors() {
        let bad = |l: SweepLayer| {
            SweepSpec::resolve(l, TrajectoryLayer::default(), &FileConfig::default(), None)
        };
        assert!(matches!(
            bad(SweepLayer {
                points: Some(1),
                ..SweepLayer::default()
            }),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(
            bad(SweepLayer {
                delta_min: Some(5.0),
                delta_max: Some(5.0),
                ..SweepLayer::default()
            }),
            Err(CliError::Usage(_))
        ));
        let w = WignerLayer {
            resolution: Some(100),
            ..WignerLayer::default()
        };
        assert!(WignerSpec::resolve(w, &FileConfig::default(), None).is_err());
        assert!(WignerSpec::resolve(
            WignerLayer::default(),
            &FileConfig::default(),
            Some(Preset::Overview)
        )
        .is_err());
    }
}
