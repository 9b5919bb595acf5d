//! Run configuration: a single JSON document naming one command.

use std::path::PathBuf;

use kuragap::ensemble::{InitMode, ProbeConfig};
use kuragap::meanfield::{MeanFieldConfig, SweepDirection, SweepOptions};
use kuragap::spectral::{Axis, AxisRange, KernelFamily, Plane, ScalarScan, SearchOptions};
use kuragap::{DelayKernel, FrequencyDist, SystemParams};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cases;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{0}")]
    Semantic(String),
}

impl ConfigError {
    pub fn kind(&self) -> &'static str {
        match self {
            ConfigError::Syntax { .. } => "syntax",
            ConfigError::Semantic(_) => "semantic",
        }
    }
}

fn semantic(msg: impl Into<String>) -> ConfigError {
    ConfigError::Semantic(msg.into())
}

fn from_json_error(e: serde_json::Error, context: &str) -> ConfigError {
    use serde_json::error::Category;
    match e.classify() {
        Category::Syntax | Category::Eof | Category::Io => ConfigError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        },
        Category::Data => semantic(format!("{context}{e}")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    HopfLocus,
    NormalForm,
    RegionMap,
    Diagram,
    Meanfield,
    Sweep,
    EnsembleProbe,
    DoubleHopf,
    Verify,
}

impl CommandName {
    pub fn as_str(self) -> &'static str {
        match self {
            CommandName::HopfLocus => "hopf-locus",
            CommandName::NormalForm => "normal-form",
            CommandName::RegionMap => "region-map",
            CommandName::Diagram => "diagram",
            CommandName::Meanfield => "meanfield",
            CommandName::Sweep => "sweep",
            CommandName::EnsembleProbe => "ensemble-probe",
            CommandName::DoubleHopf => "double-hopf",
            CommandName::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct OutputSpec {
    /// `None` writes to standard output.
    pub path: Option<PathBuf>,
    pub format: Format,
    pub emit_plot_script: bool,
}

/// Coupling values, either listed or as an inclusive equally spaced range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CouplingGrid {
    List(Vec<f64>),
    Range(CouplingRange),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingRange {
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

impl CouplingRange {
    fn axis(self) -> AxisRange {
        AxisRange {
            axis: Axis::Coupling,
            from: self.from,
            to: self.to,
            steps: self.steps,
        }
    }
}

impl CouplingGrid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            CouplingGrid::List(v) => v.clone(),
            CouplingGrid::Range(r) => r.axis().values(),
        }
    }

    fn validate(&self, what: &str) -> Result<(), ConfigError> {
        let v = self.values();
        if v.is_empty() {
            return Err(semantic(format!("{what} must contain at least one coupling")));
        }
        if v.iter().any(|k| !(k.is_finite() && *k >= 0.0)) {
            return Err(semantic(format!("{what}: couplings must be finite and ≥ 0")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct HopfLocusParams {
    pub frequency: FrequencyDist,
    pub family: KernelFamily,
    /// Kernel parameter to scan; `None` evaluates the base kernel only.
    pub scan: Option<AxisRange>,
    /// Hopf points kept per parameter value, lowest first.
    pub max_branches: usize,
    pub search: SearchOptions,
}

impl Default for HopfLocusParams {
    fn default() -> Self {
        HopfLocusParams {
            frequency: cases::freq(3.0, 1.0),
            family: KernelFamily::Gamma {
                shape: 3.0,
                mean: 3.0,
                gap: 0.0,
            },
            scan: Some(AxisRange {
                axis: Axis::Gap,
                from: 0.0,
                to: 8.0,
                steps: 81,
            }),
            max_branches: 6,
            search: SearchOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct NormalFormParams {
    pub frequency: FrequencyDist,
    pub kernel: DelayKernel,
    pub search: SearchOptions,
}

impl Default for NormalFormParams {
    fn default() -> Self {
        NormalFormParams {
            frequency: cases::freq(3.0, 1.0),
            kernel: cases::case1(),
            search: SearchOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct RegionMapParams {
    pub frequency: FrequencyDist,
    pub family: KernelFamily,
    pub plane: Plane,
    pub search: SearchOptions,
}

impl Default for RegionMapParams {
    fn default() -> Self {
        RegionMapParams {
            frequency: cases::freq(3.0, 0.3),
            family: KernelFamily::Gamma {
                shape: 3.0,
                mean: 1.0,
                gap: 0.0,
            },
            plane: Plane {
                x: AxisRange {
                    axis: Axis::GammaMean,
                    from: 0.1,
                    to: 2.8,
                    steps: 40,
                },
                y: AxisRange {
                    axis: Axis::Gap,
                    from: 0.0,
                    to: 8.0,
                    steps: 40,
                },
            },
            search: SearchOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct DiagramParams {
    pub frequency: FrequencyDist,
    pub family: KernelFamily,
    /// Kernel parameter on the horizontal axis.
    pub parameter: AxisRange,
    pub couplings: CouplingRange,
    pub search: SearchOptions,
}

impl DiagramParams {
    pub fn plane(&self) -> Plane {
        Plane {
            x: self.parameter,
            y: self.couplings.axis(),
        }
    }
}

impl Default for DiagramParams {
    fn default() -> Self {
        DiagramParams {
            frequency: cases::freq(3.0, 1.0),
            family: KernelFamily::FixedMoments {
                total_mean: 3.0,
                variance: 3.0,
                gamma_mean: 0.5,
            },
            parameter: AxisRange {
                axis: Axis::GammaMean,
                from: 0.05,
                to: 2.95,
                steps: 59,
            },
            couplings: CouplingRange {
                from: 0.0,
                to: 12.0,
                steps: 121,
            },
            search: SearchOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct SweepParams {
    /// Run settings; its coupling is replaced by each grid value.
    pub template: MeanFieldConfig,
    pub couplings: CouplingGrid,
    pub direction: SweepDirection,
    pub floor: f64,
    pub down_start: f64,
    pub gap_threshold: f64,
}

impl SweepParams {
    pub fn options(&self) -> SweepOptions {
        SweepOptions {
            ks: self.couplings.values(),
            direction: self.direction,
            floor: self.floor,
            down_start: self.down_start,
            gap_threshold: self.gap_threshold,
        }
    }
}

impl Default for SweepParams {
    fn default() -> Self {
        let o = SweepOptions::new(Vec::new(), SweepDirection::Both);
        SweepParams {
            template: default_meanfield(cases::case2(), 7.0),
            couplings: CouplingGrid::Range(CouplingRange {
                from: 5.6,
                to: 7.8,
                steps: 23,
            }),
            direction: o.direction,
            floor: o.floor,
            down_start: o.down_start,
            gap_threshold: o.gap_threshold,
        }
    }
}

fn default_meanfield(kernel: DelayKernel, k: f64) -> MeanFieldConfig {
    let params = SystemParams {
        coupling: k,
        freq: cases::freq(3.0, 1.0),
        kernel,
    };
    MeanFieldConfig::new(params, Complex64::new(0.1, 0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct EnsembleProbeParams {
    pub frequency: FrequencyDist,
    pub kernel: DelayKernel,
    pub couplings: CouplingGrid,
    pub probe: ProbeConfig,
}

impl Default for EnsembleProbeParams {
    fn default() -> Self {
        EnsembleProbeParams {
            frequency: cases::freq(3.0, 1.0),
            kernel: cases::case2(),
            couplings: CouplingGrid::Range(CouplingRange {
                from: 5.0,
                to: 8.0,
                steps: 7,
            }),
            probe: ProbeConfig {
                mode: InitMode::Random,
                ..ProbeConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct DoubleHopfParams {
    pub frequency: FrequencyDist,
    pub scan: ScalarScan,
    pub search: SearchOptions,
}

impl Default for DoubleHopfParams {
    fn default() -> Self {
        DoubleHopfParams {
            frequency: cases::freq(3.0, 1.0),
            scan: ScalarScan::new(
                KernelFamily::Gamma {
                    shape: 3.0,
                    mean: 3.0,
                    gap: 0.0,
                },
                Axis::Gap,
                0.0,
                4.0,
            ),
            search: SearchOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct VerifyParams {
    /// Use the reduced finite-N variant of criterion 9.
    pub quick: bool,
    /// Criteria to run; empty runs all.
    pub criteria: Vec<u32>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Job {
    HopfLocus(HopfLocusParams),
    NormalForm(NormalFormParams),
    RegionMap(RegionMapParams),
    Diagram(DiagramParams),
    Meanfield(MeanFieldConfig),
    Sweep(SweepParams),
    EnsembleProbe(EnsembleProbeParams),
    DoubleHopf(DoubleHopfParams),
    Verify(VerifyParams),
}

impl Job {
    pub fn default_for(cmd: CommandName) -> Job {
        match cmd {
            CommandName::HopfLocus => Job::HopfLocus(Default::default()),
            CommandName::NormalForm => Job::NormalForm(Default::default()),
            CommandName::RegionMap => Job::RegionMap(Default::default()),
            CommandName::Diagram => Job::Diagram(Default::default()),
            CommandName::Meanfield => Job::Meanfield(default_meanfield(cases::case1(), 2.8)),
            CommandName::Sweep => Job::Sweep(Default::default()),
            CommandName::EnsembleProbe => Job::EnsembleProbe(Default::default()),
            CommandName::DoubleHopf => Job::DoubleHopf(Default::default()),
            CommandName::Verify => Job::Verify(Default::default()),
        }
    }

    pub fn command(&self) -> CommandName {
        match self {
            Job::HopfLocus(_) => CommandName::HopfLocus,
            Job::NormalForm(_) => CommandName::NormalForm,
            Job::RegionMap(_) => CommandName::RegionMap,
            Job::Diagram(_) => CommandName::Diagram,
            Job::Meanfield(_) => CommandName::Meanfield,
            Job::Sweep(_) => CommandName::Sweep,
            Job::EnsembleProbe(_) => CommandName::EnsembleProbe,
            Job::DoubleHopf(_) => CommandName::DoubleHopf,
            Job::Verify(_) => CommandName::Verify,
        }
    }

    fn params_value(&self) -> serde_json::Value {
        let v = match self {
            Job::HopfLocus(p) => serde_json::to_value(p),
            Job::NormalForm(p) => serde_json::to_value(p),
            Job::RegionMap(p) => serde_json::to_value(p),
            Job::Diagram(p) => serde_json::to_value(p),
            Job::Meanfield(p) => serde_json::to_value(p),
            Job::Sweep(p) => serde_json::to_value(p),
            Job::EnsembleProbe(p) => serde_json::to_value(p),
            Job::DoubleHopf(p) => serde_json::to_value(p),
            Job::Verify(p) => serde_json::to_value(p),
        };
        v.expect("parameters serialise")
    }

    fn from_value(cmd: CommandName, v: serde_json::Value) -> Result<Job, ConfigError> {
        fn de<T: serde::de::DeserializeOwned>(v: serde_json::Value) -> Result<T, ConfigError> {
            serde_json::from_value(v).map_err(|e| from_json_error(e, "params: "))
        }
        Ok(match cmd {
            CommandName::HopfLocus => Job::HopfLocus(de(v)?),
            CommandName::NormalForm => Job::NormalForm(de(v)?),
            CommandName::RegionMap => Job::RegionMap(de(v)?),
            CommandName::Diagram => Job::Diagram(de(v)?),
            CommandName::Meanfield => Job::Meanfield(de(v)?),
            CommandName::Sweep => Job::Sweep(de(v)?),
            CommandName::EnsembleProbe => Job::EnsembleProbe(de(v)?),
            CommandName::DoubleHopf => Job::DoubleHopf(de(v)?),
            CommandName::Verify => Job::Verify(de(v)?),
        })
    }

    /// Replaces the base seed of seeded commands; returns false for others.
    pub fn set_seed(&mut self, seed: u64) -> bool {
        match self {
            Job::EnsembleProbe(p) => p.probe.base_seed = seed,
            Job::Verify(p) => p.seed = seed,
            _ => return false,
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub job: Job,
    pub output: OutputSpec,
    /// Worker threads; `None` leaves the choice to the runtime.
    pub threads: Option<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct Document {
    command: CommandName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    params: Option<serde_json::Value>,
    #[serde(default)]
    output: OutputSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    threads: Option<usize>,
}

impl RunConfig {
    pub fn new(job: Job) -> Self {
        RunConfig {
            job,
            output: OutputSpec::default(),
            threads: None,
        }
    }

    pub fn command(&self) -> CommandName {
        self.job.command()
    }

    /// The document with every default filled in.
    pub fn to_value(&self) -> serde_json::Value {
        let doc = Document {
            command: self.command(),
            params: Some(self.job.params_value()),
            output: self.output.clone(),
            threads: self.threads,
        };
        serde_json::to_value(doc).expect("configuration serialises")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_value()).expect("configuration serialises")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.threads == Some(0) {
            return Err(semantic("threads must be ≥ 1"));
        }
        if self.output.emit_plot_script && self.output.path.is_none() {
            return Err(semantic("emitPlotScript requires output.path"));
        }
        match &self.job {
            Job::HopfLocus(p) => {
                check_freq(&p.frequency)?;
                check_family(&p.family)?;
                if let Some(scan) = &p.scan {
                    check_axis(scan, "scan")?;
                    if scan.axis == Axis::Coupling {
                        return Err(semantic("scan must vary a kernel parameter"));
                    }
                }
                if p.max_branches == 0 {
                    return Err(semantic("maxBranches must be ≥ 1"));
                }
                check_search(&p.search)
            }
            Job::NormalForm(p) => {
                check_freq(&p.frequency)?;
                p.kernel.validate().map_err(core_err("kernel"))?;
                check_search(&p.search)
            }
            Job::RegionMap(p) => {
                check_freq(&p.frequency)?;
                check_family(&p.family)?;
                check_axis(&p.plane.x, "plane.x")?;
                check_axis(&p.plane.y, "plane.y")?;
                if p.plane.x.axis == p.plane.y.axis {
                    return Err(semantic("plane axes must differ"));
                }
                if p.plane.x.axis == Axis::Coupling || p.plane.y.axis == Axis::Coupling {
                    return Err(semantic(
                        "region-map axes must be kernel parameters; use diagram for a coupling axis",
                    ));
                }
                check_search(&p.search)
            }
            Job::Diagram(p) => {
                check_freq(&p.frequency)?;
                check_family(&p.family)?;
                check_axis(&p.parameter, "parameter")?;
                if p.parameter.axis == Axis::Coupling {
                    return Err(semantic("parameter must be a kernel parameter"));
                }
                check_axis(&p.couplings.axis(), "couplings")?;
                if p.couplings.from.min(p.couplings.to) < 0.0 {
                    return Err(semantic("couplings must be ≥ 0"));
                }
                check_search(&p.search)
            }
            Job::Meanfield(c) => {
                check_freq(&c.params.freq)?;
                c.validate().map_err(core_err("params"))
            }
            Job::Sweep(p) => {
                check_freq(&p.template.params.freq)?;
                p.template.validate().map_err(core_err("template"))?;
                p.couplings.validate("couplings")?;
                if !p.couplings.values().windows(2).all(|w| w[0] < w[1]) {
                    return Err(semantic("couplings must be strictly increasing"));
                }
                if !(p.floor > 0.0 && p.floor < 1.0) {
                    return Err(semantic("floor must lie in (0, 1)"));
                }
                if !(p.down_start > 0.0 && p.down_start <= 1.0) {
                    return Err(semantic("downStart must lie in (0, 1]"));
                }
                if !(p.gap_threshold > 0.0) {
                    return Err(semantic("gapThreshold must be > 0"));
                }
                Ok(())
            }
            Job::EnsembleProbe(p) => {
                check_freq(&p.frequency)?;
                p.kernel.validate().map_err(core_err("kernel"))?;
                p.couplings.validate("couplings")?;
                check_probe(&p.probe)
            }
            Job::DoubleHopf(p) => {
                check_freq(&p.frequency)?;
                check_family(&p.scan.family)?;
                if p.scan.axis == Axis::Coupling {
                    return Err(semantic("scan.axis must be a kernel parameter"));
                }
                if !(p.scan.from.is_finite() && p.scan.to.is_finite()) || p.scan.from == p.scan.to {
                    return Err(semantic("scan needs two distinct finite end points"));
                }
                if p.scan.samples == 0 {
                    return Err(semantic("scan.samples must be ≥ 1"));
                }
                check_search(&p.search)
            }
            Job::Verify(p) => match p.criteria.iter().find(|&&c| !(1..=11).contains(&c)) {
                Some(c) => Err(semantic(format!("criteria: {c} is not in 1..=11"))),
                None => Ok(()),
            },
        }
    }
}

fn core_err(field: &'static str) -> impl Fn(kuragap::Error) -> ConfigError {
    move |e| semantic(format!("{field}: {e}"))
}

fn check_freq(f: &FrequencyDist) -> Result<(), ConfigError> {
    FrequencyDist::new(f.center, f.half_width)
        .map(|_| ())
        .map_err(|e| semantic(e.to_string()))
}

fn check_family(f: &KernelFamily) -> Result<(), ConfigError> {
    f.kernel(&[]).map(|_| ()).map_err(core_err("family"))
}

fn check_axis(a: &AxisRange, what: &str) -> Result<(), ConfigError> {
    if a.steps == 0 {
        return Err(semantic(format!("{what}.steps must be ≥ 1")));
    }
    if !(a.from.is_finite() && a.to.is_finite()) {
        return Err(semantic(format!("{what} bounds must be finite")));
    }
    Ok(())
}

fn check_search(s: &SearchOptions) -> Result<(), ConfigError> {
    if s.grid_size < 16 {
        return Err(semantic("search.gridSize must be ≥ 16"));
    }
    if let Some(b) = s.bound {
        if !(b > 0.0 && b.is_finite()) {
            return Err(semantic("search.bound must be finite and > 0"));
        }
    }
    Ok(())
}

fn check_probe(p: &ProbeConfig) -> Result<(), ConfigError> {
    if p.n < 2 {
        return Err(semantic("probe.n must be ≥ 2"));
    }
    if p.trials == 0 {
        return Err(semantic("probe.trials must be ≥ 1"));
    }
    if !(0.0..=1.0).contains(&p.perturbation) {
        return Err(semantic("probe.perturbation must lie in [0, 1]"));
    }
    if !(p.t_end > 0.0 && p.t_end.is_finite()) {
        return Err(semantic("probe.tEnd must be finite and > 0"));
    }
    if !(p.window_fraction > 0.0 && p.window_fraction <= 1.0) {
        return Err(semantic("probe.windowFraction must lie in (0, 1]"));
    }
    if !(p.record_interval > 0.0) {
        return Err(semantic("probe.recordInterval must be > 0"));
    }
    if let Some(dt) = p.dt {
        if !(dt > 0.0) {
            return Err(semantic("probe.dt must be > 0"));
        }
    }
    if let Some(c) = p.clamp {
        if !(c > 0.0) {
            return Err(semantic("probe.clamp must be > 0"));
        }
    }
    Ok(())
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let doc: Document = serde_json::from_str(text).map_err(|e| from_json_error(e, ""))?;
    let params = doc
        .params
        .unwrap_or_else(|| serde_json::Value::Object(Default::default()));
    let job = match params {
        serde_json::Value::Object(ref m) if m.is_empty() => Job::default_for(doc.command),
        v => Job::from_value(doc.command, v)?,
    };
    let cfg = RunConfig {
        job,
        output: doc.output,
        threads: doc.threads,
    };
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL: [CommandName; 9] = [
        CommandName::HopfLocus,
        CommandName::NormalForm,
        CommandName::RegionMap,
        CommandName::Diagram,
        CommandName::Meanfield,
        CommandName::Sweep,
        CommandName::EnsembleProbe,
        CommandName::DoubleHopf,
        CommandName::Verify,
    ];

    #[test]
    fn minimal_config_gets_defaults() {
        let text = r#"{
            "command": "hopf-locus",
            "params": {
                "frequency": {"center": 3, "halfWidth": 1},
                "family": {"type": "fixedMoments", "totalMean": 3, "variance": 3, "gammaMean": 0.5}
            }
        }"#;
        let cfg = parse_config(text).unwrap();
        let Job::HopfLocus(p) = &cfg.job else { panic!() };
        assert_eq!(p.search, SearchOptions::default());
        assert_eq!(p.max_branches, 6);
        assert_eq!(cfg.output.format, Format::Csv);
        let echoed = cfg.to_value();
        assert_eq!(echoed["params"]["search"]["gridSize"], 4000);
    }

    #[test]
    fn negative_width_is_named() {
        let text = r#"{"command": "normal-form", "params": {"frequency": {"center": 3, "halfWidth": -1}}}"#;
        let e = parse_config(text).unwrap_err();
        assert!(matches!(e, ConfigError::Semantic(_)));
        assert!(e.to_string().contains("halfWidth must be ≥ 0"), "{e}");
    }

    #[test]
    fn unknown_keys_are_rejected_by_name() {
        let e = parse_config(r#"{"command": "verify", "colour": 1}"#).unwrap_err();
        assert!(e.to_string().contains("colour"), "{e}");
        let e = parse_config(r#"{"command": "normal-form", "params": {"kernal": {}}}"#).unwrap_err();
        assert!(e.to_string().contains("kernal"), "{e}");
        let e = parse_config(r#"{"command": "ensemble-probe", "params": {"probe": {"trails": 3}}}"#).unwrap_err();
        assert!(e.to_string().contains("trails"), "{e}");
    }

    #[test]
    fn syntax_errors_carry_position() {
        let e = parse_config("{\n  \"command\": \"verify\",,\n}").unwrap_err();
        match e {
            ConfigError::Syntax { line, column, .. } => assert_eq!((line, column), (2, 23)),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn every_default_round_trips() {
        for cmd in ALL {
            let mut cfg = RunConfig::new(Job::default_for(cmd));
            cfg.output.path = Some("out.csv".into());
            cfg.output.emit_plot_script = true;
            cfg.threads = Some(2);
            cfg.validate().unwrap();
            let back = parse_config(&cfg.to_json()).unwrap();
            assert_eq!(back, cfg, "{}", cmd.as_str());
            assert_eq!(back.to_json(), cfg.to_json());
        }
    }

    #[test]
    fn coupling_grid_forms() {
        let list: CouplingGrid = serde_json::from_str("[1.0, 2.0]").unwrap();
        assert_eq!(list.values(), vec![1.0, 2.0]);
        let range: CouplingGrid = serde_json::from_str(r#"{"from": 1, "to": 2, "steps": 3}"#).unwrap();
        assert_eq!(range.values(), vec![1.0, 1.5, 2.0]);
    }

    #[test]
    fn seed_override() {
        let mut job = Job::default_for(CommandName::EnsembleProbe);
        assert!(job.set_seed(42));
        let Job::EnsembleProbe(p) = &job else { panic!() };
        assert_eq!(p.probe.base_seed, 42);
        assert!(!Job::default_for(CommandName::Diagram).set_seed(1));
    }
}
