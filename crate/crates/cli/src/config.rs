//! Line-oriented `key = value` run configurations and figure presets.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use kd_core::ParticleStatistics;

use crate::error::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    SingleModeMomentum,
    SingleModePosition,
    MultimodeSlice,
    IdenticalSlice,
    ComplementaritySweep,
    DiscontinuityProbe,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::SingleModeMomentum,
        Experiment::SingleModePosition,
        Experiment::MultimodeSlice,
        Experiment::IdenticalSlice,
        Experiment::ComplementaritySweep,
        Experiment::DiscontinuityProbe,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Experiment::SingleModeMomentum => "single-mode-momentum",
            Experiment::SingleModePosition => "single-mode-position",
            Experiment::MultimodeSlice => "multimode-slice",
            Experiment::IdenticalSlice => "identical-slice",
            Experiment::ComplementaritySweep => "complementarity-sweep",
            Experiment::DiscontinuityProbe => "discontinuity-probe",
        }
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| format!("unknown experiment `{s}`"))
    }
}

/// How many diffraction orders each grating keeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    Fixed(usize),
    /// Smallest window whose dropped tail mass is below the tolerance.
    Auto(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    /// Stem of every output file.
    pub name: String,
    pub q_spread: Option<f64>,
    pub q_star_spread: Option<f64>,
    pub p_values: Vec<f64>,
    pub k_left: Option<f64>,
    pub k_right: Option<f64>,
    pub k: Option<f64>,
    pub w: f64,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub fixed_p: f64,
    pub q_range: Range,
    pub x_range: Range,
    pub y_range: Range,
    pub epsilons: Vec<f64>,
    pub statistics: Vec<ParticleStatistics>,
    pub truncation: Truncation,
    pub svg: bool,
}

impl RunConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            name: experiment.as_str().to_string(),
            q_spread: None,
            q_star_spread: None,
            p_values: Vec::new(),
            k_left: None,
            k_right: None,
            k: None,
            w: kd_core::diffraction::DEFAULT_PULSE_AREA,
            p: None,
            q: None,
            fixed_p: 0.0,
            q_range: Range {
                min: -4.0,
                max: 4.0,
                step: 0.02,
            },
            x_range: Range {
                min: -10.0,
                max: 10.0,
                step: 0.1,
            },
            y_range: Range {
                min: -10.0,
                max: 10.0,
                step: 0.1,
            },
            epsilons: vec![1e-1, 1e-2, 1e-3, 1e-4],
            statistics: vec![ParticleStatistics::Boson, ParticleStatistics::Fermion],
            truncation: Truncation::Fixed(2),
            svg: false,
        }
    }

    /// Canonical `key = value` lines; parsing them reproduces `self`.
    pub fn to_lines(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("experiment".to_string(), self.experiment.as_str().to_string()),
            ("name".to_string(), self.name.clone()),
        ];
        let mut push = |k: &str, v: String| out.push((k.to_string(), v));
        for (key, value) in [("Q", self.q_spread), ("Q_star", self.q_star_spread)] {
            if let Some(v) = value {
                push(key, fmt_f64(v));
            }
        }
        if !self.p_values.is_empty() {
            push("P", fmt_list(&self.p_values));
        }
        for (key, value) in [("K_L", self.k_left), ("K_R", self.k_right), ("K", self.k)] {
            if let Some(v) = value {
                push(key, fmt_f64(v));
            }
        }
        push("w", fmt_f64(self.w));
        for (key, value) in [("p", self.p), ("q", self.q)] {
            if let Some(v) = value {
                push(key, fmt_f64(v));
            }
        }
        match self.truncation {
            Truncation::Fixed(n) => push("n_max", n.to_string()),
            Truncation::Auto(tol) => {
                push("n_max", "auto".to_string());
                push("tail_tol", fmt_f64(tol));
            }
        }
        match self.experiment {
            Experiment::MultimodeSlice | Experiment::IdenticalSlice => {
                push("fixed_p", fmt_f64(self.fixed_p));
                push_range(&mut push, "q", &self.q_range);
            }
            Experiment::SingleModePosition | Experiment::DiscontinuityProbe => {
                push_range(&mut push, "x", &self.x_range);
                push_range(&mut push, "y", &self.y_range);
            }
            _ => {}
        }
        if self.experiment == Experiment::DiscontinuityProbe {
            push("epsilons", fmt_list(&self.epsilons));
        }
        if self.experiment == Experiment::IdenticalSlice {
            let s: Vec<&str> = self.statistics.iter().map(ParticleStatistics::as_str).collect();
            push("statistics", s.join(", "));
        }
        push("svg", self.svg.to_string());
        out
    }

    pub fn to_text(&self) -> String {
        self.to_lines().iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

fn push_range(push: &mut impl FnMut(&str, String), axis: &str, r: &Range) {
    push(&format!("{axis}_min"), fmt_f64(r.min));
    push(&format!("{axis}_max"), fmt_f64(r.max));
    push(&format!("{axis}_step"), fmt_f64(r.step));
}

/// Shortest text that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{v:?}")
}

fn fmt_list(values: &[f64]) -> String {
    values.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigurePreset {
    Fig2,
    Fig4,
}

impl FigurePreset {
    pub const ALL: [FigurePreset; 2] = [FigurePreset::Fig2, FigurePreset::Fig4];

    pub fn as_str(&self) -> &'static str {
        match self {
            FigurePreset::Fig2 => "fig2",
            FigurePreset::Fig4 => "fig4",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            FigurePreset::Fig2 => "Gaussian pair slices P(0, q), Q=1, Q*=0.9, K_L=0.2, K_R=0.3, P in {inf, 1.1, 0.75}",
            FigurePreset::Fig4 => "identical bosons and fermions, Q=1, Q*=0.9, K=0.2, P in {200, 1.1, 0.75}",
        }
    }

    /// The preset's configuration. Both figures use `n_max = 2` and the
    /// weak pulse area `w = 0.1`.
    pub fn config(&self) -> RunConfig {
        let mut c = match self {
            FigurePreset::Fig2 => {
                let mut c = RunConfig::new(Experiment::MultimodeSlice);
                c.k_left = Some(0.2);
                c.k_right = Some(0.3);
                c.p_values = vec![f64::INFINITY, 1.1, 0.75];
                c
            }
            FigurePreset::Fig4 => {
                let mut c = RunConfig::new(Experiment::IdenticalSlice);
                c.k = Some(0.2);
                c.p_values = vec![200.0, 1.1, 0.75];
                c.statistics = vec![ParticleStatistics::Boson, ParticleStatistics::Fermion];
                c
            }
        };
        c.name = self.as_str().to_string();
        c.q_spread = Some(1.0);
        c.q_star_spread = Some(0.9);
        c.w = 0.1;
        c.truncation = Truncation::Fixed(2);
        c.fixed_p = 0.0;
        c.q_range = Range {
            min: -4.0,
            max: 4.0,
            step: 0.02,
        };
        c.svg = true;
        c
    }
}

impl FromStr for FigurePreset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        FigurePreset::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown preset `{s}` (expected fig2 or fig4)"))
    }
}

impl fmt::Display for FigurePreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

const KEYS: &[&str] = &[
    "preset",
    "experiment",
    "name",
    "Q",
    "Q_star",
    "P",
    "K_L",
    "K_R",
    "K",
    "w",
    "p",
    "q",
    "fixed_p",
    "q_min",
    "q_max",
    "q_step",
    "x_min",
    "x_max",
    "x_step",
    "y_min",
    "y_max",
    "y_step",
    "epsilons",
    "statistics",
    "n_max",
    "tail_tol",
    "svg",
];

struct Entry {
    line: usize,
    text: String,
    value: String,
}

impl Entry {
    fn err(&self, msg: impl fmt::Display) -> ConfigError {
        ConfigError::at(self.line, &self.text, msg.to_string())
    }

    fn number(&self) -> Result<f64, ConfigError> {
        parse_number(&self.value).map_err(|m| self.err(m))
    }

    fn positive(&self, what: &str) -> Result<f64, ConfigError> {
        let v = self.number()?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(self.err(format!("{what} must be positive and finite, got {}", self.value)));
        }
        Ok(v)
    }

    fn finite(&self) -> Result<f64, ConfigError> {
        let v = self.number()?;
        if !v.is_finite() {
            return Err(self.err(format!("value must be finite, got {}", self.value)));
        }
        Ok(v)
    }

    fn list(&self) -> Result<Vec<f64>, ConfigError> {
        let items: Vec<&str> = self.value.split(',').map(str::trim).collect();
        if items.iter().any(|s| s.is_empty()) {
            return Err(self.err("empty entry in list"));
        }
        items
            .into_iter()
            .map(|s| parse_number(s).map_err(|m| self.err(m)))
            .collect()
    }
}

fn parse_number(s: &str) -> Result<f64, String> {
    match s {
        "inf" | "+inf" | "infinity" | "Infinity" => Ok(f64::INFINITY),
        _ => s
            .parse::<f64>()
            .ok()
            .filter(|v| !v.is_nan())
            .ok_or_else(|| format!("cannot parse `{s}` as a number")),
    }
}

/// Parses a configuration document. A `preset` key seeds every value from
/// that preset; the other keys then override it. Keys under `derived.` (as
/// written into manifests) are ignored.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut entries: BTreeMap<String, Entry> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::at(line, raw, "expected `key = value`".into()));
        };
        let (key, value) = (key.trim(), value.trim());
        if key.starts_with("derived.") {
            continue;
        }
        if !KEYS.contains(&key) {
            return Err(ConfigError::at(line, raw, format!("unknown key `{key}`")));
        }
        if value.is_empty() {
            return Err(ConfigError::at(line, raw, format!("key `{key}` has no value")));
        }
        if let Some(prev) = entries.get(key) {
            return Err(ConfigError::at(
                line,
                raw,
                format!("duplicate key `{key}` (first set on line {})", prev.line),
            ));
        }
        entries.insert(
            key.to_string(),
            Entry {
                line,
                text: raw.to_string(),
                value: value.to_string(),
            },
        );
    }

    let mut config = match entries.get("preset") {
        Some(e) => e.value.parse::<FigurePreset>().map_err(|m| e.err(m))?.config(),
        None => {
            let e = entries
                .get("experiment")
                .ok_or_else(|| ConfigError::missing("experiment", "every run"))?;
            RunConfig::new(e.value.parse::<Experiment>().map_err(|m| e.err(m))?)
        }
    };
    if let Some(e) = entries.get("experiment") {
        let experiment = e.value.parse::<Experiment>().map_err(|m| e.err(m))?;
        if entries.contains_key("preset") && experiment != config.experiment {
            return Err(e.err(format!(
                "preset runs {} but the experiment is set to {}",
                config.experiment.as_str(),
                experiment.as_str()
            )));
        }
    }

    for (key, e) in &entries {
        match key.as_str() {
            "preset" | "experiment" => {}
            "name" => {
                if !e.value.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
                    return Err(e.err("name may only contain letters, digits, `-`, `_` and `.`"));
                }
                config.name = e.value.clone();
            }
            "Q" => config.q_spread = Some(e.positive("spread Q")?),
            "Q_star" => config.q_star_spread = Some(e.positive("spread Q*")?),
            "P" => {
                let values = e.list()?;
                if let Some(bad) = values.iter().find(|v| !(**v > 0.0)) {
                    return Err(e.err(format!("spread P must be positive, got {bad}")));
                }
                config.p_values = values;
            }
            "K_L" => config.k_left = Some(e.positive("wavenumber K_L")?),
            "K_R" => config.k_right = Some(e.positive("wavenumber K_R")?),
            "K" => config.k = Some(e.positive("wavenumber K")?),
            "w" => {
                let w = e.number()?;
                if !(0.0..=kd_core::diffraction::MAX_PULSE_AREA).contains(&w) {
                    return Err(e.err(format!(
                        "pulse area must lie in [0, {}], got {}",
                        kd_core::diffraction::MAX_PULSE_AREA,
                        e.value
                    )));
                }
                config.w = w;
            }
            "p" => config.p = Some(e.finite()?),
            "q" => config.q = Some(e.finite()?),
            "fixed_p" => config.fixed_p = e.finite()?,
            "q_min" => config.q_range.min = e.finite()?,
            "q_max" => config.q_range.max = e.finite()?,
            "q_step" => config.q_range.step = e.positive("q_step")?,
            "x_min" => config.x_range.min = e.finite()?,
            "x_max" => config.x_range.max = e.finite()?,
            "x_step" => config.x_range.step = e.positive("x_step")?,
            "y_min" => config.y_range.min = e.finite()?,
            "y_max" => config.y_range.max = e.finite()?,
            "y_step" => config.y_range.step = e.positive("y_step")?,
            "epsilons" => config.epsilons = e.list()?,
            "statistics" => {
                config.statistics = e
                    .value
                    .split(',')
                    .map(|s| match s.trim() {
                        "boson" => Ok(ParticleStatistics::Boson),
                        "fermion" => Ok(ParticleStatistics::Fermion),
                        other => Err(e.err(format!("unknown statistics `{other}` (expected boson or fermion)"))),
                    })
                    .collect::<Result<_, _>>()?;
            }
            "n_max" => {
                if e.value == "auto" {
                    if !matches!(config.truncation, Truncation::Auto(_)) {
                        config.truncation = Truncation::Auto(kd_core::DEFAULT_TAIL_TOLERANCE);
                    }
                } else {
                    let n: usize = e
                        .value
                        .parse()
                        .map_err(|_| e.err(format!("n_max must be a positive integer or `auto`, got {}", e.value)))?;
                    if n == 0 {
                        return Err(e.err("n_max must be at least 1"));
                    }
                    config.truncation = Truncation::Fixed(n);
                }
            }
            "tail_tol" => {}
            "svg" => {
                config.svg = match e.value.as_str() {
                    "true" => true,
                    "false" => false,
                    other => return Err(e.err(format!("svg must be true or false, got {other}"))),
                }
            }
            _ => unreachable!("key list and match arms agree"),
        }
    }
    if let Some(e) = entries.get("tail_tol") {
        let tol = e.positive("tail_tol")?;
        if tol >= 1.0 {
            return Err(e.err("tail_tol must be below 1"));
        }
        if matches!(config.truncation, Truncation::Fixed(_)) && entries.contains_key("n_max") {
            return Err(e.err("tail_tol needs `n_max = auto`"));
        }
        config.truncation = Truncation::Auto(tol);
    }
    validate(&config)?;
    Ok(config)
}

/// Checks that everything the experiment consumes is present and coherent.
pub fn validate(c: &RunConfig) -> Result<(), ConfigError> {
    let exp = c.experiment.as_str();
    let need = |present: bool, key: &str| {
        if present {
            Ok(())
        } else {
            Err(ConfigError::missing(key, exp))
        }
    };
    match c.experiment {
        Experiment::SingleModeMomentum | Experiment::SingleModePosition => {
            need(c.p.is_some(), "p")?;
            need(c.q.is_some(), "q")?;
            need(c.k_left.is_some() || c.k.is_some(), "K_L")?;
            need(c.k_right.is_some() || c.k.is_some(), "K_R")?;
        }
        Experiment::DiscontinuityProbe => {
            need(c.p.is_some(), "p")?;
            need(c.k.is_some() || (c.k_left.is_some() && c.k_right.is_some()), "K")?;
            if c.epsilons.is_empty() {
                return Err(ConfigError::missing("epsilons", exp));
            }
        }
        Experiment::MultimodeSlice => {
            need(c.q_spread.is_some(), "Q")?;
            need(c.q_star_spread.is_some(), "Q_star")?;
            need(!c.p_values.is_empty(), "P")?;
            need(c.k_left.is_some() || c.k.is_some(), "K_L")?;
            need(c.k_right.is_some() || c.k.is_some(), "K_R")?;
        }
        Experiment::IdenticalSlice => {
            need(c.q_spread.is_some(), "Q")?;
            need(c.q_star_spread.is_some(), "Q_star")?;
            need(!c.p_values.is_empty(), "P")?;
            need(c.k.is_some(), "K")?;
            if c.statistics.is_empty() {
                return Err(ConfigError::missing("statistics", exp));
            }
        }
        Experiment::ComplementaritySweep => {
            need(c.q_spread.is_some(), "Q")?;
            need(c.q_star_spread.is_some(), "Q_star")?;
            need(!c.p_values.is_empty(), "P")?;
        }
    }
    for (axis, r) in [("q", &c.q_range), ("x", &c.x_range), ("y", &c.y_range)] {
        if !(r.max >= r.min) {
            return Err(ConfigError::general(format!("{axis}_min must not exceed {axis}_max")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_preset_file() {
        let c = parse_config("# figure two\npreset = fig2\n").unwrap();
        assert_eq!(c, FigurePreset::Fig2.config());
        assert_eq!(c.p_values[0], f64::INFINITY);
    }

    #[test]
    fn explicit_fig2_matches_preset() {
        let text = "experiment = multimode-slice\nname = fig2\nQ = 1\nQ_star = 0.9\nP = inf, 1.1, 0.75\n\
                    K_L = 0.2\nK_R = 0.3\nw = 0.1\nn_max = 2\nfixed_p = 0\nq_min = -4\nq_max = 4\nq_step = 0.02\nsvg = true\n";
        assert_eq!(parse_config(text).unwrap(), FigurePreset::Fig2.config());
    }

    #[test]
    fn canonical_text_round_trips() {
        for preset in FigurePreset::ALL {
            let c = preset.config();
            assert_eq!(parse_config(&c.to_text()).unwrap(), c);
        }
        let mut c = RunConfig::new(Experiment::DiscontinuityProbe);
        c.p = Some(0.3);
        c.k = Some(0.25);
        c.truncation = Truncation::Auto(1e-17);
        assert_eq!(parse_config(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn preset_values_can_be_overridden() {
        let c = parse_config("preset = fig4\nQ_star = 1\nstatistics = fermion\n").unwrap();
        assert_eq!(c.q_star_spread, Some(1.0));
        assert_eq!(c.statistics, vec![ParticleStatistics::Fermion]);
        assert_eq!(c.k, Some(0.2));
    }

    #[test]
    fn diagnostics_name_the_line() {
        let err = parse_config("preset = fig2\nP = 0\n").unwrap_err();
        assert_eq!(err.line, Some(2));
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(err.to_string().contains("positive"));

        let err = parse_config("experiment = multimode-slice\nbogus = 1\n").unwrap_err();
        assert!(err.to_string().contains("unknown key `bogus`"));
        let err = parse_config("experiment = teleport\n").unwrap_err();
        assert!(err.to_string().contains("unknown experiment"));
        let err = parse_config("preset = fig2\nw = abc\n").unwrap_err();
        assert!(err.to_string().contains("cannot parse"));
        let err = parse_config("experiment = multimode-slice\nQ = 1\n").unwrap_err();
        assert!(err.to_string().contains("missing required key `Q_star`"), "{err}");
        assert!(parse_config("preset = fig2\nQ = 1\nQ = 2\n").is_err());
        assert!(parse_config("preset = fig2\njust words\n").is_err());
    }

    #[test]
    fn derived_keys_and_comments_are_ignored() {
        let c = parse_config("preset = fig2  # figure\nderived.schmidt = 3\n\n").unwrap();
        assert_eq!(c, FigurePreset::Fig2.config());
    }

    #[test]
    fn auto_truncation() {
        let c = parse_config("preset = fig2\nn_max = auto\ntail_tol = 1e-15\n").unwrap();
        assert_eq!(c.truncation, Truncation::Auto(1e-15));
        let c = parse_config("preset = fig2\nn_max = auto\n").unwrap();
        assert_eq!(c.truncation, Truncation::Auto(kd_core::DEFAULT_TAIL_TOLERANCE));
        assert!(parse_config("preset = fig2\nn_max = 2\ntail_tol = 1e-9\n").is_err());
        assert!(parse_config("preset = fig2\nn_max = 0\n").is_err());
    }

    #[test]
    fn number_formatting_round_trips() {
        for v in [0.1, 1e-20, 1.0 / 3.0, -4.0, f64::INFINITY, 200.0] {
            assert_eq!(parse_number(&fmt_f64(v)).unwrap(), v);
        }
        assert!(parse_number("nan").is_err());
    }
}
