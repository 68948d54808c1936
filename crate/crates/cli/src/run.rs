//! Experiment dispatch. Everything is computed in memory first, so a run
//! that fails part-way writes nothing.

use std::path::{Path, PathBuf};

use kd_core::identical::{complementarity_sweep, symmetrize, IdenticalSystem};
use kd_core::multimode::{DiffractedState, GaussianEntangledState};
use kd_core::numerics::fit::{fit_gaussian, fit_gaussian_free_center, GaussianFitResult};
use kd_core::single_mode::{
    discontinuity_probe, equal_wavenumber_pattern, find_channels, SingleModePair, SingleModeSystem,
};
use kd_core::{choose_truncation, Axis, GratingConfig, PatternGrid};
use num_complex::Complex64;

use crate::config::{fmt_f64, Experiment, Range, RunConfig, Truncation};
use crate::error::CliError;
use crate::output::{grid_csv, svg_plot, table_csv, write_file, Curve};

pub const MANIFEST_NAME: &str = "manifest";

/// Everything a run produces, before it touches the disk.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub config: RunConfig,
    /// `(file name, contents)` in emission order.
    pub csvs: Vec<(String, String)>,
    pub curves: Vec<Curve>,
    /// Derived quantities, written to the manifest under `derived.`.
    pub derived: Vec<(String, String)>,
    pub svg: Option<(String, String)>,
}

impl Artifacts {
    fn new(config: &RunConfig) -> Self {
        Self {
            config: config.clone(),
            csvs: Vec::new(),
            curves: Vec::new(),
            derived: vec![("crate_version".into(), env!("CARGO_PKG_VERSION").into())],
            svg: None,
        }
    }

    fn put(&mut self, key: impl Into<String>, value: impl DerivedValue) {
        self.derived.push((key.into(), value.render()));
    }

    /// Derived value by key (without the `derived.` prefix).
    pub fn derived(&self, key: &str) -> Option<&str> {
        self.derived.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn derived_f64(&self, key: &str) -> Option<f64> {
        self.derived(key).and_then(|v| {
            if v == "inf" {
                Some(f64::INFINITY)
            } else {
                v.parse().ok()
            }
        })
    }

    pub fn manifest(&self) -> String {
        let mut out = String::from("# kd run manifest; rerun with `kd run --config <this file>`\n");
        out.push_str(&self.config.to_text());
        for (k, v) in &self.derived {
            out.push_str(&format!("derived.{k} = {v}\n"));
        }
        out
    }
}

trait DerivedValue {
    fn render(&self) -> String;
}

impl DerivedValue for f64 {
    fn render(&self) -> String {
        fmt_f64(*self)
    }
}

impl DerivedValue for usize {
    fn render(&self) -> String {
        self.to_string()
    }
}

impl DerivedValue for bool {
    fn render(&self) -> String {
        self.to_string()
    }
}

impl DerivedValue for &str {
    fn render(&self) -> String {
        self.to_string()
    }
}

/// File-name-friendly label for a `P` value.
pub fn p_label(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else if p.fract() == 0.0 && p.abs() < 1e15 {
        format!("{}", p as i64)
    } else {
        format!("{p}")
    }
}

fn n_max_for(config: &RunConfig) -> Result<usize, CliError> {
    Ok(match config.truncation {
        Truncation::Fixed(n) => n,
        Truncation::Auto(tol) => choose_truncation(config.w, tol)?,
    })
}

fn grating(config: &RunConfig, k: Option<f64>, n_max: usize) -> Result<GratingConfig, CliError> {
    let k = k.or(config.k).expect("validated config has the wavenumber");
    Ok(GratingConfig::new(config.w, k, n_max)?)
}

fn axis(name: &str, r: &Range) -> Result<Axis, CliError> {
    Ok(Axis::uniform(name, r.min, r.max, r.step)?)
}

pub fn execute(config: &RunConfig) -> Result<Artifacts, CliError> {
    crate::config::validate(config)?;
    let mut art = Artifacts::new(config);
    match config.experiment {
        Experiment::SingleModeMomentum => single_mode_momentum(config, &mut art)?,
        Experiment::SingleModePosition => single_mode_position(config, &mut art)?,
        Experiment::MultimodeSlice => multimode_slice(config, &mut art)?,
        Experiment::IdenticalSlice => identical_slice(config, &mut art)?,
        Experiment::ComplementaritySweep => complementarity(config, &mut art)?,
        Experiment::DiscontinuityProbe => probe(config, &mut art)?,
    }
    if config.svg && !art.curves.is_empty() {
        let (x, y) = match config.experiment {
            Experiment::ComplementaritySweep => ("P", "Schmidt number / overlap"),
            Experiment::DiscontinuityProbe => ("log10 epsilon", "log10 sup |P - 2 P_pro|"),
            _ => ("q", "probability"),
        };
        let title = format!("{} ({})", config.name, config.experiment.as_str());
        art.svg = Some((format!("{}.svg", config.name), svg_plot(&title, x, y, &art.curves)));
    }
    Ok(art)
}

/// Executes `config` and writes its CSVs, manifest and optional SVG into
/// `out`. Returns the written paths.
pub fn run(config: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let art = execute(config)?;
    write_artifacts(&art, out)
}

pub fn write_artifacts(art: &Artifacts, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(out).map_err(|e| CliError::io(format!("creating {}", out.display()), e))?;
    let mut written = Vec::new();
    let mut emit = |name: &str, contents: &str| -> Result<(), CliError> {
        let path = out.join(name);
        write_file(&path, contents)?;
        written.push(path);
        Ok(())
    };
    for (name, csv) in &art.csvs {
        emit(name, csv)?;
    }
    emit(MANIFEST_NAME, &art.manifest())?;
    if let Some((name, svg)) = &art.svg {
        emit(name, svg)?;
    }
    Ok(written)
}

fn single_mode_pair(config: &RunConfig) -> Result<SingleModePair, CliError> {
    let n_max = n_max_for(config)?;
    let left = grating(config, config.k_left, n_max)?;
    let right = grating(config, config.k_right, n_max)?;
    let p = config.p.expect("validated");
    Ok(SingleModePair::new(p, config.q.unwrap_or(p), left, right)?)
}

fn record_tables(art: &mut Artifacts, system: &SingleModeSystem) {
    art.put("n_max", system.left_table().n_max());
    art.put("tail_mass.left", system.left_table().tail_mass());
    art.put("tail_mass.right", system.right_table().tail_mass());
}

fn single_mode_momentum(config: &RunConfig, art: &mut Artifacts) -> Result<(), CliError> {
    let pair = single_mode_pair(config)?;
    let system = SingleModeSystem::new(pair)?;
    record_tables(art, &system);
    let groups = find_channels(&pair);
    let mut rows = Vec::with_capacity(groups.len());
    let mut total = 0.0;
    for g in &groups {
        let prob = system.momentum_joint_probability(g)?;
        total += prob;
        rows.push((g.final_left, g.final_right, prob));
    }

    // oracle: accumulate every history into bins by brute force
    let mut bins: Vec<(f64, f64, Complex64)> = Vec::new();
    for (start_l, start_r) in [(pair.p, pair.q), (pair.q, pair.p)] {
        for (n, bn) in system.left_table().iter() {
            for (m, bm) in system.right_table().iter() {
                let l = start_l + 2.0 * f64::from(n) * pair.left.k;
                let r = start_r + 2.0 * f64::from(m) * pair.right.k;
                let amp = bn * bm / std::f64::consts::SQRT_2;
                match bins
                    .iter_mut()
                    .find(|b| (b.0 - l).abs() <= 1e-9 && (b.1 - r).abs() <= 1e-9)
                {
                    Some(b) => b.2 += amp,
                    None => bins.push((l, r, amp)),
                }
            }
        }
    }
    let residual = rows
        .iter()
        .map(|&(l, r, prob)| {
            let brute = bins
                .iter()
                .find(|b| (b.0 - l).abs() <= 1e-9 && (b.1 - r).abs() <= 1e-9)
                .map_or(0.0, |b| b.2.norm_sqr());
            (prob - brute).abs()
        })
        .fold(0.0, f64::max);
    if bins.len() != rows.len() {
        return Err(CliError::Oracle(format!(
            "channel search found {} bins, brute force {}",
            rows.len(),
            bins.len()
        )));
    }

    art.put("groups", groups.len());
    art.put(
        "interference_groups",
        groups.iter().filter(|g| g.is_interference()).count(),
    );
    art.put("total_probability", total);
    art.put("oracle.brute_force_residual", residual);
    art.csvs.push((
        format!("{}_momentum.csv", config.name),
        table_csv(&["p", "q", "probability"], rows.iter().map(|&(l, r, p)| vec![l, r, p])),
    ));
    Ok(())
}

fn single_mode_position(config: &RunConfig, art: &mut Artifacts) -> Result<(), CliError> {
    let pair = single_mode_pair(config)?;
    let system = SingleModeSystem::new(pair)?;
    record_tables(art, &system);
    let grid = system.position_grid(axis("x", &config.x_range)?, axis("y", &config.y_range)?)?;

    // oracle: modulus squared of the diffracted two-particle plane wave
    let mut direct_residual: f64 = 0.0;
    let mut equal_residual: f64 = 0.0;
    let equal_k = (pair.left.k - pair.right.k).abs() <= 1e-12 * pair.left.k;
    for (point, &value) in grid.points().iter().zip(grid.values()) {
        let (x, y) = (point[0], point[1]);
        let a = Complex64::from_polar(1.0, pair.p * x + pair.q * y) * system.left_profile(x) * system.right_profile(y);
        let b = Complex64::from_polar(1.0, pair.q * x + pair.p * y) * system.right_profile(x) * system.left_profile(y);
        let psi = (a + b) / std::f64::consts::SQRT_2;
        direct_residual = direct_residual.max((psi.norm_sqr() - value).abs());
        if equal_k {
            let eq = equal_wavenumber_pattern(&pair, x, y)?.total.max(0.0);
            equal_residual = equal_residual.max((eq - value).abs());
        }
    }
    art.put("oracle.direct_modulus_residual", direct_residual);
    if equal_k {
        art.put("oracle.equal_wavenumber_residual", equal_residual);
    }
    art.put("max", grid.max());
    art.put("visibility", grid.visibility());
    art.csvs
        .push((format!("{}_position.csv", config.name), grid_csv(&grid)));
    Ok(())
}

fn fit(grid: &PatternGrid, fixed_p: f64) -> Result<GaussianFitResult, CliError> {
    let samples = grid.as_curve().expect("slices have one axis");
    Ok(if fixed_p == 0.0 {
        fit_gaussian(&samples)?
    } else {
        fit_gaussian_free_center(&samples)?
    })
}

fn multimode_slice(config: &RunConfig, art: &mut Artifacts) -> Result<(), CliError> {
    let n_max = n_max_for(config)?;
    let left = grating(config, config.k_left, n_max)?;
    let right = grating(config, config.k_right, n_max)?;
    let q_axis = axis("q", &config.q_range)?;
    let q_spread = config.q_spread.expect("validated");
    let q_star = config.q_star_spread.expect("validated");
    art.put("n_max", n_max);
    let reach = 2.0 * n_max as f64 * left.k.max(right.k);
    let mut pending = Vec::new();
    let mut first = true;
    for &p in &config.p_values {
        let state = GaussianEntangledState::new(q_spread, q_star, p)?;
        let system = DiffractedState::new(state, left, right)?;
        if first {
            art.put("tail_mass.left", system.left_table().tail_mass());
            art.put("tail_mass.right", system.right_table().tail_mass());
            first = false;
        }
        let grid = system.pattern_slice(config.fixed_p, q_axis.clone())?;
        let analytic = system.normalization_analytic()?;
        let numeric = system.normalization_quadrature(&state.quadrature_spec(reach)?)?.value;
        let f = fit(&grid, config.fixed_p)?;
        let label = p_label(p);
        let key = |k: &str| format!("P_{label}.{k}");
        art.put(key("schmidt"), state.schmidt_number()?);
        art.put(key("norm_inv_sq"), analytic);
        art.put(
            key("oracle.quadrature_rel_residual"),
            ((analytic - numeric) / numeric).abs(),
        );
        art.put(key("fit.sigma_eff"), f.sigma_eff);
        art.put(key("fit.q_eff_sq"), f.q_eff_sq);
        art.put(key("fit.center"), f.center);
        art.put(key("fit.r_squared"), f.r_squared);
        art.put(key("fit.max_residual"), f.max_residual);
        art.put(key("peak"), grid.max());
        art.curves.push(Curve {
            label: format!("P = {label}"),
            points: grid.as_curve().expect("slice"),
        });
        pending.push((format!("{}_P_{label}.csv", config.name), grid_csv(&grid)));
    }
    art.csvs.extend(pending);
    Ok(())
}

fn identical_slice(config: &RunConfig, art: &mut Artifacts) -> Result<(), CliError> {
    let n_max = n_max_for(config)?;
    let g = grating(config, config.k, n_max)?;
    art.put("n_max", n_max);
    art.put("tail_mass", g.table()?.tail_mass());
    let q_axis = axis("q", &config.q_range)?;
    let q_spread = config.q_spread.expect("validated");
    let q_star = config.q_star_spread.expect("validated");
    let reach = 2.0 * n_max as f64 * g.k;
    for &stats in &config.statistics {
        for &p in &config.p_values {
            let base = GaussianEntangledState::new(q_spread, q_star, p)?;
            let pair = symmetrize(&base, stats, &g)?;
            let system = IdenticalSystem::new(pair)?;
            let grid = system.pattern_slice(config.fixed_p, q_axis.clone())?;
            let norm = system.norm_quadrature(&base.quadrature_spec(reach)?)?.value;
            let curve = grid.as_curve().expect("slice");
            let argmax = curve
                .iter()
                .fold(
                    (f64::NAN, f64::NEG_INFINITY),
                    |acc, &(q, v)| if v > acc.1 { (q, v) } else { acc },
                )
                .0;
            let label = p_label(p);
            let key = |k: &str| format!("{}.P_{label}.{k}", stats.as_str());
            art.put(key("schmidt"), base.schmidt_number()?);
            art.put(key("overlap"), pair.overlap());
            art.put(key("normalization"), system.normalization());
            art.put(key("oracle.norm_residual"), (norm - 1.0).abs());
            art.put(
                key("value_at_fixed_p"),
                system.amplitude(config.fixed_p, config.fixed_p).norm_sqr(),
            );
            art.put(key("max"), grid.max());
            art.put(key("argmax_q"), argmax);
            art.put(key("visibility"), grid.visibility());
            art.curves.push(Curve {
                label: format!("{} P = {label}", stats.as_str()),
                points: curve,
            });
            art.csvs.push((
                format!("{}_{}_P_{label}.csv", config.name, stats.as_str()),
                grid_csv(&grid),
            ));
        }
    }
    Ok(())
}

fn complementarity(config: &RunConfig, art: &mut Artifacts) -> Result<(), CliError> {
    let q = config.q_spread.expect("validated");
    let qs = config.q_star_spread.expect("validated");
    let rows = complementarity_sweep(q, qs, &config.p_values)?;
    let mut sorted = rows.clone();
    sorted.sort_by(|a, b| a.p_coupling.total_cmp(&b.p_coupling));
    art.put("p_boundary", (q * qs / 2.0).sqrt());
    art.put("overlap_product_limit", 2.0 * q * qs / (q * q + qs * qs));
    art.put(
        "schmidt_non_increasing",
        sorted.windows(2).all(|w| w[1].schmidt <= w[0].schmidt),
    );
    art.put(
        "overlap_non_decreasing",
        sorted.windows(2).all(|w| w[1].overlap >= w[0].overlap),
    );
    let finite: Vec<_> = sorted.iter().filter(|r| r.p_coupling.is_finite()).collect();
    art.curves.push(Curve {
        label: "Schmidt number".into(),
        points: finite.iter().map(|r| (r.p_coupling, r.schmidt)).collect(),
    });
    art.curves.push(Curve {
        label: "overlap".into(),
        points: finite.iter().map(|r| (r.p_coupling, r.overlap)).collect(),
    });
    art.csvs.push((
        format!("{}_sweep.csv", config.name),
        table_csv(
            &["P", "schmidt", "overlap"],
            rows.iter().map(|r| vec![r.p_coupling, r.schmidt, r.overlap]),
        ),
    ));
    Ok(())
}

fn probe(config: &RunConfig, art: &mut Artifacts) -> Result<(), CliError> {
    let n_max = n_max_for(config)?;
    let template = {
        let left = grating(config, config.k_left, n_max)?;
        let right = grating(config, config.k_right, n_max)?;
        let p = config.p.expect("validated");
        SingleModePair::new(p, p, left, right)?
    };
    art.put("n_max", n_max);
    art.put("tail_mass", template.left.table()?.tail_mass());
    let xs = axis("x", &config.x_range)?;
    let ys = axis("y", &config.y_range)?;
    let points: Vec<(f64, f64)> = xs
        .values()
        .iter()
        .flat_map(|&x| ys.values().iter().map(move |&y| (x, y)))
        .collect();
    let rows = discontinuity_probe(&template, &config.epsilons, &points)?;
    art.put(
        "monotone_decreasing",
        rows.windows(2).all(|w| w[1].max_deviation < w[0].max_deviation),
    );
    art.put("last_max_deviation", rows.last().map_or(f64::NAN, |r| r.max_deviation));
    art.curves.push(Curve {
        label: "sup deviation".into(),
        points: rows
            .iter()
            .filter(|r| r.epsilon > 0.0 && r.max_deviation > 0.0)
            .map(|r| (r.epsilon.log10(), r.max_deviation.log10()))
            .collect(),
    });
    art.csvs.push((
        format!("{}_probe.csv", config.name),
        table_csv(
            &["epsilon", "max_deviation", "taylor_bound"],
            rows.iter().map(|r| vec![r.epsilon, r.max_deviation, r.taylor_bound]),
        ),
    ));
    Ok(())
}
