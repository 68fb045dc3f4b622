//! Monte Carlo power simulation over plate-layout scenarios, with an
//! analytic oracle for the no-batch design.
//!
//! Grid cells (sigma_b x effect) are independent work units. Every
//! replicate draws from its own counter-derived stream keyed on
//! `(seed, scenario, sigma index, effect index, replicate index)`, so the
//! engine produces bit-identical results serially, in parallel, and under
//! any scheduling. With the `parallel` feature (default) cells run on the
//! rayon pool; without it they run sequentially.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::design::{PlateAssignment, SampleRoster};
use crate::error::{Error, Result};
use crate::lmm::{self, LmmData, Method};
use crate::rng::{label_tag, stream};

/// Case/control counts on one plate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlateSpec {
    pub plate: usize,
    pub cases: usize,
    pub controls: usize,
}

/// A named plate layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub plate_layout: Vec<PlateSpec>,
}

impl Scenario {
    pub fn new(name: impl Into<String>, plate_layout: Vec<PlateSpec>) -> Result<Self> {
        let name = name.into();
        if plate_layout.is_empty() {
            return Err(Error::Invalid(format!("scenario '{name}' has no plates")));
        }
        for spec in &plate_layout {
            if spec.cases + spec.controls == 0 {
                return Err(Error::Invalid(format!(
                    "scenario '{name}': plate {} is empty",
                    spec.plate
                )));
            }
        }
        let scenario = Self { name, plate_layout };
        if scenario.n_cases() == 0 || scenario.n_controls() == 0 {
            return Err(Error::Invalid(format!(
                "scenario '{}' must contain both cases and controls",
                scenario.name
            )));
        }
        Ok(scenario)
    }

    /// One hypothetical plate holding all 97 cases and 191 controls.
    pub fn single_plate() -> Self {
        Self::new(
            "single-plate",
            vec![PlateSpec {
                plate: 1,
                cases: 97,
                controls: 191,
            }],
        )
        .expect("built-in scenario")
    }

    /// Block-randomized three-plate layout with case/control ratios
    /// 32/65, 32/63 and 33/63.
    pub fn blocked() -> Self {
        let layout = [(1, 32, 65), (2, 32, 63), (3, 33, 63)];
        Self::new(
            "blocked",
            layout
                .iter()
                .map(|&(plate, cases, controls)| PlateSpec {
                    plate,
                    cases,
                    controls,
                })
                .collect(),
        )
        .expect("built-in scenario")
    }

    /// All 97 cases on plate one; 95 and 96 controls on plates two and
    /// three.
    pub fn confounded() -> Self {
        let layout = [(1, 97, 0), (2, 0, 95), (3, 0, 96)];
        Self::new(
            "confounded",
            layout
                .iter()
                .map(|&(plate, cases, controls)| PlateSpec {
                    plate,
                    cases,
                    controls,
                })
                .collect(),
        )
        .expect("built-in scenario")
    }

    /// The as-executed 34-plate glycomics assignment (reading order
    /// top-to-bottom, then left-to-right).
    pub fn glycomics() -> Self {
        const LAYOUT: [(usize, usize); 34] = [
            (4, 0),
            (3, 0),
            (11, 0),
            (5, 0),
            (12, 0),
            (21, 40),
            (1, 3),
            (2, 0),
            (16, 13),
            (0, 15),
            (1, 3),
            (0, 9),
            (4, 0),
            (1, 0),
            (1, 0),
            (1, 0),
            (2, 0),
            (0, 4),
            (0, 3),
            (0, 16),
            (0, 15),
            (1, 0),
            (3, 0),
            (0, 4),
            (1, 0),
            (0, 5),
            (1, 9),
            (2, 8),
            (0, 4),
            (2, 14),
            (1, 6),
            (1, 9),
            (0, 7),
            (0, 4),
        ];
        Self::new(
            "glycomics",
            LAYOUT
                .iter()
                .enumerate()
                .map(|(i, &(cases, controls))| PlateSpec {
                    plate: i + 1,
                    cases,
                    controls,
                })
                .collect(),
        )
        .expect("built-in scenario")
    }

    /// All four built-in scenarios in study order.
    pub fn builtin_all() -> Vec<Self> {
        vec![
            Self::single_plate(),
            Self::blocked(),
            Self::confounded(),
            Self::glycomics(),
        ]
    }

    /// Look up a built-in scenario by name (`e1`..`e4` aliases accepted).
    pub fn builtin(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "single-plate" | "e1" => Some(Self::single_plate()),
            "blocked" | "e2" => Some(Self::blocked()),
            "confounded" | "e3" => Some(Self::confounded()),
            "glycomics" | "e4" => Some(Self::glycomics()),
            _ => None,
        }
    }

    pub fn n_cases(&self) -> usize {
        self.plate_layout.iter().map(|p| p.cases).sum()
    }

    pub fn n_controls(&self) -> usize {
        self.plate_layout.iter().map(|p| p.controls).sum()
    }

    pub fn n_samples(&self) -> usize {
        self.n_cases() + self.n_controls()
    }

    /// Single-plate designs are analyzed by OLS, everything else by the
    /// random-intercept model.
    pub fn uses_ols(&self) -> bool {
        self.plate_layout.len() == 1
    }

    /// Materialize the layout as a roster plus plate assignment, e.g. for
    /// confounding diagnostics or CSV export.
    pub fn roster_and_assignment(&self) -> (SampleRoster, PlateAssignment) {
        let mut ids = Vec::new();
        let mut group = Vec::new();
        let mut plate_of = BTreeMap::new();
        let mut counter = 0;
        let mut n_plates = 0;
        for spec in &self.plate_layout {
            n_plates = n_plates.max(spec.plate);
            for _ in 0..spec.cases {
                counter += 1;
                let id = format!("s{counter:03}");
                ids.push(id.clone());
                group.push("case".to_string());
                plate_of.insert(id, spec.plate);
            }
            for _ in 0..spec.controls {
                counter += 1;
                let id = format!("s{counter:03}");
                ids.push(id.clone());
                group.push("control".to_string());
                plate_of.insert(id, spec.plate);
            }
        }
        let roster = SampleRoster::new(ids, group, None).expect("valid scenario roster");
        let assignment =
            PlateAssignment::new(plate_of, n_plates).expect("valid scenario assignment");
        (roster, assignment)
    }
}

/// Simulation grid: effect sizes, batch SDs, error SD, test level,
/// replicate count and master seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimGrid {
    pub effect_sizes: Vec<f64>,
    pub sigma_b_values: Vec<f64>,
    pub sigma_e: f64,
    pub alpha: f64,
    pub n_reps: usize,
    pub seed: u64,
}

impl Default for SimGrid {
    fn default() -> Self {
        Self {
            effect_sizes: (0..=15).map(|k| k as f64 / 10.0).collect(),
            sigma_b_values: vec![3.6, 1.8, 0.9, 0.45],
            sigma_e: 1.8,
            alpha: 0.05,
            n_reps: 1000,
            seed: 1729,
        }
    }
}

impl SimGrid {
    pub fn validate(&self) -> Result<()> {
        if self.effect_sizes.is_empty() {
            return Err(Error::Invalid("effect_sizes must be non-empty".into()));
        }
        if self.sigma_b_values.is_empty() {
            return Err(Error::Invalid("sigma_b_values must be non-empty".into()));
        }
        if self.sigma_b_values.iter().any(|s| *s < 0.0) {
            return Err(Error::Invalid("sigma_b values must be >= 0".into()));
        }
        if !(self.sigma_e > 0.0) {
            return Err(Error::Invalid("sigma_e must be > 0".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Invalid("alpha must lie inside (0, 1)".into()));
        }
        if self.n_reps == 0 {
            return Err(Error::Invalid("n_reps must be at least 1".into()));
        }
        Ok(())
    }
}

/// One grid point of a power curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerPoint {
    pub effect_size: f64,
    pub power: f64,
    pub mc_standard_error: f64,
    /// Replicates whose fit errored; excluded from the power fraction.
    pub failed: usize,
}

/// Rejection proportions over the effect grid for one (scenario,
/// sigma_b).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCurve {
    pub scenario: String,
    pub sigma_b: f64,
    pub n_reps: usize,
    pub points: Vec<PowerPoint>,
}

impl PowerCurve {
    /// Cells where more than 1% of fits failed.
    pub fn flagged_points(&self) -> Vec<&PowerPoint> {
        self.points
            .iter()
            .filter(|pt| pt.failed * 100 > self.n_reps)
            .collect()
    }
}

/// Draw one replicate: `y = effect * group + b_plate + e` with one batch
/// intercept per plate.
pub fn generate_replicate(
    scenario: &Scenario,
    effect: f64,
    sigma_b: f64,
    sigma_e: f64,
    rng: &mut impl Rng,
) -> LmmData {
    let n = scenario.n_samples();
    let mut y = Vec::with_capacity(n);
    let mut group = Vec::with_capacity(n);
    let mut batch = Vec::with_capacity(n);
    for spec in &scenario.plate_layout {
        let b = if sigma_b > 0.0 {
            sigma_b * rng.sample::<f64, _>(StandardNormal)
        } else {
            0.0
        };
        for i in 0..spec.cases + spec.controls {
            let is_case = i < spec.cases;
            let e = if sigma_e > 0.0 {
                sigma_e * rng.sample::<f64, _>(StandardNormal)
            } else {
                0.0
            };
            y.push(effect * f64::from(is_case) + b + e);
            group.push(is_case);
            batch.push(spec.plate);
        }
    }
    LmmData::new(y, group, batch).expect("scenario layouts satisfy the data invariants")
}

fn run_cell(
    scenario: &Scenario,
    grid: &SimGrid,
    scenario_tag: u64,
    sigma_idx: usize,
    effect_idx: usize,
) -> PowerPoint {
    let sigma_b = grid.sigma_b_values[sigma_idx];
    let effect = grid.effect_sizes[effect_idx];
    let cell_tag = ((sigma_idx as u64) << 32) | effect_idx as u64;
    let mut rejections = 0usize;
    let mut failed = 0usize;
    for rep in 0..grid.n_reps {
        let mut rng = stream(grid.seed, [scenario_tag, cell_tag, rep as u64]);
        let data = generate_replicate(scenario, effect, sigma_b, grid.sigma_e, &mut rng);
        let fit = if scenario.uses_ols() {
            lmm::fit_ols(&data)
        } else {
            lmm::fit_lmm(&data, Method::Reml)
        };
        match fit {
            Ok(fit) => {
                if fit.p_value < grid.alpha {
                    rejections += 1;
                }
            }
            Err(_) => failed += 1,
        }
    }
    let used = grid.n_reps - failed;
    let power = if used > 0 {
        rejections as f64 / used as f64
    } else {
        0.0
    };
    PowerPoint {
        effect_size: effect,
        power,
        mc_standard_error: (power * (1.0 - power) / grid.n_reps as f64).sqrt(),
        failed,
    }
}

/// Estimate power across the grid: one curve per sigma_b, one point per
/// effect size. Deterministic given `grid.seed` regardless of execution
/// order.
pub fn run_power(scenario: &Scenario, grid: &SimGrid) -> Result<Vec<PowerCurve>> {
    grid.validate()?;
    let scenario_tag = label_tag(&scenario.name);
    let cells: Vec<(usize, usize)> = (0..grid.sigma_b_values.len())
        .flat_map(|s| (0..grid.effect_sizes.len()).map(move |e| (s, e)))
        .collect();

    #[cfg(feature = "parallel")]
    let points: Vec<PowerPoint> = cells
        .par_iter()
        .map(|&(s, e)| run_cell(scenario, grid, scenario_tag, s, e))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let points: Vec<PowerPoint> = cells
        .iter()
        .map(|&(s, e)| run_cell(scenario, grid, scenario_tag, s, e))
        .collect();

    let n_effects = grid.effect_sizes.len();
    Ok(grid
        .sigma_b_values
        .iter()
        .enumerate()
        .map(|(s, sigma_b)| PowerCurve {
            scenario: scenario.name.clone(),
            sigma_b: *sigma_b,
            n_reps: grid.n_reps,
            points: points[s * n_effects..(s + 1) * n_effects].to_vec(),
        })
        .collect())
}

/// Normal-approximation power of the two-sided pooled test:
/// `Phi(nc - z) + Phi(-nc - z)` with noncentrality
/// `|effect| / (sigma * sqrt(1/n1 + 1/n2))` and `z` the upper
/// `alpha/2` normal quantile.
pub fn analytic_power_ols(
    effect: f64,
    n1: usize,
    n2: usize,
    sigma: f64,
    alpha: f64,
) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::Invalid("sigma must be > 0".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Invalid("alpha must lie inside (0, 1)".into()));
    }
    if n1 == 0 || n2 == 0 {
        return Err(Error::Invalid("group sizes must be positive".into()));
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let se = sigma * (1.0 / n1 as f64 + 1.0 / n2 as f64).sqrt();
    let nc = effect.abs() / se;
    let z = normal.inverse_cdf(1.0 - alpha / 2.0);
    Ok(normal.cdf(nc - z) + normal.cdf(-nc - z))
}

/// Output format for [`emit_curves`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveFormat {
    Csv,
    Svg,
}

/// Write curves as CSV (`scenario,sigma_b,effect,power,mc_se`) or as a
/// single-panel SVG line chart.
pub fn emit_curves(curves: &[PowerCurve], path: impl AsRef<Path>, format: CurveFormat) -> Result<()> {
    if curves.is_empty() {
        return Err(Error::Invalid("no curves to emit".into()));
    }
    let path = path.as_ref();
    let text = match format {
        CurveFormat::Csv => curves_to_csv(curves),
        CurveFormat::Svg => curves_to_svg(curves),
    };
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn curves_to_csv(curves: &[PowerCurve]) -> String {
    let mut out = String::from("scenario,sigma_b,effect,power,mc_se\n");
    for curve in curves {
        for pt in &curve.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                curve.scenario, curve.sigma_b, pt.effect_size, pt.power, pt.mc_standard_error
            );
        }
    }
    out
}

/// Parse a CSV previously written by [`emit_curves`]. The replicate count
/// and failure counters are not stored in the file and come back as zero.
pub fn read_curves_csv(path: impl AsRef<Path>) -> Result<Vec<PowerCurve>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse {
        row: 0,
        message: "empty curve file".into(),
    })?;
    if header != "scenario,sigma_b,effect,power,mc_se" {
        return Err(Error::Parse {
            row: 0,
            message: format!("unexpected header '{header}'"),
        });
    }
    let mut curves: Vec<PowerCurve> = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::Parse {
                row: i + 1,
                message: format!("expected 5 fields, found {}", fields.len()),
            });
        }
        let parse = |v: &str| -> Result<f64> {
            v.parse().map_err(|_| Error::Parse {
                row: i + 1,
                message: format!("non-numeric value '{v}'"),
            })
        };
        let sigma_b = parse(fields[1])?;
        let point = PowerPoint {
            effect_size: parse(fields[2])?,
            power: parse(fields[3])?,
            mc_standard_error: parse(fields[4])?,
            failed: 0,
        };
        match curves
            .last_mut()
            .filter(|c| c.scenario == fields[0] && c.sigma_b == sigma_b)
        {
            Some(curve) => curve.points.push(point),
            None => curves.push(PowerCurve {
                scenario: fields[0].to_string(),
                sigma_b,
                n_reps: 0,
                points: vec![point],
            }),
        }
    }
    Ok(curves)
}

const SVG_PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

fn curves_to_svg(curves: &[PowerCurve]) -> String {
    let width = 720.0;
    let height = 480.0;
    let (left, right, top, bottom) = (70.0, 190.0, 30.0, 50.0);
    let plot_w = width - left - right;
    let plot_h = height - top - bottom;
    let max_effect = curves
        .iter()
        .flat_map(|c| c.points.iter().map(|p| p.effect_size))
        .fold(0.0f64, f64::max)
        .max(1e-9);
    let x = |effect: f64| left + plot_w * effect / max_effect;
    let y = |power: f64| top + plot_h * (1.0 - power);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">"
    );
    let _ = writeln!(
        svg,
        "<rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>"
    );
    // Gridlines and axis labels.
    for k in 0..=4 {
        let p = k as f64 / 4.0;
        let yy = y(p);
        let _ = writeln!(
            svg,
            "<line x1=\"{left}\" y1=\"{yy:.2}\" x2=\"{:.2}\" y2=\"{yy:.2}\" stroke=\"#dddddd\"/>",
            left + plot_w
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"end\">{p}</text>",
            left - 8.0,
            yy + 4.0
        );
    }
    for k in 0..=5 {
        let e = max_effect * k as f64 / 5.0;
        let xx = x(e);
        let _ = writeln!(
            svg,
            "<line x1=\"{xx:.2}\" y1=\"{top}\" x2=\"{xx:.2}\" y2=\"{:.2}\" stroke=\"#dddddd\"/>",
            top + plot_h
        );
        let _ = writeln!(
            svg,
            "<text x=\"{xx:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\">{e:.2}</text>",
            top + plot_h + 18.0
        );
    }
    let _ = writeln!(
        svg,
        "<rect x=\"{left}\" y=\"{top}\" width=\"{plot_w}\" height=\"{plot_h}\" \
         fill=\"none\" stroke=\"black\"/>"
    );
    let _ = writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"13\" text-anchor=\"middle\">effect size</text>",
        left + plot_w / 2.0,
        height - 12.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"18\" y=\"{:.2}\" font-size=\"13\" text-anchor=\"middle\" \
         transform=\"rotate(-90 18 {:.2})\">power</text>",
        top + plot_h / 2.0,
        top + plot_h / 2.0
    );
    // One polyline per (scenario, sigma_b).
    for (i, curve) in curves.iter().enumerate() {
        let color = SVG_PALETTE[i % SVG_PALETTE.len()];
        let mut pts = String::new();
        for p in &curve.points {
            let _ = write!(pts, "{:.2},{:.2} ", x(p.effect_size), y(p.power));
        }
        let _ = writeln!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
            pts.trim_end()
        );
        let ly = top + 16.0 * i as f64 + 10.0;
        let _ = writeln!(
            svg,
            "<line x1=\"{:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{color}\" \
             stroke-width=\"2\"/>",
            left + plot_w + 10.0,
            left + plot_w + 30.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\">{} sigma_b={}</text>",
            left + plot_w + 36.0,
            ly + 4.0,
            curve.scenario,
            curve.sigma_b
        );
    }
    svg.push_str("</svg>\n");
    svg
}
