//! Machine-readable reports and their text renderings.

use std::fmt::Write as _;

use loam_core::{
    decompose, difference_series, estimate_components, exact_repeatability_ci,
    gw_reproducibility_ci, repeatability_loam, reproducibility_loam, sigma_ci, AnovaDecomposition,
    ComparisonResult, Component, DifferenceKind, IntervalResult, MeasurementGrid, ModelParams,
    SizePlan, TrueLoam, VarianceComponents,
};
use serde::Serialize;

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub input_sha256: Option<String>,
    pub seed: Option<u64>,
}

impl Provenance {
    pub fn new(input_sha256: Option<String>, seed: Option<u64>) -> Self {
        Self {
            tool: TOOL_NAME,
            tool_version: TOOL_VERSION,
            input_sha256,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DesignEcho {
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct AnovaRow {
    pub source: &'static str,
    pub ss: f64,
    pub df: usize,
    pub ms: f64,
}

pub fn anova_rows(anova: &AnovaDecomposition) -> [AnovaRow; 4] {
    let row = |source, ss, df, ms| AnovaRow { source, ss, df, ms };
    [
        row("A", anova.ss_a, anova.df_a, anova.ms_a),
        row("B", anova.ss_b, anova.df_b, anova.ms_b),
        row("AB", anova.ss_ab, anova.df_ab, anova.ms_ab),
        row("E", anova.ss_e, anova.df_e, anova.ms_e),
    ]
}

#[derive(Debug, Clone, Serialize)]
pub struct ComponentsBlock {
    #[serde(flatten)]
    pub estimates: VarianceComponents,
    /// Intervals for `σ_A`, `σ_B`, `σ_AB`, `σ_E`, in that order.
    pub sigma_ci: Vec<IntervalResult>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitBlock {
    pub limit: f64,
    pub upper_ci: IntervalResult,
    pub lower_ci: IntervalResult,
}

#[derive(Debug, Clone, Serialize)]
pub struct LoamBlock {
    pub z: f64,
    pub level: f64,
    pub reproducibility: LimitBlock,
    pub repeatability: LimitBlock,
}

#[derive(Debug, Clone, Serialize)]
pub struct DifferenceRow {
    pub subject: String,
    pub observer: String,
    pub replicate: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DifferencesBlock {
    pub to_subject_mean: Vec<DifferenceRow>,
    pub to_cell_mean: Vec<DifferenceRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub design: DesignEcho,
    pub anova: [AnovaRow; 4],
    pub components: ComponentsBlock,
    pub loam: LoamBlock,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub differences: Option<DifferencesBlock>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy)]
pub struct EstimateOptions {
    pub level: f64,
    pub z: f64,
    pub emit_differences: bool,
}

/// Full single-dataset analysis.
pub fn estimate(
    grid: &MeasurementGrid,
    options: EstimateOptions,
    provenance: Provenance,
) -> loam_core::Result<RunReport> {
    let EstimateOptions { level, z, .. } = options;
    let anova = decompose(grid);
    let components = estimate_components(&anova);
    let sigma_ci = [Component::A, Component::B, Component::AB, Component::E]
        .into_iter()
        .map(|c| sigma_ci(&components, &anova, c, level))
        .collect::<loam_core::Result<Vec<_>>>()?;
    let (gw_upper, gw_lower) = gw_reproducibility_ci(&anova, level, z)?;
    let (ex_upper, ex_lower) = exact_repeatability_ci(&anova, level, z)?;
    let d = grid.design();
    let differences = options.emit_differences.then(|| DifferencesBlock {
        to_subject_mean: difference_rows(grid, DifferenceKind::ToSubjectMean),
        to_cell_mean: difference_rows(grid, DifferenceKind::ToCellMean),
    });
    Ok(RunReport {
        design: DesignEcho {
            a: d.a(),
            b: d.b(),
            c: d.c(),
            n: d.n(),
        },
        anova: anova_rows(&anova),
        components: ComponentsBlock {
            estimates: components,
            sigma_ci,
        },
        loam: LoamBlock {
            z,
            level,
            reproducibility: LimitBlock {
                limit: reproducibility_loam(&anova, z).limit,
                upper_ci: gw_upper,
                lower_ci: gw_lower,
            },
            repeatability: LimitBlock {
                limit: repeatability_loam(&anova, z).limit,
                upper_ci: ex_upper,
                lower_ci: ex_lower,
            },
        },
        differences,
        provenance,
    })
}

fn difference_rows(grid: &MeasurementGrid, kind: DifferenceKind) -> Vec<DifferenceRow> {
    difference_series(grid, kind)
        .differences
        .into_iter()
        .map(|d| DifferenceRow {
            subject: grid.subject_labels()[d.subject].clone(),
            observer: grid.observer_labels()[d.observer].clone(),
            replicate: d.replicate + 1,
            value: d.value,
        })
        .collect()
}

/// Compact decimal for text output.
fn num(x: f64) -> String {
    if x.is_nan() {
        "-".into()
    } else {
        format!("{x:.6}")
    }
}

fn interval(ci: &IntervalResult) -> String {
    if !ci.available {
        return "unavailable".into();
    }
    let mut s = format!("({}, {})", num(ci.lower), num(ci.upper));
    if ci.clamped {
        s.push_str(" lower clamped at 0");
    }
    s
}

fn provenance_text(out: &mut String, p: &Provenance) {
    let _ = writeln!(out, "{} {}", p.tool, p.tool_version);
    if let Some(sha) = &p.input_sha256 {
        let _ = writeln!(out, "input sha256 {sha}");
    }
    if let Some(seed) = p.seed {
        let _ = writeln!(out, "seed {seed}");
    }
}

impl RunReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let d = self.design;
        let _ = writeln!(out, "design  a={} b={} c={} N={}", d.a, d.b, d.c, d.n);
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<8}{:>16}{:>8}{:>16}", "source", "SS", "df", "MS");
        for r in &self.anova {
            let _ = writeln!(
                out,
                "{:<8}{:>16}{:>8}{:>16}",
                r.source,
                num(r.ss),
                r.df,
                num(r.ms)
            );
        }
        let _ = writeln!(out);
        let v = &self.components.estimates;
        let names = ["A", "B", "AB", "E"];
        let raw = [v.sigma2_a_raw, v.sigma2_b_raw, v.sigma2_ab_raw, v.sigma2_e];
        let truncated = [v.sigma2_a, v.sigma2_b, v.sigma2_ab, v.sigma2_e];
        let _ = writeln!(
            out,
            "{:<8}{:>16}{:>16}  sigma {:.0}% CI",
            "effect",
            "var raw",
            "var",
            self.loam.level * 100.0
        );
        for i in 0..4 {
            let _ = writeln!(
                out,
                "{:<8}{:>16}{:>16}  {}",
                names[i],
                num(raw[i]),
                num(truncated[i]),
                interval(&self.components.sigma_ci[i])
            );
        }
        let _ = writeln!(out);
        let l = &self.loam;
        let _ = writeln!(out, "LOAM z={} level={}", l.z, l.level);
        for (name, block) in [
            ("reproducibility", &l.reproducibility),
            ("repeatability", &l.repeatability),
        ] {
            let _ = writeln!(
                out,
                "{name:<16} ±{}  upper CI {}  lower CI {}",
                num(block.limit),
                interval(&block.upper_ci),
                interval(&block.lower_ci)
            );
        }
        if let Some(diffs) = &self.differences {
            let _ = writeln!(out);
            let _ = writeln!(
                out,
                "subject,observer,replicate,to_subject_mean,to_cell_mean"
            );
            for (s, c) in diffs.to_subject_mean.iter().zip(&diffs.to_cell_mean) {
                let _ = writeln!(
                    out,
                    "{},{},{},{:?},{:?}",
                    s.subject, s.observer, s.replicate, s.value, c.value
                );
            }
        }
        let _ = writeln!(out);
        provenance_text(&mut out, &self.provenance);
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PlanReport {
    pub solve_for: &'static str,
    pub sigma2_b0: f64,
    pub sigma2_ab0: f64,
    pub sigma2_e0: f64,
    /// The fixed count of the other axis.
    pub fixed: usize,
    pub c: usize,
    pub target_width: f64,
    pub level: f64,
    pub z: f64,
    #[serde(flatten)]
    pub plan: SizePlan,
    pub provenance: Provenance,
}

impl PlanReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let (solved, fixed) = match self.solve_for {
            "subjects" => ("a", "b"),
            _ => ("b", "a"),
        };
        let _ = writeln!(
            out,
            "{solved}* = {}  ({fixed}={} c={} target width {})",
            self.plan.count, self.fixed, self.c, self.target_width
        );
        let _ = writeln!(out, "W({solved}*) = {}", self.plan.width);
        match self.plan.width_below {
            Some(w) => {
                let _ = writeln!(out, "W({solved}*-1) = {w}");
            }
            None => {
                let _ = writeln!(out, "W({solved}*-1) = n/a");
            }
        }
        if self.plan.exhaustive {
            let _ = writeln!(out, "width not monotone; solved by linear scan");
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub methods: [String; 2],
    pub design: DesignEcho,
    #[serde(flatten)]
    pub result: ComparisonResult,
    pub provenance: Provenance,
}

impl CompareReport {
    pub fn to_text(&self) -> String {
        let r = &self.result;
        let [x, y] = &self.methods;
        let mut out = String::new();
        let d = self.design;
        let _ = writeln!(out, "design  a={} b={} c={} N={}", d.a, d.b, d.c, d.n);
        let kind = match r.kind {
            loam_core::LoamKind::Reproducibility => "reproducibility",
            loam_core::LoamKind::Repeatability => "repeatability",
        };
        let _ = writeln!(out, "{kind} LOAM, z={}", r.z);
        let _ = writeln!(out, "{x:<16} ±{:?}", r.limit_x);
        let _ = writeln!(out, "{y:<16} ±{:?}", r.limit_y);
        let _ = writeln!(out, "difference       {:?}", r.observed_diff);
        let _ = writeln!(out, "95% CI           ({:?}, {:?})", r.ci_95.0, r.ci_95.1);
        let _ = writeln!(out, "p-value          {:?}", r.p_value);
        let _ = writeln!(
            out,
            "resamples        {}  redraws {}",
            r.n_resamples, r.degenerate_redraws
        );
        let _ = writeln!(out);
        provenance_text(&mut out, &self.provenance);
        out
    }
}

/// Sidecar written next to simulated data.
#[derive(Debug, Clone, Serialize)]
pub struct TruthReport {
    pub params: ModelParams,
    pub design: DesignEcho,
    pub z: f64,
    pub truth: TrueLoam,
    pub provenance: Provenance,
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}
