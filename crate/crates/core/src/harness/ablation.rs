use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::run::{run_experiment, RunRecord};
use crate::error::{Error, Result};
use crate::network::{EmbeddingSpec, OutputTransform};
use crate::pde::{BoundaryHandling, ProblemKind};

/// Boundary points used when an ablation moves a boundary condition into
/// the loss. Helmholtz gets 100 per edge; periodic problems get one pair
/// per point.
const HELMHOLTZ_BC_POINTS: usize = 400;
const PERIODIC_BC_POINTS: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Toggle {
    /// Gaussian Fourier features on the Helmholtz inputs.
    FourierFeature,
    /// Distance-function output transform on the Helmholtz square.
    Adf,
    /// Periodic embedding of the spatial coordinate.
    PeriodicEmbedding,
    /// Periodic embedding of time alongside the spatial one.
    TimeEmbedding,
}

impl Toggle {
    pub fn name(self) -> &'static str {
        match self {
            Toggle::FourierFeature => "fourier_feature",
            Toggle::Adf => "adf",
            Toggle::PeriodicEmbedding => "periodic_embedding",
            Toggle::TimeEmbedding => "time_embedding",
        }
    }
}

impl std::str::FromStr for Toggle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fourier_feature" => Ok(Toggle::FourierFeature),
            "adf" => Ok(Toggle::Adf),
            "periodic_embedding" => Ok(Toggle::PeriodicEmbedding),
            "time_embedding" => Ok(Toggle::TimeEmbedding),
            other => Err(Error::config(format!("unknown toggle '{other}'"))),
        }
    }
}

/// One ablation variant: which toggles are on, and the resulting config.
#[derive(Clone, Debug)]
pub struct Variant {
    pub pattern: Vec<(Toggle, bool)>,
    pub config: ExperimentConfig,
}

impl Variant {
    pub fn label(&self) -> String {
        self.pattern
            .iter()
            .map(|(t, on)| format!("{}={}", t.name(), if *on { "on" } else { "off" }))
            .collect::<Vec<_>>()
            .join(",")
    }
}

fn check_applicable(base: &ExperimentConfig, toggle: Toggle) -> Result<()> {
    let kind = base.problem.kind();
    let ok = match toggle {
        Toggle::FourierFeature => matches!(base.network.embedding, EmbeddingSpec::GaussianFourier { .. }),
        Toggle::Adf => base.network.output_transform == OutputTransform::AdfHelmholtz,
        Toggle::PeriodicEmbedding => matches!(
            base.network.embedding,
            EmbeddingSpec::Periodic1dPlusTime { .. } | EmbeddingSpec::PeriodicXAndT { .. }
        ),
        Toggle::TimeEmbedding => matches!(base.network.embedding, EmbeddingSpec::PeriodicXAndT { .. }),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::config(format!(
            "toggle '{}' does not apply to the {} config",
            toggle.name(),
            kind.name()
        )))
    }
}

fn switch_off(cfg: &mut ExperimentConfig, toggle: Toggle) {
    match toggle {
        Toggle::FourierFeature => cfg.network.embedding = EmbeddingSpec::None,
        Toggle::Adf => {
            cfg.network.output_transform = OutputTransform::None;
            cfg.problem.bc = BoundaryHandling::LossTerm;
            if cfg.collocation.bc == 0 {
                cfg.collocation.bc = HELMHOLTZ_BC_POINTS;
            }
        }
        Toggle::PeriodicEmbedding => {
            cfg.network.embedding = EmbeddingSpec::None;
            cfg.problem.bc = BoundaryHandling::LossTerm;
            if cfg.collocation.bc == 0 {
                cfg.collocation.bc = PERIODIC_BC_POINTS;
            }
        }
        Toggle::TimeEmbedding => {
            if let EmbeddingSpec::PeriodicXAndT { period_x, .. } = cfg.network.embedding {
                cfg.network.embedding = EmbeddingSpec::Periodic1dPlusTime { m: 1, period_x };
            }
        }
    }
}

/// Variants to run, in the row order of the comparison table.
///
/// Time embedding only exists on top of the periodic spatial embedding, so
/// the combination with the spatial embedding off and time embedding on is
/// not generated.
pub fn ablation_variants(base: &ExperimentConfig, toggles: &[Toggle]) -> Result<Vec<Variant>> {
    base.validate()?;
    if toggles.iter().enumerate().any(|(i, t)| toggles[..i].contains(t)) {
        return Err(Error::config("toggles must be distinct"));
    }
    for &t in toggles {
        check_applicable(base, t)?;
    }
    let n = toggles.len();
    let mut out = Vec::new();
    for mask in 0..(1usize << n) {
        // Bit set = toggle off; ascending masks give on-before-off ordering.
        let pattern: Vec<(Toggle, bool)> = toggles
            .iter()
            .enumerate()
            .map(|(i, &t)| (t, mask & (1 << (n - 1 - i)) == 0))
            .collect();
        let on = |t: Toggle| pattern.iter().find(|p| p.0 == t).map(|p| p.1);
        if on(Toggle::PeriodicEmbedding) == Some(false) && on(Toggle::TimeEmbedding) == Some(true) {
            continue;
        }
        let mut config = base.clone();
        // Time first: switching the spatial embedding off removes both.
        let mut offs: Vec<Toggle> = pattern.iter().filter(|p| !p.1).map(|p| p.0).collect();
        offs.sort_by_key(|t| (*t != Toggle::TimeEmbedding) as u8);
        for t in offs {
            switch_off(&mut config, t);
        }
        if let Some(out_dir) = &base.output_dir {
            let tag: String = pattern
                .iter()
                .map(|(t, on)| format!("{}-{}", t.name(), if *on { "on" } else { "off" }))
                .collect::<Vec<_>>()
                .join("_");
            config.output_dir = Some(out_dir.join(if tag.is_empty() { "base".into() } else { tag }));
        }
        config.validate()?;
        out.push(Variant { pattern, config });
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct AblationRow {
    pub variant: Variant,
    pub record: RunRecord,
}

#[derive(Clone, Debug)]
pub struct AblationTable {
    pub toggles: Vec<Toggle>,
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    /// `ablation.csv`: one column per toggle, then mean and best relative L2.
    pub fn to_csv(&self) -> String {
        let mut text = String::new();
        for t in &self.toggles {
            write!(text, "{},", t.name()).expect("write to string");
        }
        text.push_str("mean_rel_l2,best_rel_l2,seeds_completed\n");
        for row in &self.rows {
            for (_, on) in &row.variant.pattern {
                write!(text, "{},", if *on { "on" } else { "off" }).expect("write to string");
            }
            let fmt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_else(|| "nan".into());
            let done = row.record.seeds.iter().filter(|s| s.rel_l2.is_some()).count();
            writeln!(
                text,
                "{},{},{}",
                fmt(row.record.mean_rel_l2),
                fmt(row.record.best_rel_l2),
                done
            )
            .expect("write to string");
        }
        text
    }

    pub fn mean_of(&self, pattern: &[bool]) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.variant.pattern.iter().map(|p| p.1).eq(pattern.iter().copied()))
            .and_then(|r| r.record.mean_rel_l2)
    }
}

/// Runs every variant and, with an output directory, writes `ablation.csv`.
pub fn run_ablation(base: &ExperimentConfig, toggles: &[Toggle]) -> Result<AblationTable> {
    let variants = ablation_variants(base, toggles)?;
    let mut rows = Vec::with_capacity(variants.len());
    for variant in variants {
        let record = run_experiment(&variant.config)?;
        rows.push(AblationRow { variant, record });
    }
    let table = AblationTable {
        toggles: toggles.to_vec(),
        rows,
    };
    if let Some(out) = &base.output_dir {
        std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        let path = out.join("ablation.csv");
        std::fs::write(&path, table.to_csv()).map_err(|e| Error::io(&path, e))?;
    }
    Ok(table)
}

/// Toggles that reproduce the paper's ablation table for each problem.
pub fn default_toggles(kind: ProblemKind) -> Vec<Toggle> {
    match kind {
        ProblemKind::Helmholtz => vec![Toggle::FourierFeature, Toggle::Adf],
        ProblemKind::Advection => vec![Toggle::PeriodicEmbedding, Toggle::TimeEmbedding],
        ProblemKind::AllenCahn => vec![Toggle::PeriodicEmbedding],
    }
}
