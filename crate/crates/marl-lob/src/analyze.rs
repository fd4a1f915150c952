use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use marl_lob_core::complexity::{dimension_vs_embedding, phase_space_export, DimensionCurve};
use marl_lob_core::stats::{
    acf, impact_observations, log_returns, moment_report, price_impact_curves, MomentReport,
};
use rayon::prelude::*;

use crate::artifacts::{
    acf_csv, acf_tradesigns_csv, dimension_csv, impact_csv, moments_csv, phase_space_csv, read_events,
    read_micro_prices, tradesigns, write_atomic,
};
use crate::config::{AnalysisSection, RunConfig};
use crate::manifest::{ArtifactKind, RunManifest};
use crate::CliError;

pub const ANALYSIS_DIR: &str = "analysis";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Which {
    Moments,
    Acf,
    Impact,
    Complexity,
    All,
}

impl Which {
    fn includes(self, other: Which) -> bool {
        self == Which::All || self == other
    }
}

/// A manifest with its directory and the analysis settings of its run.
pub struct LoadedRun {
    pub manifest: RunManifest,
    pub dir: PathBuf,
    pub analysis: AnalysisSection,
}

impl LoadedRun {
    pub fn load(path: &Path, analysis: Option<&AnalysisSection>) -> Result<Self> {
        let (manifest, dir) = RunManifest::load(path)?;
        let analysis = match analysis {
            Some(a) => a.clone(),
            None => {
                let cfg = manifest.require(&dir, ArtifactKind::Config)?;
                RunConfig::from_file(&cfg)?.analysis
            }
        };
        Ok(LoadedRun { manifest, dir, analysis })
    }

    pub fn micro_prices(&self) -> Result<Vec<f64>> {
        read_micro_prices(&self.manifest.require(&self.dir, ArtifactKind::Prices)?)
    }

    pub fn moments(&self) -> Result<MomentReport> {
        Ok(moment_report(&self.micro_prices()?, None, &self.analysis.moments()))
    }

    /// `D(m)` of the micro-price fluctuations (deviations from the session
    /// mean).
    pub fn dimension_curve(&self) -> Result<DimensionCurve> {
        let prices = self.micro_prices()?;
        let m = prices.iter().sum::<f64>() / prices.len().max(1) as f64;
        let fluct: Vec<f64> = prices.iter().map(|p| p - m).collect();
        let a = &self.analysis;
        dimension_vs_embedding(&fluct, a.embedding_min..=a.embedding_max, &a.dimension())
            .context("correlation dimension")
    }
}

type Outputs = Vec<(&'static str, Vec<u8>)>;

fn moments_outputs(run: &LoadedRun) -> Result<Outputs> {
    Ok(vec![("moments.csv", moments_csv(&run.moments()?))])
}

fn acf_outputs(run: &LoadedRun) -> Result<Outputs> {
    let lag = run.analysis.acf_max_lag;
    let events = read_events(&run.manifest.require(&run.dir, ArtifactKind::Events)?)?;
    let signs = tradesigns(&events);
    let raw = acf(&signs, lag, false).context("trade-sign ACF")?;
    // A one-sided episode has constant signs and no demeaned ACF.
    let demeaned = acf(&signs, lag, true).ok();
    let abs: Vec<f64> = log_returns(&run.micro_prices()?).iter().map(|r| r.abs()).collect();
    let abs_acf = acf(&abs, lag, true).context("absolute-return ACF")?;
    Ok(vec![
        ("acf_tradesigns.csv", acf_tradesigns_csv(&raw, demeaned.as_ref())),
        ("acf_absreturns.csv", acf_csv(&abs_acf)),
    ])
}

fn impact_outputs(run: &LoadedRun) -> Result<Outputs> {
    let events = read_events(&run.manifest.require(&run.dir, ArtifactKind::Events)?)?;
    let obs = impact_observations(&events);
    let (buy, sell) = price_impact_curves(&obs, run.manifest.adv, &run.analysis.impact_bins())?;
    Ok(vec![
        ("price_impact_buyer.csv", impact_csv(&buy)),
        ("price_impact_seller.csv", impact_csv(&sell)),
    ])
}

fn complexity_outputs(run: &LoadedRun) -> Result<Outputs> {
    let curve = run.dimension_curve()?;
    let prices = run.micro_prices()?;
    let phase = phase_space_export(&prices, curve.delay, run.analysis.segment_length).context("phase space")?;
    Ok(vec![
        ("dimension_curve.csv", dimension_csv(&curve)),
        ("phase_space.csv", phase_space_csv(&phase)),
    ])
}

/// Runs the selected analyses of one run and writes them to `out`.
pub fn analyze_run(run: &LoadedRun, which: Which, out: &Path) -> Result<Vec<PathBuf>> {
    let tasks: [(Which, fn(&LoadedRun) -> Result<Outputs>); 4] = [
        (Which::Moments, moments_outputs),
        (Which::Acf, acf_outputs),
        (Which::Impact, impact_outputs),
        (Which::Complexity, complexity_outputs),
    ];
    let produced = tasks
        .par_iter()
        .filter(|(w, _)| which.includes(*w))
        .map(|(_, f)| f(run))
        .collect::<Result<Vec<_>>>()?;
    let mut written = Vec::new();
    for (name, bytes) in produced.into_iter().flatten() {
        let p = out.join(name);
        write_atomic(&p, &bytes)?;
        written.push(p);
    }
    Ok(written)
}

pub fn cmd_analyze(
    manifests: &[PathBuf],
    which: Which,
    out: Option<&Path>,
    config: Option<&Path>,
) -> Result<Vec<PathBuf>, CliError> {
    if manifests.is_empty() {
        return Err(CliError::usage("analyze needs at least one manifest"));
    }
    if out.is_some() && manifests.len() > 1 {
        return Err(CliError::usage("--out takes a single manifest"));
    }
    let analysis = match config {
        Some(p) => Some(RunConfig::from_file(p).map_err(CliError::Usage)?.analysis),
        None => None,
    };
    let results: Vec<Result<Vec<PathBuf>>> = manifests
        .par_iter()
        .map(|m| {
            let run = LoadedRun::load(m, analysis.as_ref())?;
            let dir = out.map(Path::to_path_buf).unwrap_or_else(|| run.dir.join(ANALYSIS_DIR));
            let written = analyze_run(&run, which, &dir).with_context(|| format!("analysing {}", m.display()))?;
            println!("{}: wrote {} files to {}", run.manifest.label(), written.len(), dir.display());
            Ok(written)
        })
        .collect();
    let mut all = Vec::new();
    for r in results {
        all.extend(r.map_err(CliError::Runtime)?);
    }
    Ok(all)
}
