use std::path::{Path, PathBuf};

use anyhow::Result;
use marl_lob_core::complexity::{delta_dimension, CorrelationCurve, DimensionCurve};
use marl_lob_core::stats::MomentReport;
use rayon::prelude::*;

use crate::analyze::{LoadedRun, ANALYSIS_DIR};
use crate::artifacts::{
    delta_dimension_csv, moments_compare_csv, read_dimensions, read_moments, write_atomic, CompareColumn, MomentRow,
};
use crate::CliError;

fn report_rows(rep: &MomentReport) -> Vec<MomentRow> {
    rep.rows()
        .iter()
        .map(|(name, m)| MomentRow {
            name: name.to_string(),
            estimate: m.as_ref().ok().map(|m| (m.value, m.ci_low, m.ci_high)),
        })
        .collect()
}

fn curve_from_pairs(pairs: Vec<(usize, f64)>) -> DimensionCurve {
    DimensionCurve {
        delay: 0,
        theiler_window: 0,
        points: pairs
            .into_iter()
            .map(|(m, d)| {
                (
                    m,
                    CorrelationCurve {
                        radii: Vec::new(),
                        integral: Vec::new(),
                        dimension: d,
                        region: (0, 0),
                        scaling_found: true,
                    },
                )
            })
            .collect(),
    }
}

/// Moments and `D(m)` of a run: read from its `analysis/` outputs when
/// present, computed otherwise.
fn summarise(run: &LoadedRun) -> Result<(Vec<MomentRow>, DimensionCurve)> {
    let dir = run.dir.join(ANALYSIS_DIR);
    let moments_file = dir.join("moments.csv");
    let dims_file = dir.join("dimension_curve.csv");
    let moments = if moments_file.is_file() {
        read_moments(&moments_file)?
    } else {
        report_rows(&run.moments()?)
    };
    let dims = if dims_file.is_file() {
        curve_from_pairs(read_dimensions(&dims_file)?)
    } else {
        run.dimension_curve()?
    };
    Ok((moments, dims))
}

fn unique_labels(runs: &[LoadedRun]) -> Vec<String> {
    let mut labels: Vec<String> = Vec::new();
    for r in runs {
        let base = r.manifest.label();
        let n = labels.iter().filter(|l| l.split(" #").next() == Some(base.as_str())).count();
        labels.push(if n == 0 { base } else { format!("{base} #{}", n + 1) });
    }
    labels
}

/// Cross-run tables against `baseline`: `moments_compare.csv` (baseline
/// included) and `delta_dimension.csv`.
pub fn cmd_compare(baseline: Option<&Path>, manifests: &[PathBuf], out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let Some(baseline) = baseline else {
        return Err(CliError::usage("compare needs --baseline"));
    };
    if !baseline.exists() {
        return Err(CliError::usage(format!("baseline {} not found", baseline.display())));
    }
    if manifests.is_empty() {
        return Err(CliError::usage("compare needs at least one manifest besides the baseline"));
    }
    let mut paths = vec![baseline.to_path_buf()];
    paths.extend(manifests.iter().cloned());
    let runs = paths
        .iter()
        .map(|p| LoadedRun::load(p, None))
        .collect::<Result<Vec<_>>>()
        .map_err(CliError::Runtime)?;
    let summaries = runs
        .par_iter()
        .map(summarise)
        .collect::<Result<Vec<_>>>()
        .map_err(CliError::Runtime)?;
    let labels = unique_labels(&runs);

    let mut columns: Vec<CompareColumn> = labels
        .iter()
        .zip(&summaries)
        .map(|(label, (m, _))| CompareColumn {
            label: label.clone(),
            moments: m.clone(),
        })
        .collect();
    let base_dims = &summaries[0].1;
    let deltas: Vec<(String, _)> = labels
        .iter()
        .zip(&summaries)
        .skip(1)
        .map(|(label, (_, d))| (label.clone(), delta_dimension(d, base_dims)))
        .collect();

    let written = [
        ("moments_compare.csv", moments_compare_csv(&mut columns)),
        ("delta_dimension.csv", delta_dimension_csv(&deltas)),
    ]
    .into_iter()
    .map(|(name, bytes)| {
        let p = out.join(name);
        write_atomic(&p, &bytes).map(|_| p)
    })
    .collect::<Result<Vec<_>>>()
    .map_err(CliError::Runtime)?;
    println!("compared {} runs against {}", manifests.len(), labels[0]);
    Ok(written)
}
