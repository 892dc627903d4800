use std::path::Path;

use barcut::arena::{full_report, ArenaParams, TrailerPrediction};
use barcut::io::{
    load_bundle, load_config, load_cutlist, synth_instance, to_json, write_bundle, write_json, Config, EnergySource,
    SynthSpec, MANIFEST_FILE,
};
use barcut::pipeline::{align_bundle, oracle_bundle, AlignOptions, KeywordSetting};
use barcut::transport::sinkhorn_project;
use barcut::{Error, Result, ScoreMatrix};
use ndarray::Array2;
use serde_json::json;

use crate::{EngineArgs, EvaluateArgs, Keywords, Switch, SynthArgs};

/// Text for stdout, or `None` when output went to a file.
type Output = Result<Option<String>>;

fn config(path: Option<&Path>) -> Result<Config> {
    path.map_or_else(|| Ok(Config::default()), load_config)
}

fn emit<T: serde::Serialize>(value: &T, out: Option<&Path>) -> Output {
    match out {
        Some(path) => write_json(path, value).map(|_| None),
        None => to_json(value).map(Some),
    }
}

pub fn align(args: &EngineArgs, exhaustive: bool) -> Output {
    let mut config = config(args.params.as_deref())?;
    if let Some(w) = args.beam_width {
        config.engine.beam_width = w;
    }
    if let Some(m) = args.top_m {
        config.engine.top_m = m;
    }
    if let Some(k) = args.k_max {
        config.engine.k_max = k;
    }
    let options = AlignOptions {
        config,
        guard: matches!(args.guard, Switch::On),
        keywords: match args.keywords {
            Keywords::Require => KeywordSetting::Require,
            Keywords::Boost => KeywordSetting::Boost,
            Keywords::Off => KeywordSetting::Off,
        },
    };
    let bundle = load_bundle(&args.bundle)?;
    let output = if exhaustive {
        oracle_bundle(&bundle, &options)?
    } else {
        align_bundle(&bundle, &options)?
    };
    emit(&output.cutlist, args.out.as_deref())
}

fn is_bundle(path: &Path) -> bool {
    path.join(MANIFEST_FILE).is_file()
}

pub fn evaluate(args: &EvaluateArgs) -> Output {
    let arena = ArenaParams {
        overlap_levenshtein: args.overlap_levenshtein || config(args.params.as_deref())?.arena.overlap_levenshtein,
        ..config(args.params.as_deref())?.arena
    };
    let gt_bundle = load_bundle(&args.ground_truth)?;
    let gt_alignment = gt_bundle
        .ground_truth
        .clone()
        .ok_or_else(|| Error::InvalidInput("ground-truth bundle has no ground_truth alignment".into()))?;
    let gt_features = gt_bundle.shot_table()?.features().clone();
    let gt = TrailerPrediction::from_alignment(gt_alignment, &gt_features)?;

    let pred = if is_bundle(&args.prediction) {
        let b = load_bundle(&args.prediction)?;
        let alignment = b
            .ground_truth
            .clone()
            .ok_or_else(|| Error::InvalidInput("prediction bundle has no ground_truth alignment".into()))?;
        TrailerPrediction::from_alignment(alignment, b.shot_table()?.features())?
    } else {
        let cutlist = load_cutlist(&args.prediction)?;
        TrailerPrediction::from_alignment(cutlist.alignment()?, &gt_features)?
    };
    let report = full_report(&pred, &gt, &arena)?;
    emit(&report, args.report.as_deref())
}

pub fn energy(bundle: &Path) -> Output {
    let b = load_bundle(bundle)?;
    let (energy, source) = b.energy()?;
    let source = match source {
        EnergySource::Override => "override",
        EnergySource::Audio => "audio",
        EnergySource::Default => "default",
    };
    to_json(&json!({ "source": source, "energy": energy })).map(Some)
}

pub fn sinkhorn(path: &Path, tau: f64, iters: usize) -> Output {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let rows: Vec<Vec<f64>> = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidInput(format!("{}: expected a JSON list of rows: {e}", path.display())))?;
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 || rows.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidInput(
            "score matrix must be a non-empty rectangular list of rows".into(),
        ));
    }
    let flat: Vec<f64> = rows.concat();
    let matrix = Array2::from_shape_vec((rows.len(), cols), flat).map_err(|e| Error::Internal(e.to_string()))?;
    let target = sinkhorn_project(&ScoreMatrix::new(matrix)?, tau, iters)?;
    let values: Vec<Vec<f64>> = target.values.outer_iter().map(|r| r.to_vec()).collect();
    to_json(&json!({
        "target": values,
        "iterations": target.iterations_run,
        "row_residual": target.row_residual,
        "col_residual": target.col_residual,
    }))
    .map(Some)
}

pub fn synth(args: &SynthArgs) -> Output {
    let spec = SynthSpec {
        seed: args.seed,
        bars: args.bars,
        shots: args.shots,
        visual_dim: args.visual_dim.unwrap_or(args.dim),
        audio_dim: args.audio_dim.unwrap_or(args.dim),
        planted: args.planted,
    };
    let instance = synth_instance(&spec)?;
    write_bundle(&instance.bundle, &args.out)?;
    let planted = instance.planted.map(|a| a.to_one_based());
    to_json(&json!({
        "bars": spec.bars,
        "shots": spec.shots,
        "visual_dim": spec.visual_dim,
        "audio_dim": spec.audio_dim,
        "seed": spec.seed,
        "planted": planted,
    }))
    .map(Some)
}
