//! The seven commands. Each is a pure function of its input files and
//! resolved configuration: equal inputs produce byte-identical outputs,
//! and every artifact lands in the command's seed-named run directory.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::config::{RunConfig, StudyName};
use crate::errors::{config_error, CliError};
use volumetrics::eval::{
    compare_methods, dropout_study, overfit_study, quintile_analysis, run_cv, write_cv_report,
    Dataset, DropoutArm, MethodComparison, QuintileBucket,
};
use volumetrics::features::{
    assemble, FeatureVector, HourlyObservation, StationMeta,
};
use volumetrics::metrics::{CapacityTable, WilcoxonResult};
use volumetrics::model::TrainedModel;
use volumetrics::nn::{
    train, Activation, AdamHyper, DatasetView, LayerSpec, Loss, LossHistory, TrainConfig,
};
use volumetrics::synth::{export_dataset, generate, GeneratorConfig};
use volumetrics::features::{layout, Standardizer};

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), CliError> {
    let path = dir.join(name);
    std::fs::write(&path, bytes)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

fn json_with_newline<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|e| CliError::Data(format!("serialization: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn load_dataset(config: &RunConfig) -> Result<Dataset, CliError> {
    let dir = config.require_dataset()?;
    let mut dataset = Dataset::load_dir(dir)?;
    if let Some(path) = &config.capacity_table {
        if !path.exists() {
            return Err(config_error(format!(
                "referenced file {} does not exist",
                path.display()
            )));
        }
        dataset.capacity_table = Some(CapacityTable::from_csv_path(path)?);
    }
    Ok(dataset)
}

fn meta_map(dataset: &Dataset) -> BTreeMap<String, &StationMeta> {
    dataset
        .stations
        .iter()
        .map(|s| (s.carriageway_id(), s))
        .collect()
}

fn assemble_row<'a>(
    obs: &HourlyObservation,
    meta: &BTreeMap<String, &'a StationMeta>,
    dataset: &Dataset,
) -> Result<FeatureVector, CliError> {
    let key = format!("{}-{}", obs.station_id, obs.direction);
    let station = meta.get(&key).ok_or_else(|| {
        CliError::Data(format!("no station metadata for carriageway {key}"))
    })?;
    Ok(assemble(obs, station, &dataset.holidays)?)
}

fn loss_history_csv(history: &LossHistory) -> Result<Vec<u8>, CliError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Data(format!("loss history csv: {e}"));
    writer.write_record(["epoch", "train_mae", "val_mae"]).map_err(fail)?;
    for (epoch, (train, val)) in history.train_mae.iter().zip(&history.val_mae).enumerate() {
        writer
            .write_record([&format!("{}", epoch + 1), &format!("{train}"), &format!("{val}")])
            .map_err(fail)?;
    }
    writer.into_inner().map_err(|e| CliError::Data(format!("loss history csv: {e}")))
}

pub fn cmd_generate(config: &RunConfig) -> Result<(), CliError> {
    let seed = config.require_seed()?;
    let generator = GeneratorConfig {
        n_stations: config.n_stations,
        start_date: config.start_date,
        n_days: config.n_days,
        seed,
        penetration_range: (config.penetration_lo, config.penetration_hi),
        ..GeneratorConfig::default()
    };
    let world = generate(&generator)?;
    let dir = config.run_dir("generate")?;
    export_dataset(&world, &dir)?;
    println!(
        "generated {} stations x {} days: {} observations -> {}",
        config.n_stations,
        config.n_days,
        world.observations.len(),
        dir.display()
    );
    Ok(())
}

pub fn cmd_train(config: &RunConfig) -> Result<(), CliError> {
    let seed = config.require_seed()?;
    let dataset = load_dataset(config)?;
    let meta = meta_map(&dataset);

    let mut train_rows: Vec<FeatureVector> = Vec::new();
    let mut train_y: Vec<f64> = Vec::new();
    let mut holdout_rows: Vec<FeatureVector> = Vec::new();
    let mut holdout_y: Vec<f64> = Vec::new();
    for obs in &dataset.observations {
        let Some(target) = obs.target_volume else { continue };
        let row = assemble_row(obs, &meta, &dataset)?;
        if config.holdout.as_deref() == Some(obs.station_id.as_str()) {
            holdout_rows.push(row);
            holdout_y.push(target);
        } else {
            train_rows.push(row);
            train_y.push(target);
        }
    }
    if train_rows.is_empty() {
        return Err(CliError::Data("no observations with target volumes to train on".into()));
    }
    if config.holdout.is_some() && holdout_rows.is_empty() {
        return Err(config_error(format!(
            "holdout station {} has no covered observations",
            config.holdout.as_deref().unwrap_or_default()
        )));
    }

    let standardizer = Standardizer::fit(&train_rows)?;
    let x_train = standardizer.apply_matrix(&train_rows)?;
    // Without a holdout the history watches the training set itself.
    let (x_val, y_val) = if holdout_rows.is_empty() {
        (x_train.clone(), train_y.clone())
    } else {
        (standardizer.apply_matrix(&holdout_rows)?, holdout_y)
    };

    let spec = LayerSpec {
        input_dim: layout::LEN,
        hidden_dims: config.hidden.clone(),
        output_dim: 1,
        activation: Activation::Elu { alpha: 1.0 },
        use_batchnorm: config.batchnorm,
        keep_prob: config.keep_prob,
    };
    let train_config = TrainConfig {
        epochs: config.epochs,
        batch_size: config.batch_size,
        adam: AdamHyper { learning_rate: config.learning_rate, ..AdamHyper::default() },
        loss: Loss::MeanAbsolute,
        seed,
    };
    let (network, history) = train(
        &spec,
        DatasetView::new(&x_train, &train_y),
        DatasetView::new(&x_val, &y_val),
        &train_config,
    )?;

    let dir = config.run_dir("train")?;
    let model = TrainedModel { network, standardizer };
    model.save(&dir.join("model.json"))?;
    write_file(&dir, "loss_history.csv", &loss_history_csv(&history)?)?;
    let last_train = history.train_mae.last().copied().unwrap_or(f64::NAN);
    let last_val = history.val_mae.last().copied().unwrap_or(f64::NAN);
    let held_out = if config.holdout.is_some() { y_val.len() } else { 0 };
    println!(
        "trained on {} hours ({held_out} held out): final MAE train {last_train:.2}, watch {last_val:.2} -> {}",
        train_y.len(),
        dir.display()
    );
    Ok(())
}

pub fn cmd_predict(config: &RunConfig) -> Result<(), CliError> {
    let model_path = config
        .model
        .as_deref()
        .ok_or_else(|| config_error("a model file is required (--model FILE)"))?;
    if !model_path.exists() {
        return Err(config_error(format!(
            "referenced file {} does not exist",
            model_path.display()
        )));
    }
    let model = TrainedModel::load(model_path)?;
    let dataset = load_dataset(config)?;
    let meta = meta_map(&dataset);

    let mut scored: Vec<&HourlyObservation> = Vec::new();
    let mut rows: Vec<FeatureVector> = Vec::new();
    let mut skipped_covered = 0usize;
    for obs in &dataset.observations {
        if obs.target_volume.is_some() && !config.include_covered {
            skipped_covered += 1;
            continue;
        }
        rows.push(assemble_row(obs, &meta, &dataset)?);
        scored.push(obs);
    }
    let predictions = model.predict(&rows)?;

    let mut writer = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Data(format!("predictions csv: {e}"));
    writer
        .write_record(["station_id", "direction", "timestamp", "predicted_volume"])
        .map_err(fail)?;
    for (obs, prediction) in scored.iter().zip(&predictions) {
        writer
            .write_record([
                obs.station_id.as_str(),
                &obs.direction.to_string(),
                &obs.timestamp.format("%Y-%m-%dT%H:%M:%S").to_string(),
                &format!("{prediction}"),
            ])
            .map_err(fail)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| CliError::Data(format!("predictions csv: {e}")))?;

    let dir = config.run_dir("predict")?;
    write_file(&dir, "predictions.csv", &bytes)?;
    println!(
        "scored {} hours ({skipped_covered} covered hours skipped) -> {}",
        predictions.len(),
        dir.display()
    );
    Ok(())
}

pub fn cmd_cv(config: &RunConfig) -> Result<(), CliError> {
    let method = config.resolve_method(config.require_method()?);
    let dataset = load_dataset(config)?;
    let cv = config.cv_config(method)?;
    let result = run_cv(&dataset, &cv)?;
    let dir = config.run_dir("cv")?;
    write_cv_report(&result, &dir)?;
    if !result.histories.is_empty() {
        let mut writer = csv::Writer::from_writer(Vec::new());
        let fail = |e: csv::Error| CliError::Data(format!("histories csv: {e}"));
        writer
            .write_record(["held_out_station", "epoch", "train_mae", "val_mae"])
            .map_err(fail)?;
        for fold in &result.histories {
            for (epoch, (train, val)) in
                fold.history.train_mae.iter().zip(&fold.history.val_mae).enumerate()
            {
                writer
                    .write_record([
                        fold.station_id.as_str(),
                        &format!("{}", epoch + 1),
                        &format!("{train}"),
                        &format!("{val}"),
                    ])
                    .map_err(fail)?;
            }
        }
        let bytes =
            writer.into_inner().map_err(|e| CliError::Data(format!("histories csv: {e}")))?;
        write_file(&dir, "histories.csv", &bytes)?;
    }
    let pooled = &result.pooled;
    println!(
        "{}: pooled r^2 {:.4}, mape {:.2}%, etcr {:.2}%, emfr {:.2}% over {} hours -> {}",
        result.method,
        pooled.r_squared,
        pooled.mape_percent,
        pooled.etcr_percent,
        pooled.emfr_percent,
        pooled.n_hours,
        dir.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct ComparisonRow {
    carriageway: String,
    mape_a: f64,
    mape_b: f64,
}

#[derive(Serialize)]
struct ComparisonJson {
    method_a: String,
    method_b: String,
    n_carriageways: usize,
    median_mape_a: f64,
    median_mape_b: f64,
    mean_mape_a: f64,
    mean_mape_b: f64,
    median_improvement_percent: f64,
    wilcoxon: Option<WilcoxonResult>,
    wilcoxon_note: Option<String>,
    per_carriageway: Vec<ComparisonRow>,
}

fn comparison_text(c: &MethodComparison) -> String {
    let mut out = String::new();
    out.push_str(&format!("{} vs {}\n", c.method_a, c.method_b));
    out.push_str(&format!(
        "median mape: {:.2}% vs {:.2}% (improvement {:.1}%)\n",
        c.median_mape_a, c.median_mape_b, c.median_improvement_percent
    ));
    out.push_str(&format!("mean mape:   {:.2}% vs {:.2}%\n", c.mean_mape_a, c.mean_mape_b));
    match (&c.wilcoxon, &c.wilcoxon_note) {
        (Some(w), _) => out.push_str(&format!(
            "wilcoxon signed-rank: W+ {:.1}, n {}, p = {:.6}\n",
            w.w_plus, w.n_used, w.p_value
        )),
        (None, Some(note)) => out.push_str(&format!("wilcoxon signed-rank: not run ({note})\n")),
        (None, None) => {}
    }
    out.push_str(&format!("\n{:<12} {:>10} {:>10}\n", "carriageway", "mape_a%", "mape_b%"));
    for (id, a, b) in &c.per_carriageway {
        out.push_str(&format!("{id:<12} {a:>10.2} {b:>10.2}\n"));
    }
    out
}

pub fn cmd_compare(config: &RunConfig) -> Result<(), CliError> {
    let name_a = config
        .method_a
        .ok_or_else(|| config_error("compare needs --method-a NAME"))?;
    let name_b = config
        .method_b
        .ok_or_else(|| config_error("compare needs --method-b NAME"))?;
    let dataset = load_dataset(config)?;
    let result_a = run_cv(&dataset, &config.cv_config(config.resolve_method(name_a))?)?;
    let result_b = run_cv(&dataset, &config.cv_config(config.resolve_method(name_b))?)?;
    let comparison = compare_methods(&result_a, &result_b)?;

    let json = ComparisonJson {
        method_a: comparison.method_a.to_string(),
        method_b: comparison.method_b.to_string(),
        n_carriageways: comparison.n_carriageways,
        median_mape_a: comparison.median_mape_a,
        median_mape_b: comparison.median_mape_b,
        mean_mape_a: comparison.mean_mape_a,
        mean_mape_b: comparison.mean_mape_b,
        median_improvement_percent: comparison.median_improvement_percent,
        wilcoxon: comparison.wilcoxon,
        wilcoxon_note: comparison.wilcoxon_note.clone(),
        per_carriageway: comparison
            .per_carriageway
            .iter()
            .map(|(id, a, b)| ComparisonRow { carriageway: id.clone(), mape_a: *a, mape_b: *b })
            .collect(),
    };
    let dir = config.run_dir("compare")?;
    write_file(&dir, "comparison.json", &json_with_newline(&json)?)?;
    write_file(&dir, "comparison.txt", comparison_text(&comparison).as_bytes())?;
    println!(
        "{} vs {}: median mape {:.2}% vs {:.2}%{} -> {}",
        comparison.method_a,
        comparison.method_b,
        comparison.median_mape_a,
        comparison.median_mape_b,
        match &comparison.wilcoxon {
            Some(w) => format!(", p = {:.4}", w.p_value),
            None => ", no signed-rank test".to_string(),
        },
        dir.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct QuintilesJson {
    method: String,
    key: String,
    buckets: Vec<QuintileBucket>,
}

fn quintiles_text(buckets: &[QuintileBucket], key_name: &str) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<5} {:>3} {:>22} {:>10} {:>10}  (ranked by {key_name})\n",
        "group", "n", "key range", "med mape%", "mean mape%"
    ));
    for bucket in buckets {
        out.push_str(&format!(
            "{:<5} {:>3} {:>10.4}..{:>10.4} {:>10.2} {:>10.2}\n",
            bucket.rank,
            bucket.carriageway_ids.len(),
            bucket.key_min,
            bucket.key_max,
            bucket.mape.median,
            bucket.mean_mape,
        ));
    }
    out
}

pub fn cmd_quintiles(config: &RunConfig) -> Result<(), CliError> {
    let method = config.resolve_method(config.require_method()?);
    let dataset = load_dataset(config)?;
    let result = run_cv(&dataset, &config.cv_config(method)?)?;
    let key = config.key.to_key();
    let buckets = quintile_analysis(&result.outcomes, key)?;
    let key_name = match config.key {
        crate::config::QuintileKeyName::Penetration => "penetration",
        crate::config::QuintileKeyName::ProbeVolume => "probe-volume",
    };
    let dir = config.run_dir("quintiles")?;
    let json = QuintilesJson {
        method: result.method.to_string(),
        key: key_name.to_string(),
        buckets: buckets.clone(),
    };
    write_file(&dir, "quintiles.json", &json_with_newline(&json)?)?;
    write_file(&dir, "quintiles.txt", quintiles_text(&buckets, key_name).as_bytes())?;
    println!(
        "{}: mean mape {:.2}% in the lowest {key_name} quintile, {:.2}% in the highest -> {}",
        result.method,
        buckets.first().map(|b| b.mean_mape).unwrap_or(f64::NAN),
        buckets.last().map(|b| b.mean_mape).unwrap_or(f64::NAN),
        dir.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct OverfitJson {
    station_id: String,
    epochs: usize,
    final_train_mae: f64,
    final_val_mae: f64,
    final_gap: f64,
    tail_epochs: usize,
    train_tail_slope: f64,
    train_tail_t: f64,
    val_tail_slope: f64,
    val_tail_t: f64,
    val_rising: bool,
}

#[derive(Serialize)]
struct DropoutArmJson {
    keep_prob: f64,
    median_train_mape: f64,
    median_test_mape: f64,
    gap: f64,
}

#[derive(Serialize)]
struct DropoutJson {
    with_dropout: DropoutArmJson,
    without_dropout: DropoutArmJson,
}

fn arm_json(arm: &DropoutArm) -> DropoutArmJson {
    DropoutArmJson {
        keep_prob: arm.keep_prob,
        median_train_mape: arm.median_train_mape,
        median_test_mape: arm.median_test_mape,
        gap: arm.gap,
    }
}

pub fn cmd_study(config: &RunConfig) -> Result<(), CliError> {
    let which = config
        .which
        .ok_or_else(|| config_error("study needs --which overfit|dropout"))?;
    let dataset = load_dataset(config)?;
    let cv = config.cv_config(volumetrics::eval::Method::Ann { use_batchnorm: config.batchnorm })?;
    let dir = config.run_dir("study")?;
    match which {
        StudyName::Overfit => {
            let station = match &config.station {
                Some(s) => s.clone(),
                None => dataset
                    .station_ids()
                    .first()
                    .cloned()
                    .ok_or_else(|| CliError::Data("dataset has no observations".into()))?,
            };
            let study = overfit_study(&dataset, &cv, &station)?;
            let json = OverfitJson {
                station_id: study.station_id.clone(),
                epochs: study.history.train_mae.len(),
                final_train_mae: study.final_train_mae,
                final_val_mae: study.final_val_mae,
                final_gap: study.final_gap,
                tail_epochs: study.tail_epochs,
                train_tail_slope: study.train_tail_slope,
                train_tail_t: study.train_tail_t,
                val_tail_slope: study.val_tail_slope,
                val_tail_t: study.val_tail_t,
                val_rising: study.val_rising,
            };
            write_file(&dir, "overfit.json", &json_with_newline(&json)?)?;
            write_file(&dir, "curve.csv", &loss_history_csv(&study.history)?)?;
            println!(
                "overfit study on {}: final gap {:.2}, held-out tail slope {:+.4}/epoch{} -> {}",
                study.station_id,
                study.final_gap,
                study.val_tail_slope,
                if study.val_rising { " (rising)" } else { "" },
                dir.display()
            );
        }
        StudyName::Dropout => {
            let study = dropout_study(&dataset, &cv)?;
            let json = DropoutJson {
                with_dropout: arm_json(&study.with_dropout),
                without_dropout: arm_json(&study.without_dropout),
            };
            write_file(&dir, "dropout.json", &json_with_newline(&json)?)?;
            let text = format!(
                "{:<16} {:>10} {:>16} {:>15} {:>8}\n{:<16} {:>10.2} {:>16.2} {:>15.2} {:>8.2}\n{:<16} {:>10.2} {:>16.2} {:>15.2} {:>8.2}\n",
                "arm", "keep_prob", "train mape%", "test mape%", "gap",
                "with dropout",
                study.with_dropout.keep_prob,
                study.with_dropout.median_train_mape,
                study.with_dropout.median_test_mape,
                study.with_dropout.gap,
                "without dropout",
                study.without_dropout.keep_prob,
                study.without_dropout.median_train_mape,
                study.without_dropout.median_test_mape,
                study.without_dropout.gap,
            );
            write_file(&dir, "dropout.txt", text.as_bytes())?;
            println!(
                "dropout study: gap {:.2} with dropout vs {:.2} without -> {}",
                study.with_dropout.gap,
                study.without_dropout.gap,
                dir.display()
            );
        }
    }
    Ok(())
}
