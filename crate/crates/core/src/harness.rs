//! Ten-fold cross-validation with epoch selection by the best fold-averaged
//! accuracy, an ablation grid over the model variants, and layer-count
//! sweeps. Folds run independently (optionally in parallel); every source
//! of randomness derives from the config seed, so results are reproducible
//! bit for bit.

use std::time::Duration;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{mean_std, one_hot_features, Dataset};
use crate::model::{BatchItem, IhgnnConfig, IhgnnModel, ModelGrads, Variant};
use crate::nn::{scheduled_lr, AdamState, Matrix};
use crate::scalar::Scalar;

pub const NUM_FOLDS: usize = 10;

/// Assignment of every graph to one of the ten folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    assignments: Vec<usize>,
    pub seed: u64,
    pub stratified: bool,
}

impl FoldPlan {
    pub fn fold_of(&self, graph: usize) -> usize {
        self.assignments[graph]
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn fold_size(&self, fold: usize) -> usize {
        self.assignments.iter().filter(|&&f| f == fold).count()
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != fold)
            .collect()
    }
}

/// Deterministic ten-fold split. Stratified mode shuffles within each
/// class and deals so that per-class fold counts differ by at most one;
/// the leftover items go to the currently smallest folds, keeping overall
/// fold sizes within one of each other as well.
pub fn make_folds(d: &Dataset, seed: u64, stratified: bool) -> Result<FoldPlan> {
    if d.len() < NUM_FOLDS {
        return Err(Error::InvalidArgument(format!(
            "{} graphs cannot fill {NUM_FOLDS} folds",
            d.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x0f1d));
    let mut assignments = vec![0usize; d.len()];
    if stratified {
        let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); d.num_classes()];
        for (i, &label) in d.graph_labels().iter().enumerate() {
            by_class[label].push(i);
        }
        let mut fold_sizes = [0usize; NUM_FOLDS];
        for group in &mut by_class {
            group.shuffle(&mut rng);
            let quota = group.len() / NUM_FOLDS;
            let extras = group.len() % NUM_FOLDS;
            // The folds receiving one extra item of this class, smallest
            // overall first (ties by index).
            let mut order: Vec<usize> = (0..NUM_FOLDS).collect();
            order.sort_by_key(|&f| (fold_sizes[f], f));
            let mut counts = [0usize; NUM_FOLDS];
            for (f, c) in counts.iter_mut().enumerate() {
                *c = quota + usize::from(order.iter().position(|&x| x == f).unwrap() < extras);
            }
            let mut cursor = 0;
            for (f, &count) in counts.iter().enumerate() {
                for _ in 0..count {
                    assignments[group[cursor]] = f;
                    cursor += 1;
                }
                fold_sizes[f] += count;
            }
        }
    } else {
        let mut order: Vec<usize> = (0..d.len()).collect();
        order.shuffle(&mut rng);
        for (pos, &graph) in order.iter().enumerate() {
            assignments[graph] = pos % NUM_FOLDS;
        }
    }
    Ok(FoldPlan {
        assignments,
        seed,
        stratified,
    })
}

/// Outcome of training a single fold.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainFoldResult {
    /// Held-out accuracy after every epoch, dropout disabled.
    pub per_epoch_test_accuracy: Vec<f64>,
    /// How many gradient updates each graph contributed to; test-fold
    /// entries must stay zero.
    pub gradient_contributions: Vec<usize>,
}

/// Trains on the nine complementary folds and evaluates on `fold` after
/// every epoch.
pub fn train_fold<T: Scalar>(
    d: &Dataset,
    features: &[Matrix<T>],
    plan: &FoldPlan,
    fold: usize,
    config: &IhgnnConfig,
) -> Result<TrainFoldResult> {
    if fold >= NUM_FOLDS {
        return Err(Error::InvalidArgument(format!("fold {fold} out of range")));
    }
    config.validate()?;
    let train = plan.train_indices(fold);
    let test = plan.test_indices(fold);
    if train.is_empty() || test.is_empty() {
        return Err(Error::InvalidArgument(format!("fold {fold} splits unusable")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, fold as u64));
    let mut model = IhgnnModel::<T>::init(config, &mut rng)?;
    let mut adam = AdamState::new(&model.param_slot_lens());
    let mut contributions = vec![0usize; d.len()];

    let test_items: Vec<BatchItem<'_, T>> = test
        .iter()
        .map(|&i| BatchItem {
            graph: d.graph(i),
            features: &features[i],
            label: d.graph_label(i),
        })
        .collect();
    let test_labels: Vec<usize> = test.iter().map(|&i| d.graph_label(i)).collect();

    let mut order = train.clone();
    let mut curve = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let lr = T::from_config(scheduled_lr(config.learning_rate, config.lr_halve_every, epoch));
        for batch in order.chunks(config.batch_size) {
            let items: Vec<BatchItem<'_, T>> = batch
                .iter()
                .map(|&i| BatchItem {
                    graph: d.graph(i),
                    features: &features[i],
                    label: d.graph_label(i),
                })
                .collect();
            let (_, grads) = model.loss_and_gradients(&items, config, &mut rng)?;
            apply_update(&mut model, &mut adam, &grads, lr)?;
            for &i in batch {
                contributions[i] += 1;
            }
        }
        let predictions = model.predict(&test_items, config)?;
        let correct = predictions
            .iter()
            .zip(&test_labels)
            .filter(|(p, l)| p == l)
            .count();
        curve.push(correct as f64 / test.len() as f64);
    }
    Ok(TrainFoldResult {
        per_epoch_test_accuracy: curve,
        gradient_contributions: contributions,
    })
}

fn apply_update<T: Scalar>(
    model: &mut IhgnnModel<T>,
    adam: &mut AdamState<T>,
    grads: &ModelGrads<T>,
    lr: T,
) -> Result<()> {
    let mut params = model.param_slots_mut();
    adam.step(&mut params, &grads.slots(), lr)
}

/// Cross-validation summary: the full epoch-by-fold accuracy grid, the
/// epoch with the best fold-averaged accuracy, and the spread there.
#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    /// `accuracy_grid[epoch][fold]`.
    pub accuracy_grid: Vec<Vec<f64>>,
    pub selected_epoch: usize,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub wall_time: Duration,
}

/// Picks the epoch whose fold-averaged accuracy is the highest (first on
/// ties) and the mean/std across folds there.
pub fn select_epoch(grid: &[Vec<f64>]) -> (usize, f64, f64) {
    let mut best_epoch = 0;
    let mut best_mean = f64::NEG_INFINITY;
    for (epoch, row) in grid.iter().enumerate() {
        let mean = row.iter().sum::<f64>() / row.len() as f64;
        if mean > best_mean {
            best_mean = mean;
            best_epoch = epoch;
        }
    }
    let (mean, std) = mean_std(&grid[best_epoch]);
    (best_epoch, mean, std)
}

/// Runs all ten folds under the shared plan.
pub fn cross_validate<T: Scalar>(
    d: &Dataset,
    plan: &FoldPlan,
    config: &IhgnnConfig,
) -> Result<CvResult> {
    let started = std::time::Instant::now();
    let features: Vec<Matrix<T>> = one_hot_features(d);
    let fold_results: Vec<Result<TrainFoldResult>> = (0..NUM_FOLDS)
        .into_par_iter()
        .map(|fold| train_fold(d, &features, plan, fold, config))
        .collect();
    let mut curves = Vec::with_capacity(NUM_FOLDS);
    for r in fold_results {
        curves.push(r?.per_epoch_test_accuracy);
    }
    let accuracy_grid: Vec<Vec<f64>> = (0..config.epochs)
        .map(|e| curves.iter().map(|c| c[e]).collect())
        .collect();
    let (selected_epoch, mean_accuracy, std_accuracy) = select_epoch(&accuracy_grid);
    Ok(CvResult {
        accuracy_grid,
        selected_epoch,
        mean_accuracy,
        std_accuracy,
        wall_time: started.elapsed(),
    })
}

/// Cross-validates the full design and all four ablations with the same
/// folds and seed.
pub fn ablation_suite<T: Scalar>(
    d: &Dataset,
    plan: &FoldPlan,
    base_config: &IhgnnConfig,
) -> Result<Vec<(Variant, CvResult)>> {
    Variant::ALL
        .iter()
        .map(|&variant| {
            let config = IhgnnConfig {
                variant,
                ..base_config.clone()
            };
            cross_validate::<T>(d, plan, &config).map(|cv| (variant, cv))
        })
        .collect()
}

/// One cross-validation per layer count.
pub fn layer_sweep<T: Scalar>(
    d: &Dataset,
    plan: &FoldPlan,
    base_config: &IhgnnConfig,
    layer_values: &[usize],
) -> Result<Vec<(usize, CvResult)>> {
    if layer_values.is_empty() {
        return Err(Error::InvalidArgument("no layer counts given".into()));
    }
    layer_values
        .iter()
        .map(|&k| {
            let config = IhgnnConfig {
                num_layers: k,
                ..base_config.clone()
            };
            cross_validate::<T>(d, plan, &config).map(|cv| (k, cv))
        })
        .collect()
}

fn mix_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 over the pair, so per-fold streams are unrelated.
    let mut z = seed
        .wrapping_mul(0x9e3779b97f4a7c15)
        .wrapping_add(stream)
        .wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// `cv_results.csv`: one row per epoch, one column per fold.
pub fn write_cv_results_csv(w: &mut impl std::io::Write, cv: &CvResult) -> std::io::Result<()> {
    let folds = cv.accuracy_grid.first().map_or(0, Vec::len);
    let header: Vec<String> = std::iter::once("epoch".to_string())
        .chain((0..folds).map(|f| format!("fold_{f}")))
        .collect();
    writeln!(w, "{}", header.join(","))?;
    for (epoch, row) in cv.accuracy_grid.iter().enumerate() {
        let cells: Vec<String> = std::iter::once(epoch.to_string())
            .chain(row.iter().map(|v| v.to_string()))
            .collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

/// One line of `summary.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub label: String,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub selected_epoch: usize,
    pub seed: u64,
}

impl SummaryRow {
    pub fn from_cv(label: impl Into<String>, cv: &CvResult, seed: u64) -> SummaryRow {
        SummaryRow {
            label: label.into(),
            mean_accuracy: cv.mean_accuracy,
            std_accuracy: cv.std_accuracy,
            selected_epoch: cv.selected_epoch,
            seed,
        }
    }
}

/// `summary.csv`: full-precision values, schema-stable header.
pub fn write_summary_csv(w: &mut impl std::io::Write, rows: &[SummaryRow]) -> std::io::Result<()> {
    writeln!(w, "variant,mean_accuracy,std_accuracy,selected_epoch,seed")?;
    for row in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            row.label, row.mean_accuracy, row.std_accuracy, row.selected_epoch, row.seed
        )?;
    }
    Ok(())
}
