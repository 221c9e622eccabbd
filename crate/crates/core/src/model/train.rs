use std::thread;

use super::adam::{adam_update, AdamConfig, AdamState};
use super::config::TrainConfig;
use super::data::TrainingPair;
use super::network::{LossBreakdown, Model};
use crate::error::{Error, Result};
use crate::numerics::{ParamStore, Rng};

const TRAIN_STREAM: u64 = 1;
/// Batches per length-sorting window.
const BUCKET_WINDOW: usize = 16;

/// Token-weighted mean losses over one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLoss {
    /// 1-based.
    pub epoch: usize,
    pub loss: LossBreakdown,
    pub tokens: usize,
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub model: Model,
    pub curve: Vec<EpochLoss>,
}

#[derive(Debug)]
pub struct DistributedOutcome {
    pub model: Model,
    pub curve: Vec<EpochLoss>,
    /// Each worker's parameters just before the final averaging.
    pub worker_params: Vec<ParamStore>,
    pub syncs: usize,
}

/// Shuffles, sorts windows by target length, and cuts batches.
fn plan_epoch(shard: &[TrainingPair], batch_size: usize, rng: &mut Rng) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..shard.len()).collect();
    rng.shuffle(&mut idx);
    let mut batches = Vec::new();
    for window in idx.chunks(batch_size * BUCKET_WINDOW) {
        let mut w = window.to_vec();
        w.sort_by_key(|&i| shard[i].target_tokens());
        batches.extend(w.chunks(batch_size).map(<[usize]>::to_vec));
    }
    rng.shuffle(&mut batches);
    batches
}

struct Worker<'c> {
    shard: &'c [TrainingPair],
    model: Model,
    adam: AdamState,
    rng: Rng,
    batch_size: usize,
    epochs: usize,
    plan: Vec<Vec<usize>>,
    cursor: usize,
    epoch: usize,
    stem_sum: f64,
    suffix_sum: f64,
    tokens: usize,
}

impl<'c> Worker<'c> {
    fn new(shard: &'c [TrainingPair], model: Model, config: &TrainConfig, seed: u64) -> Self {
        let adam = AdamState::new(
            model.params(),
            AdamConfig {
                learning_rate: config.learning_rate,
                beta1: config.beta1,
                beta2: config.beta2,
                epsilon: config.epsilon,
            },
        );
        Worker {
            shard,
            model,
            adam,
            rng: Rng::with_stream(seed, TRAIN_STREAM),
            batch_size: config.batch_size,
            epochs: config.epochs,
            plan: Vec::new(),
            cursor: 0,
            epoch: 0,
            stem_sum: 0.0,
            suffix_sum: 0.0,
            tokens: 0,
        }
    }

    fn finished(&self) -> bool {
        self.epoch >= self.epochs
    }

    /// One batch update. Returns the epoch summary when this batch closes an epoch.
    fn step(&mut self) -> Result<Option<EpochLoss>> {
        if self.cursor == 0 {
            self.plan = plan_epoch(self.shard, self.batch_size, &mut self.rng);
        }
        let batch: Vec<&TrainingPair> = self.plan[self.cursor].iter().map(|&i| &self.shard[i]).collect();
        let lambda = self.model.config().lambda;
        let (loss, grads, tokens) = self.model.loss_and_gradients(&batch, lambda, Some(&mut self.rng))?;
        if !loss.total.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "non-finite loss in epoch {}",
                self.epoch + 1
            )));
        }
        let params = self.model.params_mut();
        params.zero_grads();
        grads.accumulate_into(params);
        adam_update(params, &mut self.adam)?;

        self.stem_sum += loss.stem * tokens as f64;
        self.suffix_sum += loss.suffix * tokens as f64;
        self.tokens += tokens;
        self.cursor += 1;
        if self.cursor < self.plan.len() {
            return Ok(None);
        }
        self.epoch += 1;
        self.cursor = 0;
        let n = self.tokens as f64;
        let (stem, suffix) = (self.stem_sum / n, self.suffix_sum / n);
        let summary = EpochLoss {
            epoch: self.epoch,
            loss: LossBreakdown {
                total: (1.0 - lambda) * stem + lambda * suffix,
                stem,
                suffix,
            },
            tokens: self.tokens,
        };
        self.stem_sum = 0.0;
        self.suffix_sum = 0.0;
        self.tokens = 0;
        log::debug!(
            "epoch {} L={:.6} L_stem={:.6} L_suffix={:.6}",
            summary.epoch,
            summary.loss.total,
            stem,
            suffix
        );
        Ok(Some(summary))
    }

    fn run(&mut self, max_steps: usize) -> Result<Vec<EpochLoss>> {
        let mut done = Vec::new();
        for _ in 0..max_steps {
            if self.finished() {
                break;
            }
            if let Some(e) = self.step()? {
                done.push(e);
            }
        }
        Ok(done)
    }
}

/// Mini-batch Adam training starting from `model`.
///
/// `on_epoch` sees every epoch summary together with the model at that
/// point, e.g. to write a checkpoint.
pub fn train<F>(model: Model, corpus: &[TrainingPair], config: &TrainConfig, mut on_epoch: F) -> Result<TrainOutcome>
where
    F: FnMut(&EpochLoss, &Model) -> Result<()>,
{
    config.validate()?;
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut worker = Worker::new(corpus, model, config, config.seed);
    let mut curve = Vec::with_capacity(config.epochs);
    while !worker.finished() {
        if let Some(e) = worker.step()? {
            on_epoch(&e, &worker.model)?;
            curve.push(e);
        }
    }
    Ok(TrainOutcome {
        model: worker.model,
        curve,
    })
}

/// Splits `corpus` into `config.workers` contiguous shards and trains them
/// with periodic parameter averaging. Worker 0 uses the run seed.
pub fn distributed_train(model: Model, corpus: &[TrainingPair], config: &TrainConfig) -> Result<DistributedOutcome> {
    let w = config.workers;
    if w == 0 || w > corpus.len() {
        return Err(Error::InvalidArgument(format!(
            "{w} workers for a corpus of {} pairs",
            corpus.len()
        )));
    }
    let n = corpus.len();
    let shards: Vec<&[TrainingPair]> = (0..w).map(|i| &corpus[i * n / w..(i + 1) * n / w]).collect();
    let seeds: Vec<u64> = (0..w).map(|i| config.worker_seed(i)).collect();
    distributed_train_shards(model, &shards, &seeds, config)
}

/// Parameter-averaging training over explicit shards and per-worker seeds.
///
/// All workers start from `model`. After every `config.sync_every` batches
/// the parameters of all workers are replaced by their uniform average.
/// Optimizer state stays local to each worker.
pub fn distributed_train_shards(
    model: Model,
    shards: &[&[TrainingPair]],
    seeds: &[u64],
    config: &TrainConfig,
) -> Result<DistributedOutcome> {
    config.validate()?;
    if shards.is_empty() || shards.len() != seeds.len() {
        return Err(Error::InvalidArgument(format!(
            "{} shards but {} seeds",
            shards.len(),
            seeds.len()
        )));
    }
    if shards.iter().any(|s| s.is_empty()) {
        return Err(Error::EmptyCorpus);
    }
    let mut workers: Vec<Worker<'_>> = shards
        .iter()
        .zip(seeds)
        .map(|(s, &seed)| Worker::new(s, model.clone(), config, seed))
        .collect();
    let mut per_worker: Vec<Vec<EpochLoss>> = vec![Vec::new(); workers.len()];
    let mut syncs = 0;
    let threads = config.threads.clamp(1, workers.len());
    loop {
        let rounds = run_round(&mut workers, config.sync_every, threads)?;
        for (acc, r) in per_worker.iter_mut().zip(rounds) {
            acc.extend(r);
        }
        let all_done = workers.iter().all(Worker::finished);
        let snapshot: Vec<&ParamStore> = workers.iter().map(|w| w.model.params()).collect();
        let avg = ParamStore::average(&snapshot)?;
        let worker_params = if all_done {
            workers.iter().map(|w| w.model.params().clone()).collect()
        } else {
            Vec::new()
        };
        for w in &mut workers {
            copy_values(w.model.params_mut(), &avg);
        }
        syncs += 1;
        log::debug!("sync {syncs}");
        if all_done {
            let model = workers.swap_remove(0).model;
            return Ok(DistributedOutcome {
                model,
                curve: merge_curves(&per_worker),
                worker_params,
                syncs,
            });
        }
    }
}

fn run_round(workers: &mut [Worker<'_>], steps: usize, threads: usize) -> Result<Vec<Vec<EpochLoss>>> {
    if threads <= 1 {
        return workers.iter_mut().map(|w| w.run(steps)).collect();
    }
    let chunk = workers.len().div_ceil(threads);
    let results: Vec<Result<Vec<Vec<EpochLoss>>>> = thread::scope(|s| {
        let handles: Vec<_> = workers
            .chunks_mut(chunk)
            .map(|group| s.spawn(move || group.iter_mut().map(|w| w.run(steps)).collect()))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("training worker panicked"))
            .collect()
    });
    let mut out = Vec::with_capacity(workers.len());
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

fn copy_values(dst: &mut ParamStore, src: &ParamStore) {
    for ((_, d), (_, s)) in dst.iter_mut().zip(src.iter()) {
        d.data_mut().copy_from_slice(s.data());
    }
}

/// Token-weighted combination of each worker's epoch summaries.
fn merge_curves(per_worker: &[Vec<EpochLoss>]) -> Vec<EpochLoss> {
    if per_worker.len() == 1 {
        return per_worker[0].clone();
    }
    let epochs = per_worker.iter().map(Vec::len).min().unwrap_or(0);
    (0..epochs)
        .map(|e| {
            let tokens: usize = per_worker.iter().map(|c| c[e].tokens).sum();
            let n = tokens as f64;
            let mut stem = 0.0;
            let mut suffix = 0.0;
            let mut total = 0.0;
            for c in per_worker {
                let w = c[e].tokens as f64 / n;
                stem += w * c[e].loss.stem;
                suffix += w * c[e].loss.suffix;
                total += w * c[e].loss.total;
            }
            EpochLoss {
                epoch: e + 1,
                loss: LossBreakdown { total, stem, suffix },
                tokens,
            }
        })
        .collect()
}
