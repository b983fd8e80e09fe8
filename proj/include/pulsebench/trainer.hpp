/* Copyright 2026 The pulsebench authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "pulsebench/ingest.hpp"
#include "pulsebench/metrics.hpp"
#include "pulsebench/model.hpp"
#include "pulsebench/preprocess.hpp"

// Training loop and evaluation driver. Training runs Adam-style moment
// updates with decoupled weight decay over sliding-window clips, holds out a
// record-wise, identity-stratified validation split, and keeps the weights
// from the epoch with the best validation MAE. Evaluation segments each
// record, estimates a spectral HR per segment, and averages segments into a
// video-level figure before computing agreement statistics.

namespace pulsebench::trainer {

struct TrainConfig {
    int batch_size = 16;
    double lr = 1e-5;  // 0 freezes the weights, handy for pipeline tests
    double weight_decay = 5e-5;
    int epochs = 10;
    std::uint64_t seed = 0;
    int clip_stride = 64;       // frames between consecutive training windows
    double val_fraction = 0.2;  // per-identity share of records held out
    int eval_every = 1;         // validation cadence in epochs
    int workers = 1;            // threads for batch materialization
    double target_mae = -1;     // stop once validation reaches both targets;
    double target_acc = -1;     // negative disables that target
    std::string device = "cpu";
};

struct EpochStats {
    int epoch = 0;
    double loss = 0;
    double bvp_term = 0;
    double hr_term = 0;
    double id_term = 0;
    double sigma1 = 0;
    double sigma2 = 0;
    double sigma3 = 0;
    // Validation metrics; NaN until the first evaluation, then carried
    // forward between evaluation epochs.
    double mae = std::numeric_limits<double>::quiet_NaN();
    double id_acc = std::numeric_limits<double>::quiet_NaN();
};

using TrainHistory = std::vector<EpochStats>;

struct EvalResult {
    metrics::MetricsReport hr;
    metrics::BlandAltmanStats agreement;
    double id_accuracy = 0;
    int num_segments = 0;
};

/// Per-segment output of any pulse predictor: a BVP trace at the segment's
/// frame rate plus identity scores.
struct SegmentPrediction {
    std::vector<double> bvp;
    std::vector<double> logits;
};

using Predictor = std::function<SegmentPrediction(const preprocess::FrameClip&)>;

struct TrainResult {
    model::ModelParams<float> params;  // best-validation weights; final
                                       // weights when nothing was evaluated
    model::ModelConfig config;
    TrainHistory history;
    double best_val_mae = std::numeric_limits<double>::quiet_NaN();
    int best_epoch = -1;
    long steps = 0;
    std::vector<int> train_records;  // indices into the input record list
    std::vector<int> val_records;
};

/// Loads every record in the index, stamping the descriptor's remapped
/// contiguous identity onto each record.
std::vector<ingest::Record> load_dataset_records(const ingest::DatasetIndex& index);

/// Trains on in-memory records. Throws trainer.EmptyDataset,
/// trainer.BadConfig, trainer.BadDevice, trainer.ShapeMismatch,
/// trainer.BadLabel, and trainer.NonfiniteLoss (aborting with a diagnostic
/// snapshot of the offending step in the message).
TrainResult train_on_records(const model::ModelConfig& model_cfg, const TrainConfig& train_cfg,
                             const std::vector<ingest::Record>& records);

TrainResult train(const model::ModelConfig& model_cfg, const TrainConfig& train_cfg,
                  const ingest::DatasetIndex& index);

/// error_stats that tolerates tiny or degenerate inputs: below two records,
/// or with a constant series, the correlation is undefined and reported as
/// NaN while the error statistics are still computed directly.
metrics::MetricsReport stats_or_fallback(const std::vector<double>& preds,
                                         const std::vector<double>& gts);

/// bland_altman that collapses the limits of agreement onto the mean
/// difference for a single pair instead of failing.
metrics::BlandAltmanStats agreement_or_fallback(const std::vector<double>& preds,
                                                const std::vector<double>& gts);

/// Evaluation protocol over an arbitrary predictor: per record,
/// segment_for_eval, one prediction per segment, spectral HR per predicted
/// trace (falling back to the band-center rate when a trace has no spectral
/// peak), segment HRs averaged into the video-level estimate, identity read
/// off the mean of the segment logits. With a single record, or when one HR
/// series is constant, the correlation is undefined and reported as NaN and
/// degenerate limits of agreement collapse onto the mean difference.
EvalResult evaluate_with(const Predictor& predict, const std::vector<ingest::Record>& records,
                         const spectral::HrBand& band, double segment_seconds = 8.0);

/// Runs the trained network as the predictor. Record resolution or segment
/// length that disagrees with the config throws trainer.ShapeMismatch.
EvalResult evaluate_records(const model::ModelParams<float>& params,
                            const model::ModelConfig& cfg,
                            const std::vector<ingest::Record>& records);

EvalResult evaluate(const std::filesystem::path& checkpoint_path,
                    const std::filesystem::path& dataset_root);

/// CSV round trip for the per-epoch log. Header:
/// epoch,loss,bvp_term,hr_term,id_term,sigma1,sigma2,sigma3,mae,id_acc
std::string history_to_csv(const TrainHistory& history);
TrainHistory history_from_csv(const std::string& text);

}  // namespace pulsebench::trainer
