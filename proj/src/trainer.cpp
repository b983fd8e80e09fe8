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

#include "pulsebench/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

#include "pulsebench/errors.hpp"
#include "pulsebench/loss.hpp"
#include "pulsebench/rng.hpp"
#include "pulsebench/spectral.hpp"

namespace pulsebench::trainer {

namespace {

constexpr const char* kHistoryHeader =
    "epoch,loss,bvp_term,hr_term,id_term,sigma1,sigma2,sigma3,mae,id_acc";

void validate_train_config(const TrainConfig& tc) {
    require(tc.batch_size >= 1, "trainer.BadConfig", "batch_size must be >= 1");
    require(tc.lr >= 0, "trainer.BadConfig", "learning rate must be >= 0");
    require(tc.weight_decay >= 0, "trainer.BadConfig", "weight_decay must be >= 0");
    require(tc.epochs >= 1, "trainer.BadConfig", "epochs must be >= 1");
    require(tc.clip_stride >= 1, "trainer.BadConfig", "clip_stride must be >= 1");
    require(tc.val_fraction >= 0 && tc.val_fraction < 1, "trainer.BadConfig",
            "val_fraction must lie in [0, 1)");
    require(tc.eval_every >= 1, "trainer.BadConfig", "eval_every must be >= 1");
    require(tc.workers >= 1, "trainer.BadConfig", "workers must be >= 1");
    require(tc.device == "cpu", "trainer.BadDevice", "unsupported device: " + tc.device);
}

std::string dims_of(const Tensor<float>& t) {
    std::string s;
    for (int i = 0; i < t.rank(); ++i) {
        if (i) s += "x";
        s += std::to_string(t.dim(i));
    }
    return s;
}

void check_records(const std::vector<ingest::Record>& records, const model::ModelConfig& cfg,
                   bool for_training) {
    for (std::size_t i = 0; i < records.size(); ++i) {
        const ingest::Record& r = records[i];
        require(!r.frames.empty(), "trainer.ShapeMismatch",
                "record " + std::to_string(i) + " has no frames");
        require(r.frames[0].dim(0) == cfg.c && r.frames[0].dim(1) == cfg.h &&
                    r.frames[0].dim(2) == cfg.w,
                "trainer.ShapeMismatch",
                "record " + std::to_string(i) + " frames are " +
                    std::to_string(r.frames[0].dim(0)) + "x" +
                    std::to_string(r.frames[0].dim(1)) + "x" +
                    std::to_string(r.frames[0].dim(2)) + ", model expects " +
                    std::to_string(cfg.c) + "x" + std::to_string(cfg.h) + "x" +
                    std::to_string(cfg.w));
        require(r.identity >= 0 && r.identity < cfg.num_identities, "trainer.BadLabel",
                "record " + std::to_string(i) + " identity " + std::to_string(r.identity) +
                    " outside [0, " + std::to_string(cfg.num_identities) + ")");
        if (for_training) {
            require(r.frames.size() >= static_cast<std::size_t>(cfg.t), "trainer.ShapeMismatch",
                    "record " + std::to_string(i) + " has " + std::to_string(r.frames.size()) +
                        " frames, shorter than one " + std::to_string(cfg.t) + "-frame clip");
        }
    }
}

/// Record-wise split inside each identity so every subject stays trainable.
void split_records(const std::vector<ingest::Record>& records, double val_fraction, Rng& rng,
                   std::vector<int>& train_idx, std::vector<int>& val_idx) {
    std::map<int, std::vector<int>> groups;
    for (std::size_t i = 0; i < records.size(); ++i) {
        groups[records[i].identity].push_back(static_cast<int>(i));
    }
    for (auto& [identity, idx] : groups) {
        (void)identity;
        const auto n = static_cast<long long>(idx.size());
        long long n_val =
            val_fraction > 0 ? std::llround(val_fraction * static_cast<double>(n)) : 0;
        n_val = std::clamp<long long>(n_val, 0, n - 1);
        if (n_val == 0) {
            train_idx.insert(train_idx.end(), idx.begin(), idx.end());
            continue;
        }
        rng.shuffle(idx);
        val_idx.insert(val_idx.end(), idx.begin(), idx.begin() + n_val);
        train_idx.insert(train_idx.end(), idx.begin() + n_val, idx.end());
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(val_idx.begin(), val_idx.end());
}

struct ClipRef {
    int record = 0;
    std::size_t first = 0;
};

/// Mirrors the sliding-window loader: standardized frames, the aligned bvp
/// slice, and the slice's spectral HR as the label.
preprocess::FrameClip clip_at(const ingest::Record& record,
                              const std::vector<double>& frame_bvp, std::size_t first,
                              std::size_t count) {
    preprocess::FrameClip clip;
    clip.data = preprocess::standardize_clip(preprocess::stack_frames(record.frames, first, count));
    clip.fps = record.fps;
    clip.identity = record.identity;
    clip.bvp.assign(frame_bvp.begin() + static_cast<std::ptrdiff_t>(first),
                    frame_bvp.begin() + static_cast<std::ptrdiff_t>(first + count));
    spectral::BvpTrace trace;
    trace.values = clip.bvp;
    trace.fs = record.fps;
    clip.hr_bpm = spectral::estimate_hr(trace);
    return clip;
}

std::vector<preprocess::FrameClip> materialize_batch(
    const std::vector<ingest::Record>& records,
    const std::vector<std::vector<double>>& frame_bvps, const std::vector<ClipRef>& refs,
    int t_frames, int workers) {
    std::vector<preprocess::FrameClip> out(refs.size());
    auto run = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            const ClipRef& ref = refs[i];
            out[i] = clip_at(records[static_cast<std::size_t>(ref.record)],
                             frame_bvps[static_cast<std::size_t>(ref.record)], ref.first,
                             static_cast<std::size_t>(t_frames));
        }
    };

    const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(workers), refs.size());
    if (n_threads <= 1) {
        run(0, refs.size());
        return out;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(n_threads);
    const std::size_t chunk = (refs.size() + n_threads - 1) / n_threads;
    for (std::size_t w = 0; w < n_threads; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(lo + chunk, refs.size());
        pool.emplace_back([&, lo, hi, w] {
            try {
                run(lo, hi);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (const auto& err : errors) {
        if (err) std::rethrow_exception(err);
    }
    return out;
}

struct AdamState {
    model::ModelParams<float> m, v;
    long t = 0;
};

void adam_step(model::ModelParams<float>& params, const model::ModelParams<float>& grads,
               AdamState& st, double lr, double wd) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    ++st.t;
    const double bias1 = 1.0 - std::pow(b1, static_cast<double>(st.t));
    const double bias2 = 1.0 - std::pow(b2, static_cast<double>(st.t));

    auto pr = model::param_refs(params);
    auto gr = model::param_refs(grads);
    auto mr = model::param_refs(st.m);
    auto vr = model::param_refs(st.v);
    for (std::size_t a = 0; a < pr.size(); ++a) {
        for (std::size_t i = 0; i < pr[a].numel; ++i) {
            const double g = gr[a].data[i];
            const double m = b1 * mr[a].data[i] + (1.0 - b1) * g;
            const double v = b2 * vr[a].data[i] + (1.0 - b2) * g * g;
            mr[a].data[i] = static_cast<float>(m);
            vr[a].data[i] = static_cast<float>(v);
            const double m_hat = m / bias1;
            const double v_hat = v / bias2;
            const double theta = pr[a].data[i];
            pr[a].data[i] =
                static_cast<float>(theta - lr * (m_hat / (std::sqrt(v_hat) + eps) + wd * theta));
        }
    }
}

std::size_t argmax_index(const std::vector<double>& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) best = i;
    }
    return best;
}

}  // namespace

metrics::MetricsReport stats_or_fallback(const std::vector<double>& preds,
                                         const std::vector<double>& gts) {
    try {
        return metrics::error_stats(preds, gts);
    } catch (const Error& e) {
        const std::string code = e.code();
        if (code != "metrics.LengthMismatch" && code != "metrics.ZeroVariance") throw;
    }
    metrics::MetricsReport r;
    const int n = static_cast<int>(preds.size());
    r.n = n;
    double abs_sum = 0, sq_sum = 0, diff_sum = 0;
    for (int i = 0; i < n; ++i) {
        const double d = preds[i] - gts[i];
        r.per_video.emplace_back(preds[i], gts[i]);
        abs_sum += std::abs(d);
        sq_sum += d * d;
        diff_sum += d;
    }
    r.mae = abs_sum / n;
    r.rmse = std::sqrt(sq_sum / n);
    if (n >= 2) {
        const double mean = diff_sum / n;
        double var = 0;
        for (int i = 0; i < n; ++i) {
            const double d = preds[i] - gts[i] - mean;
            var += d * d;
        }
        r.sd = std::sqrt(var / (n - 1));
    } else {
        r.sd = 0;
    }
    r.rho = std::numeric_limits<double>::quiet_NaN();
    return r;
}

metrics::BlandAltmanStats agreement_or_fallback(const std::vector<double>& preds,
                                                const std::vector<double>& gts) {
    try {
        return metrics::bland_altman(preds, gts);
    } catch (const Error& e) {
        if (std::string(e.code()) != "metrics.LengthMismatch") throw;
    }
    metrics::BlandAltmanStats s;
    const double d = preds[0] - gts[0];
    s.points.emplace_back((preds[0] + gts[0]) / 2.0, d);
    s.mean_diff = d;
    s.loa_lo = d;
    s.loa_hi = d;
    return s;
}

namespace {

EvalResult eval_core(const Predictor& predict,
                     const std::vector<const ingest::Record*>& records,
                     const spectral::HrBand& band, double segment_seconds) {
    require(!records.empty(), "trainer.EmptyDataset", "no records to evaluate");
    EvalResult res;
    std::vector<double> preds, gts;
    int correct = 0;

    for (const ingest::Record* rec : records) {
        const auto segments = preprocess::segment_for_eval(*rec, segment_seconds);
        std::vector<double> seg_pred, seg_gt;
        std::vector<double> logit_sum;
        for (const preprocess::FrameClip& seg : segments) {
            SegmentPrediction p = predict(seg);
            require(p.bvp.size() == seg.bvp.size(), "trainer.ShapeMismatch",
                    "predicted trace has " + std::to_string(p.bvp.size()) +
                        " samples for a " + std::to_string(seg.bvp.size()) + "-frame segment");
            require(!p.logits.empty(), "trainer.ShapeMismatch",
                    "predictor returned no identity scores");
            if (logit_sum.empty()) logit_sum.assign(p.logits.size(), 0.0);
            require(logit_sum.size() == p.logits.size(), "trainer.ShapeMismatch",
                    "identity score arity changed between segments");
            for (std::size_t i = 0; i < p.logits.size(); ++i) logit_sum[i] += p.logits[i];

            double hr;
            try {
                spectral::BvpTrace trace;
                trace.values = p.bvp;
                trace.fs = seg.fps;
                hr = spectral::estimate_hr(trace, band);
            } catch (const Error& e) {
                if (std::string(e.code()) != "spectral.NoSpectralPeak") throw;
                hr = 60.0 * 0.5 * (band.lo + band.hi);
            }
            seg_pred.push_back(hr);
            seg_gt.push_back(seg.hr_bpm);
            ++res.num_segments;
        }
        preds.push_back(metrics::video_level_hr(seg_pred));
        gts.push_back(metrics::video_level_hr(seg_gt));
        if (argmax_index(logit_sum) == static_cast<std::size_t>(rec->identity)) ++correct;
    }

    res.hr = stats_or_fallback(preds, gts);
    res.agreement = agreement_or_fallback(preds, gts);
    res.id_accuracy = static_cast<double>(correct) / static_cast<double>(records.size());
    return res;
}

Predictor network_predictor(const model::ModelParams<float>& params,
                            const model::ModelConfig& cfg) {
    return [&params, cfg](const preprocess::FrameClip& clip) {
        require(clip.data.rank() == 4 && clip.data.dim(0) == cfg.t &&
                    clip.data.dim(1) == cfg.c && clip.data.dim(2) == cfg.h &&
                    clip.data.dim(3) == cfg.w,
                "trainer.ShapeMismatch", "segment clip is " + dims_of(clip.data) +
                                             ", model expects " + std::to_string(cfg.t) + "x" +
                                             std::to_string(cfg.c) + "x" + std::to_string(cfg.h) +
                                             "x" + std::to_string(cfg.w));
        const model::ForwardResult<float> out = model::forward(clip.data, params, cfg);
        SegmentPrediction p;
        p.bvp.assign(out.bvp.data(), out.bvp.data() + out.bvp.numel());
        p.logits.assign(out.id_logits.data(), out.id_logits.data() + out.id_logits.numel());
        return p;
    };
}

std::vector<const ingest::Record*> pointers_to(const std::vector<ingest::Record>& records) {
    std::vector<const ingest::Record*> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(&r);
    return out;
}

}  // namespace

std::vector<ingest::Record> load_dataset_records(const ingest::DatasetIndex& index) {
    std::vector<ingest::Record> out;
    out.reserve(index.records.size());
    for (const ingest::RecordDescriptor& d : index.records) {
        ingest::Record r = ingest::load_record(d.path);
        r.identity = d.identity;
        out.push_back(std::move(r));
    }
    return out;
}

TrainResult train_on_records(const model::ModelConfig& model_cfg, const TrainConfig& train_cfg,
                             const std::vector<ingest::Record>& records) {
    model::validate(model_cfg);
    validate_train_config(train_cfg);
    require(!records.empty(), "trainer.EmptyDataset", "no records to train on");
    check_records(records, model_cfg, true);

    Rng root(train_cfg.seed);
    Rng init_rng = root.fork(0);
    model::ModelParams<float> params = model::init_params<float>(model_cfg, init_rng);

    TrainResult res;
    res.config = model_cfg;
    Rng split_rng = root.fork(1);
    split_records(records, train_cfg.val_fraction, split_rng, res.train_records,
                  res.val_records);
    require(!res.train_records.empty(), "trainer.EmptyDataset",
            "validation split left no training records");

    std::vector<std::vector<double>> frame_bvps(records.size());
    std::vector<ClipRef> catalog;
    for (int r : res.train_records) {
        const auto ri = static_cast<std::size_t>(r);
        frame_bvps[ri] = preprocess::bvp_at_frame_rate(records[ri]);
        const std::size_t n = records[ri].frames.size();
        for (std::size_t first = 0; first + static_cast<std::size_t>(model_cfg.t) <= n;
             first += static_cast<std::size_t>(train_cfg.clip_stride)) {
            catalog.push_back({r, first});
        }
    }

    std::vector<const ingest::Record*> val_ptrs;
    for (int r : res.val_records) val_ptrs.push_back(&records[static_cast<std::size_t>(r)]);

    AdamState opt{model::zero_params<float>(model_cfg), model::zero_params<float>(model_cfg), 0};
    model::ModelParams<float> best_params;
    double best_mae = std::numeric_limits<double>::infinity();
    int best_epoch = -1;
    double last_mae = std::numeric_limits<double>::quiet_NaN();
    double last_acc = std::numeric_limits<double>::quiet_NaN();

    std::vector<std::size_t> order(catalog.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (int epoch = 1; epoch <= train_cfg.epochs; ++epoch) {
        Rng order_rng = root.fork(static_cast<std::uint64_t>(1 + epoch));
        order_rng.shuffle(order);

        double sum_total = 0, sum_bvp = 0, sum_hr = 0, sum_id = 0;
        std::size_t clip_count = 0;

        for (std::size_t pos = 0; pos < order.size();
             pos += static_cast<std::size_t>(train_cfg.batch_size)) {
            const std::size_t hi =
                std::min(pos + static_cast<std::size_t>(train_cfg.batch_size), order.size());
            std::vector<ClipRef> refs;
            refs.reserve(hi - pos);
            for (std::size_t i = pos; i < hi; ++i) refs.push_back(catalog[order[i]]);
            const auto clips =
                materialize_batch(records, frame_bvps, refs, model_cfg.t, train_cfg.workers);

            model::ModelParams<float> grads = model::zero_params<float>(model_cfg);
            for (const preprocess::FrameClip& clip : clips) {
                model::ForwardCache<float> cache;
                const model::ForwardResult<float> out =
                    model::forward(clip.data, params, model_cfg, &cache);

                TensorF gt({model_cfg.t});
                for (int t = 0; t < model_cfg.t; ++t) {
                    gt[t] = static_cast<float>(clip.bvp[static_cast<std::size_t>(t)]);
                }

                loss::LossGrads<float> lg;
                const loss::LossTerms<float> terms = loss::multitask_loss<float>(
                    out.bvp, gt, clip.hr_bpm, out.id_logits, clip.identity, params.s1, params.s2,
                    params.s3, clip.fps, model_cfg.band, model_cfg.temperature, &lg);
                if (!std::isfinite(terms.total)) {
                    std::ostringstream os;
                    os << "loss diverged at epoch " << epoch << " step " << opt.t + 1
                       << ": total=" << terms.total << " bvp=" << terms.bvp_term
                       << " hr=" << terms.hr_term << " id=" << terms.id_term
                       << " s1=" << params.s1 << " s2=" << params.s2 << " s3=" << params.s3
                       << " identity=" << clip.identity << " hr_gt=" << clip.hr_bpm;
                    fail("trainer.NonfiniteLoss", os.str());
                }

                model::backward(cache, params, model_cfg, lg.d_bvp, lg.d_logits, grads);
                grads.s1 += lg.ds1;
                grads.s2 += lg.ds2;
                grads.s3 += lg.ds3;

                sum_total += terms.total;
                sum_bvp += terms.bvp_term;
                sum_hr += terms.hr_term;
                sum_id += terms.id_term;
                ++clip_count;
            }

            const auto inv = static_cast<float>(1.0 / static_cast<double>(clips.size()));
            for (const auto& ref : model::param_refs(grads)) {
                for (std::size_t i = 0; i < ref.numel; ++i) ref.data[i] *= inv;
            }
            adam_step(params, grads, opt, train_cfg.lr, train_cfg.weight_decay);
        }

        EpochStats st;
        st.epoch = epoch;
        st.loss = sum_total / static_cast<double>(clip_count);
        st.bvp_term = sum_bvp / static_cast<double>(clip_count);
        st.hr_term = sum_hr / static_cast<double>(clip_count);
        st.id_term = sum_id / static_cast<double>(clip_count);
        st.sigma1 = std::exp(0.5 * params.s1);
        st.sigma2 = std::exp(0.5 * params.s2);
        st.sigma3 = std::exp(0.5 * params.s3);

        bool stop = false;
        const bool do_eval = !val_ptrs.empty() &&
                             (epoch % train_cfg.eval_every == 0 || epoch == train_cfg.epochs);
        if (do_eval) {
            const EvalResult ev =
                eval_core(network_predictor(params, model_cfg), val_ptrs, model_cfg.band, 8.0);
            last_mae = ev.hr.mae;
            last_acc = ev.id_accuracy;
            if (best_epoch < 0 || last_mae < best_mae) {
                best_mae = last_mae;
                best_epoch = epoch;
                best_params = params;
            }
            const bool targeted = train_cfg.target_mae >= 0 || train_cfg.target_acc >= 0;
            const bool met =
                (train_cfg.target_mae < 0 || last_mae <= train_cfg.target_mae) &&
                (train_cfg.target_acc < 0 || last_acc >= train_cfg.target_acc);
            stop = targeted && met;
        }
        st.mae = last_mae;
        st.id_acc = last_acc;
        res.history.push_back(st);
        if (stop) break;
    }

    res.steps = opt.t;
    if (best_epoch >= 0) {
        res.params = std::move(best_params);
        res.best_val_mae = best_mae;
        res.best_epoch = best_epoch;
    } else {
        res.params = std::move(params);
        res.best_epoch = static_cast<int>(res.history.size());
    }
    return res;
}

TrainResult train(const model::ModelConfig& model_cfg, const TrainConfig& train_cfg,
                  const ingest::DatasetIndex& index) {
    return train_on_records(model_cfg, train_cfg, load_dataset_records(index));
}

EvalResult evaluate_with(const Predictor& predict, const std::vector<ingest::Record>& records,
                         const spectral::HrBand& band, double segment_seconds) {
    return eval_core(predict, pointers_to(records), band, segment_seconds);
}

EvalResult evaluate_records(const model::ModelParams<float>& params,
                            const model::ModelConfig& cfg,
                            const std::vector<ingest::Record>& records) {
    model::validate(cfg);
    check_records(records, cfg, false);
    return eval_core(network_predictor(params, cfg), pointers_to(records), cfg.band, 8.0);
}

EvalResult evaluate(const std::filesystem::path& checkpoint_path,
                    const std::filesystem::path& dataset_root) {
    const model::Checkpoint ck = model::load_checkpoint(checkpoint_path);
    const ingest::DatasetIndex index = ingest::index_dataset(dataset_root);
    const std::vector<ingest::Record> records = load_dataset_records(index);
    return evaluate_records(ck.params, ck.config, records);
}

std::string history_to_csv(const TrainHistory& history) {
    std::ostringstream os;
    os.precision(17);
    os << kHistoryHeader << "\n";
    for (const EpochStats& st : history) {
        os << st.epoch << ',' << st.loss << ',' << st.bvp_term << ',' << st.hr_term << ','
           << st.id_term << ',' << st.sigma1 << ',' << st.sigma2 << ',' << st.sigma3 << ','
           << st.mae << ',' << st.id_acc << "\n";
    }
    return os.str();
}

TrainHistory history_from_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    require(static_cast<bool>(std::getline(is, line)), "trainer.BadHistory", "empty history");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    require(line == kHistoryHeader, "trainer.BadHistory", "unexpected header: " + line);

    TrainHistory out;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            cells.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        require(cells.size() == 10, "trainer.BadHistory",
                "expected 10 columns, got " + std::to_string(cells.size()));
        EpochStats st;
        try {
            st.epoch = std::stoi(cells[0]);
            st.loss = std::stod(cells[1]);
            st.bvp_term = std::stod(cells[2]);
            st.hr_term = std::stod(cells[3]);
            st.id_term = std::stod(cells[4]);
            st.sigma1 = std::stod(cells[5]);
            st.sigma2 = std::stod(cells[6]);
            st.sigma3 = std::stod(cells[7]);
            st.mae = std::stod(cells[8]);
            st.id_acc = std::stod(cells[9]);
        } catch (const std::exception&) {
            fail("trainer.BadHistory", "unparsable row: " + line);
        }
        out.push_back(st);
    }
    return out;
}

}  // namespace pulsebench::trainer
