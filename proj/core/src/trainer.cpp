#include "induction_lens/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <numbers>

#include "engine.hpp"
#include "induction_lens/errors.hpp"
#include "induction_lens/version.hpp"
#include "induction_lens/weights_io.hpp"

namespace ilens {

namespace fs = std::filesystem;

void TrainConfig::validate() const {
    if (total_steps < 1) throw ConfigError("total_steps must be at least 1");
    if (checkpoint_interval < 1 || total_steps % checkpoint_interval != 0) {
        throw ConfigError("checkpoint interval " + std::to_string(checkpoint_interval) +
                          " must divide total steps " + std::to_string(total_steps));
    }
    if (warmup_steps > total_steps) throw ConfigError("warmup longer than the run");
    if (!(peak_lr > 0) || !(floor_lr > 0) || floor_lr > peak_lr) {
        throw ConfigError("learning rates must satisfy 0 < floor <= peak");
    }
    if (!(beta1 > 0 && beta1 < 1) || !(beta2 > 0 && beta2 < 1)) throw ConfigError("betas must lie in (0, 1)");
    if (!(adam_eps > 0) || !(clip_norm > 0) || weight_decay < 0 || !(init_embed_std > 0)) {
        throw ConfigError("eps, clip norm and init std must be positive; weight decay non-negative");
    }
    if (out_dir.empty()) throw ConfigError("training needs an output directory");
}

double TrainConfig::learning_rate(std::size_t step) const {
    if (warmup_steps > 0 && step <= warmup_steps) {
        return peak_lr * static_cast<double>(step) / static_cast<double>(warmup_steps);
    }
    const std::size_t span = total_steps - warmup_steps;
    if (span == 0) return floor_lr;
    const double progress = std::min(1.0, static_cast<double>(step - warmup_steps) / static_cast<double>(span));
    return floor_lr + 0.5 * (peak_lr - floor_lr) * (1.0 + std::cos(std::numbers::pi * progress));
}

fs::path checkpoint_path(const fs::path& dir, std::size_t step) {
    return dir / ("ckpt_" + std::to_string(step) + kWeightsExtension);
}

fs::path optimizer_state_path(const fs::path& dir, std::size_t step) {
    return dir / ("ckpt_" + std::to_string(step) + ".optim");
}

namespace {

std::optional<std::size_t> parse_checkpoint_step(const fs::path& p) {
    const std::string name = p.filename().string();
    const std::string prefix = "ckpt_";
    const std::string ext = kWeightsExtension;
    if (name.size() <= prefix.size() + ext.size() || !name.starts_with(prefix) || !name.ends_with(ext)) {
        return std::nullopt;
    }
    const std::string digits = name.substr(prefix.size(), name.size() - prefix.size() - ext.size());
    std::size_t step = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), step);
    if (ec != std::errc{} || ptr != digits.data() + digits.size()) return std::nullopt;
    return step;
}

}  // namespace

std::vector<Checkpoint> list_checkpoints(const fs::path& dir) {
    std::vector<Checkpoint> out;
    if (!fs::is_directory(dir)) return out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (const auto step = parse_checkpoint_step(entry.path())) {
            Checkpoint c;
            c.step = *step;
            c.weights_path = entry.path();
            out.push_back(c);
        }
    }
    std::sort(out.begin(), out.end(), [](const Checkpoint& a, const Checkpoint& b) { return a.step < b.step; });
    return out;
}

std::optional<std::size_t> latest_checkpoint(const fs::path& dir) {
    std::optional<std::size_t> best;
    for (const auto& c : list_checkpoints(dir)) {
        if (fs::exists(optimizer_state_path(dir, c.step))) best = c.step;
    }
    return best;
}

std::vector<LossRecord> read_loss_log(const fs::path& csv) {
    std::ifstream in(csv);
    if (!in) throw InputError("cannot open loss log " + csv.string());
    std::vector<LossRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.starts_with("step")) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw CorruptionError("malformed loss log line: " + line);
        try {
            out.push_back({std::stoul(line.substr(0, comma)), std::stod(line.substr(comma + 1))});
        } catch (const std::exception&) {
            throw CorruptionError("malformed loss log line: " + line);
        }
    }
    return out;
}

namespace {

std::string format_loss_row(const LossRecord& r) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%zu,%.9g\n", r.step, r.loss);
    return buf;
}

struct AdamState {
    std::vector<std::vector<float>> m, v;
};

AdamState zero_state(const ModelWeights& w) {
    AdamState s;
    for (const auto& t : w.tensors()) {
        s.m.emplace_back(t.size(), 0.0f);
        s.v.emplace_back(t.size(), 0.0f);
    }
    return s;
}

void save_optimizer(const AdamState& s, const ModelWeights& w, std::size_t step, const fs::path& path) {
    Archive a;
    a.kind = "optimizer";
    a.meta.emplace_back("step", std::to_string(step));
    for (std::size_t i = 0; i < s.m.size(); ++i) {
        const auto& name = w.layout().name(i);
        a.tensors.emplace_back("m/" + name, TensorF32(w.tensor(i).shape(), s.m[i]));
        a.tensors.emplace_back("v/" + name, TensorF32(w.tensor(i).shape(), s.v[i]));
    }
    write_archive(a, path);
}

AdamState load_optimizer(const ModelWeights& w, std::size_t step, const fs::path& path) {
    const Archive a = read_archive(path);
    if (a.kind != "optimizer") throw CorruptionError(path.string() + " is not optimizer state");
    const std::string* s = a.find_meta("step");
    if (s == nullptr || *s != std::to_string(step)) throw CorruptionError(path.string() + ": step mismatch");
    AdamState st;
    for (std::size_t i = 0; i < w.tensors().size(); ++i) {
        const auto& name = w.layout().name(i);
        const TensorF32* m = a.find_tensor("m/" + name);
        const TensorF32* v = a.find_tensor("v/" + name);
        if (m == nullptr || v == nullptr || m->shape() != w.tensor(i).shape() || v->shape() != w.tensor(i).shape()) {
            throw CorruptionError(path.string() + ": missing or mis-shaped moments for " + name);
        }
        st.m.emplace_back(m->data().begin(), m->data().end());
        st.v.emplace_back(v->data().begin(), v->data().end());
    }
    return st;
}

bool decays(const ParamLayout& layout, std::size_t i) {
    return i != layout.embed() && i != layout.pos() && i != layout.unembed() && layout.shape(i).size() == 2;
}

void save_checkpoint(const ModelWeights& w, const AdamState& s, const TrainConfig& cfg, std::size_t step,
                     double running_loss) {
    char loss[64];
    std::snprintf(loss, sizeof loss, "%.9g", running_loss);
    save_weights(w, checkpoint_path(cfg.out_dir, step),
                 {{"step", std::to_string(step)},
                  {"seed", std::to_string(cfg.seed)},
                  {"running_loss", loss},
                  {"toolkit_version", std::string(version())}});
    save_optimizer(s, w, step, optimizer_state_path(cfg.out_dir, step));
}

}  // namespace

TrainResult train(const ModelConfig& model, const TrainConfig& cfg, const BatchFn& batches, bool resume) {
    model.validate();
    cfg.validate();
    fs::create_directories(cfg.out_dir);

    InitOptions init;
    init.embed_std = cfg.init_embed_std;
    TrainResult result{{}, {}, init_random(model, cfg.seed, init)};
    ModelWeights& w = result.final_weights;
    AdamState state = zero_state(w);
    std::size_t start = 0;

    const fs::path log_path = cfg.out_dir / "loss.csv";
    const auto resume_step = resume ? latest_checkpoint(cfg.out_dir) : std::nullopt;
    if (resume_step) {
        start = *resume_step;
        w = load_weights(checkpoint_path(cfg.out_dir, start));
        if (w.config() != model) throw ConfigError("checkpoint in " + cfg.out_dir.string() + " has a different model config");
        state = load_optimizer(w, start, optimizer_state_path(cfg.out_dir, start));
        if (fs::exists(log_path)) {
            for (const auto& r : read_loss_log(log_path)) {
                if (r.step <= start) result.loss_log.push_back(r);
            }
        }
        for (auto c : list_checkpoints(cfg.out_dir)) {
            if (c.step <= start) result.checkpoints.push_back(c);
        }
    } else {
        save_checkpoint(w, state, cfg, 0, 0.0);
        result.checkpoints.push_back({0, checkpoint_path(cfg.out_dir, 0), 0.0});
    }

    std::ofstream log(log_path, std::ios::trunc);
    if (!log) throw InputError("cannot write " + log_path.string());
    log << "# induction_lens loss log v1 seed=" << cfg.seed << " version=" << version() << "\n";
    log << "step,loss\n";
    for (const auto& r : result.loss_log) log << format_loss_row(r);
    log.flush();

    const ParamLayout& layout = w.layout();
    detail::ParamPtrs<float> params;
    for (const auto& t : w.tensors()) params.at.push_back(t.data().data());
    std::vector<std::vector<float>> grad_store;
    detail::GradPtrs<float> grads;
    for (const auto& t : w.tensors()) grad_store.emplace_back(t.size(), 0.0f);
    for (auto& g : grad_store) grads.at.push_back(g.data());

    double running = 0.0;
    std::size_t running_n = 0;
    std::future<std::vector<std::vector<TokenId>>> next;
    auto fetch = [&](std::size_t step) {
        if (cfg.prefetch) return std::async(std::launch::async, batches, step);
        std::promise<std::vector<std::vector<TokenId>>> p;
        p.set_value(batches(step));
        return p.get_future();
    };
    if (start < cfg.total_steps) next = fetch(start + 1);

    detail::ForwardCache<float> cache;
    for (std::size_t step = start + 1; step <= cfg.total_steps; ++step) {
        const auto batch = next.get();
        if (step < cfg.total_steps) next = fetch(step + 1);

        std::size_t count = 0;
        for (const auto& seq : batch) {
            if (seq.size() < 2 || seq.size() > model.max_seq_len) {
                throw InputError("training sequence length " + std::to_string(seq.size()) + " outside [2, " +
                                 std::to_string(model.max_seq_len) + "]");
            }
            count += seq.size() - 1;
        }
        for (auto& g : grad_store) std::fill(g.begin(), g.end(), 0.0f);
        const float scale = 1.0f / static_cast<float>(count);
        double total = 0.0;
        for (const auto& seq : batch) {
            for (TokenId t : seq) {
                if (t < 0 || static_cast<std::size_t>(t) >= model.vocab_size) {
                    throw InputError("training token id " + std::to_string(t) + " outside vocabulary");
                }
            }
            detail::forward_pass<float>(layout, params, seq, false, cache);
            total += detail::backward_pass<float>(layout, params, seq, cache, scale, grads);
        }
        const double loss = total / static_cast<double>(count);

        double sq = 0.0;
        for (const auto& g : grad_store) {
            for (float v : g) sq += static_cast<double>(v) * v;
        }
        const double gnorm = std::sqrt(sq);
        if (!std::isfinite(loss) || !std::isfinite(gnorm)) {
            const std::size_t last = result.checkpoints.empty() ? 0 : result.checkpoints.back().step;
            throw NumericError("training diverged at step " + std::to_string(step) +
                               "; last good checkpoint " + checkpoint_path(cfg.out_dir, last).string());
        }
        const float clip = static_cast<float>(gnorm > cfg.clip_norm ? cfg.clip_norm / gnorm : 1.0);
        const double lr = cfg.learning_rate(step);
        const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
        const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
        const float b1 = static_cast<float>(cfg.beta1), b2 = static_cast<float>(cfg.beta2);
        const float step_size = static_cast<float>(lr / bc1);
        const float inv_sqrt_bc2 = static_cast<float>(1.0 / std::sqrt(bc2));
        const float eps = static_cast<float>(cfg.adam_eps);
        for (std::size_t i = 0; i < grad_store.size(); ++i) {
            auto data = w.tensor(i).data();
            const float wd = decays(layout, i) ? static_cast<float>(lr * cfg.weight_decay) : 0.0f;
            float* m = state.m[i].data();
            float* v = state.v[i].data();
            const float* g = grad_store[i].data();
            for (std::size_t k = 0; k < data.size(); ++k) {
                const float gk = g[k] * clip;
                m[k] = b1 * m[k] + (1.0f - b1) * gk;
                v[k] = b2 * v[k] + (1.0f - b2) * gk * gk;
                data[k] -= step_size * m[k] / (std::sqrt(v[k]) * inv_sqrt_bc2 + eps) + wd * data[k];
            }
        }

        const LossRecord rec{step, loss};
        result.loss_log.push_back(rec);
        log << format_loss_row(rec);
        running += loss;
        ++running_n;
        if (step % cfg.checkpoint_interval == 0) {
            const double mean = running / static_cast<double>(running_n);
            log.flush();
            save_checkpoint(w, state, cfg, step, mean);
            result.checkpoints.push_back({step, checkpoint_path(cfg.out_dir, step), mean});
            running = 0.0;
            running_n = 0;
        }
    }
    return result;
}

}  // namespace ilens
