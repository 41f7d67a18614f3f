#include "induction_lens/probe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "induction_lens/errors.hpp"
#include "induction_lens/weights_io.hpp"

namespace ilens {

bool ProbeModel::all_finite() const {
    auto finite = [](double x) { return std::isfinite(x); };
    return std::all_of(u.begin(), u.end(), finite) && std::all_of(v.begin(), v.end(), finite) && finite(w) &&
           finite(b);
}

ProbeSentence probe_sentence(const AnnotatedSentence& s) {
    ProbeSentence p;
    p.tokens = s.tokens;
    p.heads.assign(s.tokens.size(), std::nullopt);
    std::vector<std::vector<std::size_t>> governors(s.tokens.size());
    for (const auto& t : s.triplets) {
        auto& g = governors[t.o];
        if (std::find(g.begin(), g.end(), t.s) == g.end()) g.push_back(t.s);
    }
    for (std::size_t c = 0; c < governors.size(); ++c) {
        if (governors[c].size() == 1) p.heads[c] = governors[c].front();
    }
    return p;
}

namespace {

// One dependent: features of every candidate, row-major (candidates × features).
struct Example {
    std::vector<double> features;
    std::size_t n_candidates = 0;
    std::size_t gold = 0;  // candidate row of the gold head
};

double cosine(std::span<const float> a, std::span<const float> b) {
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        ab += static_cast<double>(a[k]) * b[k];
        aa += static_cast<double>(a[k]) * a[k];
        bb += static_cast<double>(b[k]) * b[k];
    }
    if (aa == 0.0 || bb == 0.0) return 0.0;
    return ab / std::sqrt(aa * bb);
}

std::vector<Example> build_examples(const ModelWeights& weights, const std::vector<ProbeSentence>& sentences,
                                    const ProbeOptions& opts) {
    const ModelConfig& cfg = weights.config();
    const std::size_t heads = cfg.n_layers * cfg.n_heads;
    const std::size_t nf = 2 * heads + 2;
    std::vector<Example> out;
    for (const auto& s : sentences) {
        if (s.heads.size() != s.tokens.size()) throw InputError("probe sentence: heads and tokens disagree in length");
        const std::size_t n = s.tokens.size();
        if (n < 2) continue;
        std::vector<TokenId> seq;
        const std::size_t off = opts.prepend_bos ? 1 : 0;
        if (opts.prepend_bos) seq.push_back(opts.bos);
        seq.insert(seq.end(), s.tokens.begin(), s.tokens.end());
        ForwardOptions fo;
        fo.capture_attention = true;
        const auto rec = forward(weights, seq, fo).attention;
        for (std::size_t c = 0; c < n; ++c) {
            if (!s.heads[c]) continue;
            if (*s.heads[c] >= n || *s.heads[c] == c) throw InputError("probe sentence: invalid head position");
            Example e;
            e.n_candidates = n - 1;
            e.features.reserve(e.n_candidates * nf);
            const auto ec = weights.embed().row(static_cast<std::size_t>(s.tokens[c]));
            for (std::size_t p = 0; p < n; ++p) {
                if (p == c) continue;
                if (p == *s.heads[c]) e.gold = e.features.size() / nf;
                for (std::size_t hi = 0; hi < heads; ++hi) e.features.push_back(rec->patterns[hi](c + off, p + off));
                for (std::size_t hi = 0; hi < heads; ++hi) e.features.push_back(rec->patterns[hi](p + off, c + off));
                e.features.push_back(cosine(ec, weights.embed().row(static_cast<std::size_t>(s.tokens[p]))));
                e.features.push_back(1.0);
            }
            out.push_back(std::move(e));
        }
    }
    return out;
}

std::vector<double> pack(const ProbeModel& m) {
    std::vector<double> theta = m.u;
    theta.insert(theta.end(), m.v.begin(), m.v.end());
    theta.push_back(m.w);
    theta.push_back(m.b);
    return theta;
}

ProbeModel unpack(const std::vector<double>& theta, std::size_t layers, std::size_t heads_per_layer) {
    ProbeModel m;
    m.n_layers = layers;
    m.n_heads = heads_per_layer;
    const std::size_t h = layers * heads_per_layer;
    m.u.assign(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(h));
    m.v.assign(theta.begin() + static_cast<std::ptrdiff_t>(h), theta.begin() + static_cast<std::ptrdiff_t>(2 * h));
    m.w = theta[2 * h];
    m.b = theta[2 * h + 1];
    return m;
}

std::vector<double> scores(const Example& e, const std::vector<double>& theta) {
    const std::size_t nf = theta.size();
    std::vector<double> s(e.n_candidates, 0.0);
    for (std::size_t r = 0; r < e.n_candidates; ++r) {
        const double* f = e.features.data() + r * nf;
        for (std::size_t k = 0; k < nf; ++k) s[r] += theta[k] * f[k];
    }
    return s;
}

// Mean cross-entropy; fills grad when non-null.
double loss_and_grad(const std::vector<Example>& examples, const std::vector<double>& theta,
                     std::vector<double>* grad) {
    const std::size_t nf = theta.size();
    if (grad) grad->assign(nf, 0.0);
    double total = 0.0;
    for (const auto& e : examples) {
        std::vector<double> s = scores(e, theta);
        const double peak = *std::max_element(s.begin(), s.end());
        double z = 0.0;
        for (double& v : s) {
            v = std::exp(v - peak);
            z += v;
        }
        total += -std::log(s[e.gold] / z);
        if (!grad) continue;
        for (std::size_t r = 0; r < e.n_candidates; ++r) {
            const double coef = s[r] / z - (r == e.gold ? 1.0 : 0.0);
            const double* f = e.features.data() + r * nf;
            for (std::size_t k = 0; k < nf; ++k) (*grad)[k] += coef * f[k];
        }
    }
    const double n = static_cast<double>(examples.size());
    if (grad) {
        for (double& g : *grad) g /= n;
    }
    return total / n;
}

std::vector<ProbeSentence> convert(const std::vector<AnnotatedSentence>& sentences) {
    std::vector<ProbeSentence> out;
    out.reserve(sentences.size());
    for (const auto& s : sentences) out.push_back(probe_sentence(s));
    return out;
}

}  // namespace

ProbeTrainResult train_probe(const ModelWeights& weights, const std::vector<ProbeSentence>& sentences,
                             const ProbeOptions& opts) {
    const auto examples = build_examples(weights, sentences, opts);
    if (examples.empty()) throw InputError("train_probe: no token has a single gold head");
    const ModelConfig& cfg = weights.config();
    ProbeModel init;
    init.u.assign(cfg.n_layers * cfg.n_heads, 0.0);
    init.v.assign(cfg.n_layers * cfg.n_heads, 0.0);
    std::vector<double> theta = pack(init);
    std::vector<double> m(theta.size(), 0.0), v(theta.size(), 0.0), grad;
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    ProbeTrainResult result{init, {}};
    for (std::size_t epoch = 1; epoch <= opts.epochs; ++epoch) {
        const double loss = loss_and_grad(examples, theta, &grad);
        result.loss_per_epoch.push_back(loss);
        const double bc1 = 1.0 - std::pow(b1, static_cast<double>(epoch));
        const double bc2 = 1.0 - std::pow(b2, static_cast<double>(epoch));
        for (std::size_t k = 0; k < theta.size(); ++k) {
            m[k] = b1 * m[k] + (1 - b1) * grad[k];
            v[k] = b2 * v[k] + (1 - b2) * grad[k] * grad[k];
            theta[k] -= opts.lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + eps);
        }
    }
    result.probe = unpack(theta, cfg.n_layers, cfg.n_heads);
    if (!result.probe.all_finite()) throw NumericError("train_probe: non-finite parameters");
    return result;
}

ProbeTrainResult train_probe(const ModelWeights& weights, const std::vector<AnnotatedSentence>& sentences,
                             const ProbeOptions& opts) {
    return train_probe(weights, convert(sentences), opts);
}

double eval_probe(const ProbeModel& probe, const ModelWeights& weights, const std::vector<ProbeSentence>& sentences,
                  const ProbeOptions& opts) {
    const ModelConfig& cfg = weights.config();
    if (probe.n_layers != cfg.n_layers || probe.n_heads != cfg.n_heads) {
        throw InputError("probe was trained for a different head grid");
    }
    const auto examples = build_examples(weights, sentences, opts);
    if (examples.empty()) return std::numeric_limits<double>::quiet_NaN();
    const std::vector<double> theta = pack(probe);
    std::size_t hits = 0;
    for (const auto& e : examples) {
        const auto s = scores(e, theta);
        const auto best = static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin());
        if (best == e.gold) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(examples.size());
}

double eval_probe(const ProbeModel& probe, const ModelWeights& weights,
                  const std::vector<AnnotatedSentence>& sentences, const ProbeOptions& opts) {
    return eval_probe(probe, weights, convert(sentences), opts);
}

double probe_chance_rate(const std::vector<ProbeSentence>& sentences) {
    double total = 0.0;
    std::size_t n = 0;
    for (const auto& s : sentences) {
        if (s.tokens.size() < 2) continue;
        for (const auto& h : s.heads) {
            if (!h) continue;
            total += 1.0 / static_cast<double>(s.tokens.size() - 1);
            ++n;
        }
    }
    return n ? total / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

void save_probe(const ProbeModel& probe, const std::filesystem::path& path) {
    if (probe.u.size() != probe.n_layers * probe.n_heads || probe.v.size() != probe.u.size()) {
        throw InputError("save_probe: inconsistent probe shape");
    }
    auto to_float = [](const std::vector<double>& x) { return std::vector<float>(x.begin(), x.end()); };
    Archive a;
    a.kind = "probe";
    a.meta = {{"n_layers", std::to_string(probe.n_layers)}, {"n_heads", std::to_string(probe.n_heads)}};
    a.tensors.emplace_back("forward_attention", TensorF32({probe.n_layers, probe.n_heads}, to_float(probe.u)));
    a.tensors.emplace_back("reverse_attention", TensorF32({probe.n_layers, probe.n_heads}, to_float(probe.v)));
    a.tensors.emplace_back("embedding_and_bias",
                           TensorF32({2}, {static_cast<float>(probe.w), static_cast<float>(probe.b)}));
    write_archive(a, path);
}

ProbeModel load_probe(const std::filesystem::path& path) {
    const Archive a = read_archive(path);
    if (a.kind != "probe") throw CorruptionError(path.string() + " does not hold a probe");
    const TensorF32* u = a.find_tensor("forward_attention");
    const TensorF32* v = a.find_tensor("reverse_attention");
    const TensorF32* wb = a.find_tensor("embedding_and_bias");
    if (u == nullptr || v == nullptr || wb == nullptr || u->rank() != 2 || v->shape() != u->shape() ||
        wb->size() != 2) {
        throw CorruptionError(path.string() + ": missing or mis-shaped probe tensors");
    }
    ProbeModel m;
    m.n_layers = u->shape()[0];
    m.n_heads = u->shape()[1];
    m.u.assign(u->data().begin(), u->data().end());
    m.v.assign(v->data().begin(), v->data().end());
    m.w = (*wb)[0];
    m.b = (*wb)[1];
    if (!m.all_finite()) throw CorruptionError(path.string() + ": non-finite probe parameters");
    return m;
}

}  // namespace ilens
