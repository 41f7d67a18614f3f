#include "induction_lens/relation_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "induction_lens/circuits.hpp"
#include "induction_lens/errors.hpp"
#include "induction_lens/random.hpp"

namespace ilens {

void AnalysisConfig::validate() const {
    if (tau_gate && !(tau > 1.0)) throw ConfigError("tau must exceed 1 when the gate is enabled");
    if (!std::isfinite(tau)) throw ConfigError("tau must be finite");
}

bool attends_to_head(std::span<const float> row, std::size_t j, std::size_t s, double tau, bool ratio_test) {
    if (s > j) throw InputError("attends_to_head: s = " + std::to_string(s) + " exceeds j = " + std::to_string(j));
    if (j >= row.size()) throw InputError("attends_to_head: j outside the attention row");
    const ArgmaxResult best = argmax_with_runnerup(row, j);
    if (best.index != s) return false;
    if (!best.runner_up) return true;
    if (!ratio_test) return true;
    const double runner = *best.runner_up;
    if (runner <= 0.0) return best.value > 0.0f;
    return static_cast<double>(best.value) / runner > tau;
}

std::optional<double> relation_score(std::span<const double> p, std::size_t tail) {
    if (tail >= p.size()) {
        throw InputError("relation_score: tail index " + std::to_string(tail) + " not among " +
                         std::to_string(p.size()) + " prefix tokens");
    }
    const double mean = std::accumulate(p.begin(), p.end(), 0.0) / static_cast<double>(p.size());
    double total = 0.0;
    double q_tail = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        const double q = std::max(0.0, p[k] - mean);
        total += q;
        if (k == tail) q_tail = q;
    }
    if (total == 0.0) return std::nullopt;
    return q_tail / total;
}

std::vector<TokenId> unique_prefix(std::span<const TokenId> tokens, std::size_t j) {
    std::vector<TokenId> out;
    for (std::size_t k = 0; k <= j && k < tokens.size(); ++k) {
        if (std::find(out.begin(), out.end(), tokens[k]) == out.end()) out.push_back(tokens[k]);
    }
    return out;
}

std::vector<double> prefix_probabilities(std::span<const double> logits, std::span<const TokenId> prefix,
                                         SoftmaxMode mode) {
    std::vector<double> p;
    p.reserve(prefix.size());
    if (mode == SoftmaxMode::full_vocab) {
        const double peak = *std::max_element(logits.begin(), logits.end());
        double z = 0.0;
        for (double v : logits) z += std::exp(v - peak);
        for (TokenId t : prefix) p.push_back(std::exp(logits[static_cast<std::size_t>(t)] - peak) / z);
    } else {
        double peak = -std::numeric_limits<double>::infinity();
        for (TokenId t : prefix) peak = std::max(peak, logits[static_cast<std::size_t>(t)]);
        double z = 0.0;
        for (TokenId t : prefix) {
            p.push_back(std::exp(logits[static_cast<std::size_t>(t)] - peak));
            z += p.back();
        }
        for (double& v : p) v /= z;
    }
    return p;
}

std::optional<double> RelationIndexTable::mean(std::size_t layer, std::size_t head) const {
    const std::size_t i = layer * n_heads + head;
    if (count[i] == 0) return std::nullopt;
    return sum[i] / static_cast<double>(count[i]);
}

std::size_t HeadOccurrenceTable::total() const { return std::accumulate(count.begin(), count.end(), std::size_t{0}); }

double RatioHistogram::fraction_above(double tau) const {
    if (ratios.empty()) return std::numeric_limits<double>::quiet_NaN();
    const auto n = std::count_if(ratios.begin(), ratios.end(), [tau](double r) { return r > tau; });
    return static_cast<double>(n) / static_cast<double>(ratios.size());
}

void RatioHistogram::add(double ratio) {
    ratios.push_back(ratio);
    if (!(ratio < kBins * kBinWidth)) {
        ++overflow;
        return;
    }
    const auto bin = static_cast<std::size_t>(std::max(0.0, ratio) / kBinWidth);
    ++bins[std::min(bin, kBins - 1)];
}

namespace {

struct Pair {
    std::size_t s = 0;
    std::size_t o = 0;
};

using PairsFn = std::function<std::vector<Pair>(const AnnotatedSentence&)>;

// (layer, head, running triplet index, score) for every gate-passing (triplet, j).
using ScoreVisitor = std::function<void(std::size_t, std::size_t, std::size_t, std::optional<double>)>;

struct HeadTools {
    std::vector<CircuitMatrices> circuits;
    std::vector<OvProjector> projectors;
};

HeadTools head_tools(const ModelWeights& w) {
    HeadTools t;
    const ModelConfig& cfg = w.config();
    for (std::size_t l = 0; l < cfg.n_layers; ++l) {
        for (std::size_t h = 0; h < cfg.n_heads; ++h) {
            t.circuits.push_back(build_circuits(w, l, h));
            t.projectors.emplace_back(t.circuits.back(), w.unembed());
        }
    }
    return t;
}

struct PreparedSentence {
    std::vector<TokenId> tokens;
    std::size_t offset = 0;
    std::vector<TensorF32> attention;  // per head, index l*H+h
    TensorF32 x;                       // x_j for the OV projection
};

PreparedSentence prepare(const ModelWeights& w, const HeadTools& tools, const AnnotatedSentence& sentence,
                         const AnalysisConfig& cfg) {
    PreparedSentence p;
    if (cfg.prepend_bos) {
        p.tokens.push_back(cfg.bos);
        p.offset = 1;
    }
    p.tokens.insert(p.tokens.end(), sentence.tokens.begin(), sentence.tokens.end());
    if (p.tokens.size() > w.config().max_seq_len) p.tokens.resize(w.config().max_seq_len);
    if (cfg.attention == AttentionSource::forward_capture) {
        ForwardOptions opts;
        opts.capture_attention = true;
        p.attention = std::move(forward(w, p.tokens, opts).attention->patterns);
    } else {
        const TensorF32 raw = embed_sequence(w, p.tokens, false);
        for (const auto& c : tools.circuits) p.attention.push_back(circuit_attention(raw, c, cfg.qk_scale));
    }
    p.x = embed_sequence(w, p.tokens, cfg.normalize_embeddings);
    return p;
}

void scan_scores(const ModelWeights& w, const std::vector<AnnotatedSentence>& corpus, const PairsFn& pairs_of,
                 const AnalysisConfig& cfg, const ScoreVisitor& visit) {
    cfg.validate();
    const HeadTools tools = head_tools(w);
    const std::size_t heads = tools.circuits.size();
    std::size_t triplet_index = 0;
    for (const auto& sentence : corpus) {
        const std::vector<Pair> pairs = pairs_of(sentence);
        if (pairs.empty()) continue;
        const PreparedSentence p = prepare(w, tools, sentence, cfg);
        const std::size_t n = p.tokens.size();
        // p over unique prefix tokens, per head and j, filled on first use.
        std::vector<std::vector<std::optional<std::vector<double>>>> probs(heads,
                                                                          std::vector<std::optional<std::vector<double>>>(n));
        std::vector<std::vector<TokenId>> prefixes(n);
        for (std::size_t j = 0; j < n; ++j) prefixes[j] = unique_prefix(p.tokens, j);

        for (const Pair& pair : pairs) {
            const std::size_t s = pair.s + p.offset;
            const std::size_t o = pair.o + p.offset;
            const std::size_t idx = triplet_index++;
            if (s >= n || o >= n) continue;
            for (std::size_t hi = 0; hi < heads; ++hi) {
                const std::size_t layer = hi / w.config().n_heads;
                const std::size_t head = hi % w.config().n_heads;
                for (std::size_t j = std::max(s, o); j < n; ++j) {
                    if (!attends_to_head(p.attention[hi].row(j), j, s, cfg.tau, cfg.tau_gate)) continue;
                    const auto& prefix = prefixes[j];
                    auto& cached = probs[hi][j];
                    if (!cached) {
                        const std::vector<double> logits = tools.projectors[hi].logits(p.x.row(j));
                        cached = prefix_probabilities(logits, prefix, cfg.softmax);
                    }
                    const auto tail = static_cast<std::size_t>(
                        std::find(prefix.begin(), prefix.end(), p.tokens[o]) - prefix.begin());
                    visit(layer, head, idx, relation_score(*cached, tail));
                }
            }
        }
    }
}

RelationIndexTable table_from(const ModelWeights& w, const std::vector<AnnotatedSentence>& corpus,
                              const PairsFn& pairs_of, const AnalysisConfig& cfg, std::string label, bool reversed) {
    RelationIndexTable t;
    t.label = std::move(label);
    t.reversed = reversed;
    t.n_layers = w.config().n_layers;
    t.n_heads = w.config().n_heads;
    t.sum.assign(t.n_layers * t.n_heads, 0.0);
    t.count.assign(t.n_layers * t.n_heads, 0);
    scan_scores(w, corpus, pairs_of, cfg, [&](std::size_t l, std::size_t h, std::size_t, std::optional<double> a) {
        if (!a && !cfg.undefined_as_zero) return;
        t.sum[l * t.n_heads + h] += a.value_or(0.0);
        ++t.count[l * t.n_heads + h];
    });
    return t;
}

PairsFn relation_pairs(Relation relation, bool reversed) {
    return [relation, reversed](const AnnotatedSentence& s) {
        std::vector<Pair> out;
        for (const auto& t : s.triplets) {
            if (t.relation != relation) continue;
            const Triplet u = reversed ? t.swapped() : t;
            out.push_back({u.s, u.o});
        }
        return out;
    };
}

void require_triplets(const std::vector<AnnotatedSentence>& corpus, Relation relation) {
    for (const auto& s : corpus) {
        for (const auto& t : s.triplets) {
            if (t.relation == relation) return;
        }
    }
    throw InputError("corpus has no " + std::string(to_string(relation)) + " triplets");
}

}  // namespace

RelationIndexTable relation_index_table(const ModelWeights& weights, const std::vector<AnnotatedSentence>& corpus,
                                        Relation relation, const AnalysisConfig& config, bool reversed) {
    require_triplets(corpus, relation);
    return table_from(weights, corpus, relation_pairs(relation, reversed), config, std::string(to_string(relation)),
                      reversed);
}

RelationIndexTable reverse_table(const ModelWeights& weights, const std::vector<AnnotatedSentence>& corpus,
                                 Relation relation, const AnalysisConfig& config) {
    return relation_index_table(weights, corpus, relation, config, true);
}

RelationIndexTable baseline_table(const ModelWeights& weights, const std::vector<AnnotatedSentence>& corpus,
                                  const AnalysisConfig& config) {
    const std::size_t tail = config.baseline_pos;
    auto pairs_of = [tail](const AnnotatedSentence& s) {
        std::vector<Pair> out;
        if (s.size() <= tail) return out;
        for (const auto& t : s.triplets) {
            if (t.s != tail) out.push_back({t.s, tail});
        }
        return out;
    };
    return table_from(weights, corpus, pairs_of, config, "baseline", false);
}

HeadOccurrenceTable head_grouping(const ModelWeights& weights, const std::vector<AnnotatedSentence>& corpus,
                                  Relation relation, const AnalysisConfig& config) {
    HeadOccurrenceTable t;
    t.label = std::string(to_string(relation));
    t.n_layers = weights.config().n_layers;
    t.n_heads = weights.config().n_heads;
    const std::size_t heads = t.n_layers * t.n_heads;
    t.count.assign(heads, 0);

    // Per-triplet sums; triplet indices are dense in scan order.
    std::vector<std::vector<double>> sums;
    std::vector<std::vector<std::size_t>> counts;
    for (const auto& s : corpus) {
        for (const auto& tr : s.triplets) {
            if (tr.relation == relation) {
                sums.emplace_back(heads, 0.0);
                counts.emplace_back(heads, 0);
            }
        }
    }
    t.n_triplets = sums.size();
    scan_scores(weights, corpus, relation_pairs(relation, false), config,
                [&](std::size_t l, std::size_t h, std::size_t idx, std::optional<double> a) {
                    if (!a && !config.undefined_as_zero) return;
                    sums[idx][l * t.n_heads + h] += a.value_or(0.0);
                    ++counts[idx][l * t.n_heads + h];
                });
    for (std::size_t i = 0; i < sums.size(); ++i) {
        std::optional<std::size_t> best;
        double best_mean = 0.0;
        for (std::size_t hi = 0; hi < heads; ++hi) {
            if (counts[i][hi] == 0) continue;
            const double mean = sums[i][hi] / static_cast<double>(counts[i][hi]);
            if (mean > best_mean) {
                best_mean = mean;
                best = hi;
            }
        }
        if (best) ++t.count[*best];
    }
    return t;
}

RatioHistogram tau_ratio_distribution(const ModelWeights& weights, const std::vector<AnnotatedSentence>& corpus,
                                      const AnalysisConfig& config) {
    const HeadTools tools = config.attention == AttentionSource::circuit ? head_tools(weights) : HeadTools{};
    RatioHistogram hist;
    for (const auto& sentence : corpus) {
        if (sentence.triplets.empty()) continue;
        const PreparedSentence p = prepare(weights, tools, sentence, config);
        const std::size_t n = p.tokens.size();
        for (const auto& t : sentence.triplets) {
            const std::size_t s = t.s + p.offset;
            const std::size_t o = t.o + p.offset;
            if (s >= n || o >= n) continue;
            for (const auto& a : p.attention) {
                for (std::size_t j = std::max({s, o, std::size_t{1}}); j < n; ++j) {
                    const ArgmaxResult best = argmax_with_runnerup(a.row(j), j);
                    if (best.index != s) continue;
                    const double runner = best.runner_up.value_or(0.0f);
                    hist.add(runner > 0.0 ? best.value / runner : std::numeric_limits<double>::infinity());
                }
            }
        }
    }
    return hist;
}

double prefix_matching_score(const ModelWeights& weights, std::size_t layer, std::size_t head,
                             const PrefixMatchOptions& opts) {
    const ModelConfig& cfg = weights.config();
    if (layer >= cfg.n_layers || head >= cfg.n_heads) throw InputError("prefix_matching_score: head out of range");
    if (opts.seq_len < 1 || 2 * opts.seq_len > cfg.max_seq_len) {
        throw InputError("prefix_matching_score: doubled length " + std::to_string(2 * opts.seq_len) +
                         " exceeds max_seq_len " + std::to_string(cfg.max_seq_len));
    }
    if (opts.first_token < 0 || static_cast<std::size_t>(opts.first_token) >= cfg.vocab_size) {
        throw InputError("prefix_matching_score: first_token outside vocabulary");
    }
    const std::size_t pool = cfg.vocab_size - static_cast<std::size_t>(opts.first_token);
    double total = 0.0;
    std::size_t n = 0;
    for (std::size_t q = 0; q < opts.n_seqs; ++q) {
        Rng rng(derive_seed(opts.seed, "prefix-match", q));
        std::vector<TokenId> seq;
        if (opts.seq_len <= pool) {
            std::vector<TokenId> all(pool);
            std::iota(all.begin(), all.end(), opts.first_token);
            for (std::size_t k = 0; k < opts.seq_len; ++k) {
                std::swap(all[k], all[k + uniform_index(rng, pool - k)]);
            }
            seq.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(opts.seq_len));
        } else {
            for (std::size_t k = 0; k < opts.seq_len; ++k) {
                seq.push_back(opts.first_token + static_cast<TokenId>(uniform_index(rng, pool)));
            }
        }
        std::vector<TokenId> doubled = seq;
        doubled.insert(doubled.end(), seq.begin(), seq.end());
        ForwardOptions fo;
        fo.capture_attention = true;
        const auto rec = forward(weights, doubled, fo).attention;
        const TensorF32& a = rec->at(layer, head);
        for (std::size_t j = opts.seq_len; j < doubled.size(); ++j) {
            std::size_t prev = j;
            for (std::size_t k = j; k-- > 0;) {
                if (doubled[k] == doubled[j]) {
                    prev = k;
                    break;
                }
            }
            if (prev == j) continue;
            total += a(j, prev + 1);
            ++n;
        }
    }
    return n == 0 ? 0.0 : total / static_cast<double>(n);
}

std::optional<double> copying_score(const ModelWeights& weights, std::size_t layer, std::size_t head,
                                    std::span<const TokenId> sample) {
    std::vector<TokenId> distinct;
    for (TokenId t : sample) {
        if (t < 0 || static_cast<std::size_t>(t) >= weights.config().vocab_size) {
            throw InputError("copying_score: token id outside vocabulary");
        }
        if (std::find(distinct.begin(), distinct.end(), t) == distinct.end()) distinct.push_back(t);
    }
    if (distinct.size() < 16) {
        throw InputError("copying_score needs at least 16 distinct tokens, got " + std::to_string(distinct.size()));
    }
    const OvProjector projector(build_circuits(weights, layer, head), weights.unembed());
    double total = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < distinct.size(); ++i) {
        const std::vector<double> logits =
            projector.logits(weights.embed().row(static_cast<std::size_t>(distinct[i])));
        const std::vector<double> p = prefix_probabilities(logits, distinct, SoftmaxMode::restricted);
        if (const auto a = relation_score(p, i)) {
            total += *a;
            ++n;
        }
    }
    if (n == 0) return std::nullopt;
    return total / static_cast<double>(n);
}

}  // namespace ilens
