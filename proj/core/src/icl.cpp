#include "induction_lens/icl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "induction_lens/errors.hpp"
#include "induction_lens/parallel.hpp"
#include "induction_lens/random.hpp"

namespace ilens {

void LossReductionSpec::validate() const {
    if (i < 1 || j < i) {
        throw ConfigError("loss reduction needs i >= 1 and j >= i, got i=" + std::to_string(i) +
                          " j=" + std::to_string(j));
    }
}

LossReductionResult loss_reduction_from_losses(const std::vector<std::vector<double>>& losses,
                                               const LossReductionSpec& spec) {
    spec.validate();
    LossReductionResult r;
    double total = 0.0;
    for (const auto& l : losses) {
        if (l.size() < spec.i + spec.j) {
            ++r.skipped;
            continue;
        }
        double early = 0.0, later = 0.0;
        for (std::size_t t = 0; t < spec.i; ++t) early += l[t];
        for (std::size_t t = spec.j; t < spec.i + spec.j; ++t) later += l[t];
        total += (later - early) / static_cast<double>(spec.i);
        ++r.used;
    }
    r.value = r.used ? total / static_cast<double>(r.used) : std::numeric_limits<double>::quiet_NaN();
    return r;
}

LossReductionResult loss_reduction(const ModelWeights& weights, const std::vector<std::vector<TokenId>>& texts,
                                   const LossReductionSpec& spec) {
    spec.validate();
    std::vector<std::vector<double>> losses;
    losses.reserve(texts.size());
    for (const auto& t : texts) {
        if (t.size() < 2) {
            losses.emplace_back();
            continue;
        }
        losses.push_back(token_losses(weights, t));
    }
    return loss_reduction_from_losses(losses, spec);
}

std::string_view to_string(IclTaskKind k) {
    switch (k) {
        case IclTaskKind::binary: return "binary";
        case IclTaskKind::four_class: return "four-class";
        case IclTaskKind::nine_class: return "nine-class";
        case IclTaskKind::relation_justification: return "relation-justification";
    }
    return "?";
}

std::optional<IclTaskKind> parse_task_kind(std::string_view s) {
    for (auto k : {IclTaskKind::binary, IclTaskKind::four_class, IclTaskKind::nine_class,
                   IclTaskKind::relation_justification}) {
        if (to_string(k) == s) return k;
    }
    return std::nullopt;
}

std::size_t class_count(IclTaskKind k) {
    switch (k) {
        case IclTaskKind::binary: return 2;
        case IclTaskKind::four_class: return 4;
        case IclTaskKind::nine_class: return 9;
        case IclTaskKind::relation_justification: return 2;
    }
    return 0;
}

std::string_view to_string(JustificationKind k) {
    switch (k) {
        case JustificationKind::subj_verb: return "subj-verb";
        case JustificationKind::verb_obj: return "verb-obj";
        case JustificationKind::mod_obj: return "mod-obj";
        case JustificationKind::part_whole: return "part-whole";
    }
    return "?";
}

std::vector<TokenId> category_pool(std::string_view name, const WordBanks& banks, const Vocab& vocab) {
    if (name == "month") return vocab.ids(banks.months);
    for (int c = 0; c < kNounClassCount; ++c) {
        const auto cls = static_cast<NounClass>(c);
        if (to_string(cls) == name) return vocab.ids(banks.nouns_of(cls));
    }
    throw InputError("unknown entity category '" + std::string(name) + "'");
}

TaskPools classification_pools(std::span<const std::string> names, const WordBanks& banks, const Vocab& vocab) {
    TaskPools p;
    for (const auto& n : names) {
        p.names.push_back(n);
        p.categories.push_back(category_pool(n, banks, vocab));
    }
    return p;
}

TaskPools justification_pools(JustificationKind kind, const WordBanks& banks, const Vocab& vocab) {
    TaskPools p;
    p.names = {std::string(to_string(kind))};
    auto add = [&](const std::string& a, const std::string& b) { p.positives.emplace_back(vocab.id(a), vocab.id(b)); };
    switch (kind) {
        case JustificationKind::subj_verb:
            for (const auto& v : banks.verbs) {
                for (const auto& n : banks.nouns) {
                    if (v.subjects & mask_of(n.cls)) add(n.word, v.word);
                }
            }
            break;
        case JustificationKind::verb_obj:
            for (const auto& v : banks.verbs) {
                for (const auto& n : banks.nouns) {
                    if (v.objects & mask_of(n.cls)) add(v.word, n.word);
                }
            }
            break;
        case JustificationKind::mod_obj:
            for (const auto& a : banks.adjectives) {
                for (const auto& n : banks.nouns) {
                    if (a.applies_to & mask_of(n.cls)) add(a.word, n.word);
                }
            }
            break;
        case JustificationKind::part_whole:
            for (const auto& pw : banks.part_whole) add(pw.part, pw.whole);
            break;
    }
    std::vector<TokenId> firsts;
    for (const auto& [a, b] : p.positives) {
        if (std::find(firsts.begin(), firsts.end(), a) == firsts.end()) firsts.push_back(a);
    }
    for (TokenId a : firsts) {
        for (const auto& m : banks.months) p.negatives.emplace_back(a, vocab.id(m));
    }
    return p;
}

TaskPools default_pools(IclTaskKind kind) {
    switch (kind) {
        case IclTaskKind::binary:
        case IclTaskKind::four_class: {
            const std::vector<std::string> names = {"fruit", "month"};
            return classification_pools(names);
        }
        case IclTaskKind::nine_class: {
            const std::vector<std::string> names = {"fruit", "animal", "month"};
            return classification_pools(names);
        }
        case IclTaskKind::relation_justification: return justification_pools(JustificationKind::subj_verb);
    }
    throw InputError("unknown task kind");
}

TokenId label_token(IclTaskKind kind, std::size_t c, const Vocab& vocab) {
    if (c >= class_count(kind)) throw InputError("class index outside the task's label set");
    if (kind == IclTaskKind::relation_justification) return vocab.id(c == 0 ? "true" : "false");
    return vocab.id(std::to_string(c));
}

bool is_format_token(IclTaskKind kind, TokenId token, const Vocab& vocab) {
    if (kind == IclTaskKind::relation_justification) {
        return token == vocab.id("true") || token == vocab.id("false");
    }
    return vocab.is_digit(token);
}

namespace {

void check_pools(IclTaskKind kind, const TaskPools& pools) {
    if (kind == IclTaskKind::relation_justification) {
        if (pools.positives.empty() || pools.negatives.empty()) {
            throw InputError("relation justification needs positive and negative pairs");
        }
        return;
    }
    const std::size_t need = kind == IclTaskKind::nine_class ? 3 : 2;
    if (pools.categories.size() < need) {
        throw InputError(std::string(to_string(kind)) + " needs " + std::to_string(need) + " entity pools");
    }
    for (std::size_t c = 0; c < need; ++c) {
        if (pools.categories[c].empty()) throw InputError("empty entity pool");
    }
}

std::pair<TokenId, TokenId> draw_pair(IclTaskKind kind, const TaskPools& pools, std::size_t cls, Rng& rng) {
    auto pick = [&](std::size_t pool) {
        const auto& v = pools.categories[pool];
        return v[uniform_index(rng, v.size())];
    };
    switch (kind) {
        case IclTaskKind::binary:
            return cls == 0 ? std::pair{pick(0), pick(1)} : std::pair{pick(1), pick(0)};
        case IclTaskKind::four_class:
            return {pick(cls / 2), pick(cls % 2)};
        case IclTaskKind::nine_class:
            return {pick(cls / 3), pick(cls % 3)};
        case IclTaskKind::relation_justification: {
            const auto& v = cls == 0 ? pools.positives : pools.negatives;
            return v[uniform_index(rng, v.size())];
        }
    }
    return {};
}

}  // namespace

IclTaskInstance gen_task(IclTaskKind kind, const TaskPools& pools, std::size_t shots, std::uint64_t seed,
                         const Vocab& vocab) {
    check_pools(kind, pools);
    Rng rng(seed);
    const std::size_t n_classes = class_count(kind);
    IclTaskInstance t;
    t.kind = kind;
    t.shots = shots;
    for (std::size_t k = 0; k < shots; ++k) {
        t.example_classes.push_back(k < n_classes && shots >= n_classes ? k : uniform_index(rng, n_classes));
    }
    for (std::size_t k = shots; k > 1; --k) std::swap(t.example_classes[k - 1], t.example_classes[uniform_index(rng, k)]);
    t.gold_class = uniform_index(rng, n_classes);
    t.gold = label_token(kind, t.gold_class, vocab);

    const TokenId sep = vocab.id(","), colon = vocab.id(":");
    t.prompt.push_back(vocab.bos());
    for (std::size_t cls : t.example_classes) {
        const auto [a, b] = draw_pair(kind, pools, cls, rng);
        t.prompt.insert(t.prompt.end(), {a, sep, b, colon, label_token(kind, cls, vocab), vocab.newline()});
    }
    const auto [qa, qb] = draw_pair(kind, pools, t.gold_class, rng);
    t.prompt.insert(t.prompt.end(), {qa, sep, qb, colon});
    return t;
}

std::vector<IclTaskInstance> gen_trials(IclTaskKind kind, const TaskPools& pools, std::size_t shots,
                                        std::size_t trials, std::uint64_t seed, const Vocab& vocab) {
    std::vector<IclTaskInstance> out;
    out.reserve(trials);
    for (std::size_t k = 0; k < trials; ++k) {
        out.push_back(gen_task(kind, pools, shots, derive_seed(seed, static_cast<std::uint64_t>(shots), k), vocab));
    }
    return out;
}

IclScores evaluate_instances(const ModelWeights& weights, const std::vector<IclTaskInstance>& instances,
                             const Vocab& vocab, bool deterministic) {
    std::vector<TokenId> generated(instances.size());
    parallel_for(instances.size(), worker_count(deterministic),
                 [&](std::size_t k) { generated[k] = greedy_next_token(weights, instances[k].prompt); });
    IclScores s;
    s.n = instances.size();
    if (s.n == 0) return s;
    std::size_t format = 0, correct = 0;
    for (std::size_t k = 0; k < instances.size(); ++k) {
        if (is_format_token(instances[k].kind, generated[k], vocab)) ++format;
        if (generated[k] == instances[k].gold) ++correct;
    }
    s.format_acc = static_cast<double>(format) / static_cast<double>(s.n);
    s.pred_acc = static_cast<double>(correct) / static_cast<double>(s.n);
    return s;
}

double eval_format(const ModelWeights& weights, const std::vector<IclTaskInstance>& instances, const Vocab& vocab) {
    return evaluate_instances(weights, instances, vocab).format_acc;
}

double eval_prediction(const ModelWeights& weights, const std::vector<IclTaskInstance>& instances,
                       const Vocab& vocab) {
    return evaluate_instances(weights, instances, vocab).pred_acc;
}

IclResult evaluate_task(const ModelWeights& weights, IclTaskKind kind, const TaskPools& pools,
                        std::span<const std::size_t> shot_grid, std::size_t trials, std::uint64_t seed,
                        std::size_t step, bool deterministic) {
    IclResult r;
    r.step = step;
    r.kind = kind;
    for (std::size_t shots : shot_grid) {
        const auto instances = gen_trials(kind, pools, shots, trials, seed);
        r.per_shots.push_back({shots, evaluate_instances(weights, instances, Vocab::builtin(), deterministic)});
    }
    return r;
}

std::size_t min_shots(std::span<const std::pair<std::size_t, double>> accuracy_by_shots, double threshold,
                      std::size_t cap) {
    std::optional<std::size_t> best;
    for (const auto& [shots, acc] : accuracy_by_shots) {
        if (shots <= cap && acc > threshold && (!best || shots < *best)) best = shots;
    }
    return best.value_or(cap);
}

std::size_t min_shots_for_format(const ModelWeights& weights, IclTaskKind kind, const TaskPools& pools,
                                 std::size_t trials, std::uint64_t seed, double threshold, std::size_t cap,
                                 bool deterministic) {
    for (std::size_t shots = 1; shots <= cap; ++shots) {
        const auto instances = gen_trials(kind, pools, shots, trials, seed);
        if (evaluate_instances(weights, instances, Vocab::builtin(), deterministic).format_acc > threshold) {
            return shots;
        }
    }
    return cap;
}

}  // namespace ilens
