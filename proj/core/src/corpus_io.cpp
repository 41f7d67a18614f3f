#include <fstream>

#include "json.hpp"

#include "induction_lens/corpus.hpp"
#include "induction_lens/errors.hpp"

namespace ilens {

namespace {

using nlohmann::json;

json to_json(const AnnotatedSentence& s) {
    json j;
    j["tokens"] = s.tokens;
    j["surface"] = s.surface;
    json triplets = json::array();
    for (const auto& t : s.triplets) {
        triplets.push_back({{"s", t.s}, {"o", t.o}, {"relation", std::string(to_string(t.relation))},
                            {"reversed", t.reversed}});
    }
    j["triplets"] = std::move(triplets);
    if (!s.mentions.empty()) {
        json mentions = json::array();
        for (const auto& m : s.mentions) mentions.push_back({{"begin", m.begin}, {"end", m.end}, {"entity", m.entity}});
        j["mentions"] = std::move(mentions);
    }
    return j;
}

AnnotatedSentence from_json(const json& j) {
    AnnotatedSentence s;
    s.tokens = j.at("tokens").get<std::vector<TokenId>>();
    s.surface = j.at("surface").get<std::vector<std::string>>();
    for (const auto& t : j.at("triplets")) {
        const auto name = t.at("relation").get<std::string>();
        const auto rel = parse_relation(name);
        if (!rel) throw CorruptionError("unknown relation '" + name + "'");
        s.triplets.push_back({t.at("s").get<std::size_t>(), t.at("o").get<std::size_t>(), *rel,
                              t.value("reversed", false)});
    }
    if (j.contains("mentions")) {
        for (const auto& m : j.at("mentions")) {
            s.mentions.push_back(
                {m.at("begin").get<std::size_t>(), m.at("end").get<std::size_t>(), m.at("entity").get<std::size_t>()});
        }
    }
    return s;
}

}  // namespace

void write_corpus(const std::filesystem::path& path, const std::vector<AnnotatedSentence>& corpus) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open " + path.string() + " for writing");
    for (const auto& s : corpus) out << to_json(s).dump() << '\n';
    if (!out) throw InputError("write to " + path.string() + " failed");
}

std::vector<AnnotatedSentence> read_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open corpus " + path.string());
    std::vector<AnnotatedSentence> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            out.push_back(from_json(json::parse(line)));
            out.back().validate();
        } catch (const json::exception& e) {
            throw CorruptionError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        } catch (const InputError& e) {
            throw CorruptionError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace ilens
