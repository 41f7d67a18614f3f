#include "induction_lens/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "induction_lens/errors.hpp"
#include "induction_lens/version.hpp"

namespace ilens {

std::size_t CsvTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw InputError("CSV has no column '" + std::string(name) + "'");
}

std::string schema_comment(std::string_view schema, int schema_version, std::uint64_t seed) {
    return "induction_lens " + std::string(schema) + " v" + std::to_string(schema_version) +
           " seed=" + std::to_string(seed) + " version=" + std::string(version());
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_number(const std::string& s) {
    if (s == "nan") return std::nan("");
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw CorruptionError("not a number: '" + s + "'");
    }
    return v;
}

namespace {

std::vector<std::string> split_fields(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.emplace_back(line.substr(start));
            break;
        }
        out.emplace_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

std::string join_fields(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out.push_back(',');
        out += fields[i];
    }
    return out;
}

}  // namespace

std::string to_csv_text(const CsvTable& table) {
    std::string out;
    for (const auto& c : table.comments) out += "# " + c + "\n";
    out += join_fields(table.header) + "\n";
    for (const auto& r : table.rows) {
        if (r.size() != table.header.size()) throw InputError("CSV row width differs from the header");
        out += join_fields(r) + "\n";
    }
    return out;
}

CsvTable parse_csv_text(std::string_view text) {
    CsvTable t;
    bool have_header = false;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        if (line.front() == '#') {
            line.remove_prefix(1);
            if (!line.empty() && line.front() == ' ') line.remove_prefix(1);
            t.comments.emplace_back(line);
            continue;
        }
        auto fields = split_fields(line);
        if (!have_header) {
            t.header = std::move(fields);
            have_header = true;
        } else {
            if (fields.size() != t.header.size()) throw CorruptionError("CSV row width differs from the header");
            t.rows.push_back(std::move(fields));
        }
    }
    if (!have_header) throw CorruptionError("CSV without a header row");
    return t;
}

void write_text_atomic(const std::filesystem::path& path, std::string_view text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".partial";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot write " + tmp.string());
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!out) throw InputError("write to " + tmp.string() + " failed");
    }
    std::filesystem::rename(tmp, path);
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) { write_text_atomic(path, to_csv_text(table)); }

CsvTable read_csv(const std::filesystem::path& path) { return parse_csv_text(read_text(path)); }

}  // namespace ilens
