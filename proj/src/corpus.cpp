#include "jitanon/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "jitanon/errors.hpp"

namespace jitanon {
namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

bool is_missing_marker(std::string_view s) {
    return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan" || s == "null" ||
           s == "NULL" || s == "None";
}

// Splits one CSV line. Handles quoted fields with doubled-quote escapes;
// embedded newlines are not supported (metric tables are single-line rows).
std::vector<std::string> split_csv_line(const std::string& line, char delimiter) {
    std::vector<std::string> fields;
    std::string current;
    bool in_quotes = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                current.push_back(c);
            }
        } else if (c == '"' && current.empty()) {
            in_quotes = true;
        } else if (c == delimiter) {
            fields.push_back(std::move(current));
            current.clear();
        } else if (c != '\r') {
            current.push_back(c);
        }
    }
    fields.push_back(std::move(current));
    return fields;
}

std::int64_t parse_int_field(std::string_view raw, std::size_t row, const std::string& field) {
    const std::string_view s = trim(raw);
    if (s.empty()) throw RowParseError(row, field, "empty");
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec == std::errc{} && ptr == s.data() + s.size()) return value;
    // Some exports store counts as integral decimals ("120.0"); accept those.
    double d = 0.0;
    auto [dp, dec] = std::from_chars(s.data(), s.data() + s.size(), d);
    if (dec == std::errc{} && dp == s.data() + s.size() && std::isfinite(d) &&
        std::floor(d) == d && std::abs(d) < 9.0e15) {
        return static_cast<std::int64_t>(d);
    }
    throw RowParseError(row, field, "not an integer: '" + std::string(s) + "'");
}

double parse_double_field(std::string_view raw, std::size_t row, const std::string& field) {
    const std::string_view s = trim(raw);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(value)) {
        throw RowParseError(row, field, "not a number: '" + std::string(s) + "'");
    }
    return value;
}

bool parse_bool_field(std::string_view raw, std::size_t row, const std::string& field) {
    const std::string_view s = trim(raw);
    if (s == "1" || s == "true" || s == "True" || s == "TRUE") return true;
    if (s == "0" || s == "false" || s == "False" || s == "FALSE") return false;
    throw RowParseError(row, field, "not a boolean: '" + std::string(s) + "'");
}

// Shortest round-tripping representation, so a write/reload cycle is exact.
void append_double(std::string& out, double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, ptr);
}

}  // namespace

std::size_t qid_index(std::string_view name) {
    for (std::size_t i = 0; i < kQidNames.size(); ++i) {
        if (kQidNames[i] == name) return i;
    }
    return static_cast<std::size_t>(-1);
}

std::string ColumnMapping::actual(const std::string& logical) const {
    auto it = columns.find(logical);
    return it == columns.end() ? logical : it->second;
}

std::vector<std::string> logical_column_names() {
    std::vector<std::string> names = {"commit_id", "timestamp", "la", "ld", "buggy"};
    for (auto q : kQidNames) names.emplace_back(q);
    names.emplace_back("churn");
    names.emplace_back("ratio");
    return names;
}

CommitCorpus load_corpus(const std::filesystem::path& path, const ColumnMapping& mapping) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open file: " + path.string());

    std::string header_line;
    if (!std::getline(in, header_line)) throw MissingColumn("commit_id");
    // Strip a UTF-8 BOM if the exporter left one.
    if (header_line.size() >= 3 && header_line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
        header_line.erase(0, 3);
    }
    const auto header = split_csv_line(header_line, mapping.delimiter);

    // actual header name -> column position
    std::map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < header.size(); ++i) {
        position.emplace(std::string(trim(header[i])), i);
    }

    // logical name -> column position, in the order columns appear in the file
    std::map<std::string, std::size_t> col;
    std::vector<std::pair<std::size_t, std::string>> ordered;
    for (const auto& logical : logical_column_names()) {
        auto it = position.find(mapping.actual(logical));
        if (it != position.end()) {
            col[logical] = it->second;
            ordered.emplace_back(it->second, logical);
        }
    }
    for (const auto& required : {"commit_id", "timestamp", "la", "ld", "buggy"}) {
        if (!col.count(required)) throw MissingColumn(mapping.actual(required));
    }
    for (auto q : kQidNames) {
        if (!col.count(std::string(q))) throw MissingColumn(mapping.actual(std::string(q)));
    }
    std::sort(ordered.begin(), ordered.end());

    CommitCorpus corpus;
    corpus.source_name = path.stem().string();
    for (const auto& [pos, logical] : ordered) corpus.column_manifest.push_back(logical);

    const bool has_churn = col.count("churn") > 0;
    const bool has_ratio = col.count("ratio") > 0;

    std::unordered_set<std::string> seen_ids;
    std::string line;
    std::size_t row = 0;  // data-row index, 0-based
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line, mapping.delimiter);
        auto cell = [&](const std::string& logical) -> std::string_view {
            const std::size_t pos = col.at(logical);
            if (pos >= fields.size()) return {};
            return fields[pos];
        };

        CommitRecord rec;
        rec.commit_id = std::string(trim(cell("commit_id")));
        if (rec.commit_id.empty()) throw RowParseError(row, "commit_id", "empty");
        if (!seen_ids.insert(rec.commit_id).second) throw DuplicateCommitId(rec.commit_id);

        rec.timestamp = parse_int_field(cell("timestamp"), row, "timestamp");
        rec.la = parse_int_field(cell("la"), row, "la");
        rec.ld = parse_int_field(cell("ld"), row, "ld");
        if (rec.la < 0) throw RowParseError(row, "la", "negative");
        if (rec.ld < 0) throw RowParseError(row, "ld", "negative");
        rec.buggy = parse_bool_field(cell("buggy"), row, "buggy");

        for (std::size_t q = 0; q < kQidCount; ++q) {
            const std::string name(kQidNames[q]);
            const auto raw = trim(cell(name));
            if (is_missing_marker(raw)) continue;
            const double v = parse_double_field(raw, row, name);
            if (v < 0.0) throw RowParseError(row, name, "negative");
            rec.qids[q] = v;
        }

        if (has_churn && !is_missing_marker(trim(cell("churn")))) {
            rec.churn = parse_int_field(cell("churn"), row, "churn");
        }
        if (has_ratio && !is_missing_marker(trim(cell("ratio")))) {
            rec.ratio = parse_double_field(cell("ratio"), row, "ratio");
        }

        corpus.records.push_back(std::move(rec));
        ++row;
    }
    return corpus;
}

std::string corpus_to_csv(const CommitCorpus& corpus, const ColumnMapping& mapping) {
    std::vector<std::string> columns = corpus.column_manifest;
    if (columns.empty()) columns = logical_column_names();
    if (std::find(columns.begin(), columns.end(), "churn") == columns.end()) {
        columns.push_back("churn");
    }
    if (std::find(columns.begin(), columns.end(), "ratio") == columns.end()) {
        columns.push_back("ratio");
    }

    std::string out;
    out.reserve(64 * (corpus.records.size() + 1));
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i) out.push_back(mapping.delimiter);
        out += mapping.actual(columns[i]);
    }
    out.push_back('\n');

    for (const auto& rec : corpus.records) {
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (i) out.push_back(mapping.delimiter);
            const std::string& c = columns[i];
            if (c == "commit_id") {
                out += rec.commit_id;
            } else if (c == "timestamp") {
                out += std::to_string(rec.timestamp);
            } else if (c == "la") {
                out += std::to_string(rec.la);
            } else if (c == "ld") {
                out += std::to_string(rec.ld);
            } else if (c == "buggy") {
                out += rec.buggy ? '1' : '0';
            } else if (c == "churn") {
                out += std::to_string(rec.churn);
            } else if (c == "ratio") {
                append_double(out, rec.ratio);
            } else {
                const std::size_t q = qid_index(c);
                if (q != static_cast<std::size_t>(-1) && rec.qids[q].has_value()) {
                    append_double(out, *rec.qids[q]);
                }
                // missing QIDs stay as empty cells
            }
        }
        out.push_back('\n');
    }
    return out;
}

void write_corpus_csv(const CommitCorpus& corpus, const std::filesystem::path& path,
                      const ColumnMapping& mapping) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write file: " + path.string());
    out << corpus_to_csv(corpus, mapping);
}

CommitCorpus derive_metrics(CommitCorpus corpus) {
    for (auto& rec : corpus.records) {
        rec.churn = rec.la + rec.ld;
        rec.ratio = rec.churn > 0
                        ? static_cast<double>(rec.la) / static_cast<double>(rec.churn)
                        : 0.0;
    }
    return corpus;
}

std::pair<CommitCorpus, CommitCorpus> chronological_split(const CommitCorpus& corpus,
                                                          double train_fraction) {
    if (corpus.records.empty()) throw EmptyCorpus();
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw Error("train_fraction must be in (0,1)");
    }
    std::vector<const CommitRecord*> sorted;
    sorted.reserve(corpus.records.size());
    for (const auto& r : corpus.records) sorted.push_back(&r);
    std::sort(sorted.begin(), sorted.end(), [](const CommitRecord* a, const CommitRecord* b) {
        if (a->timestamp != b->timestamp) return a->timestamp < b->timestamp;
        return a->commit_id < b->commit_id;
    });

    const auto n_train = static_cast<std::size_t>(
        std::floor(static_cast<double>(sorted.size()) * train_fraction));

    CommitCorpus train, test;
    train.source_name = corpus.source_name + ":train";
    test.source_name = corpus.source_name + ":test";
    train.column_manifest = corpus.column_manifest;
    test.column_manifest = corpus.column_manifest;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        (i < n_train ? train : test).records.push_back(*sorted[i]);
    }
    return {std::move(train), std::move(test)};
}

}  // namespace jitanon
