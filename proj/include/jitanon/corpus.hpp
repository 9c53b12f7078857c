#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace jitanon {

/// Canonical quasi-identifier order. Primary-QID hashing, prompt payloads and
/// attacker signatures all index QIDs in this order.
inline constexpr std::array<std::string_view, 10> kQidNames = {
    "nf", "nd", "ns", "ent", "ndev", "nuc", "age", "aexp", "arexp", "asexp"};

inline constexpr std::size_t kQidCount = kQidNames.size();

/// Index of a QID name in kQidNames, or npos.
std::size_t qid_index(std::string_view name);

/// One commit row. la/ld are the sensitive attributes; churn and ratio are
/// derived (churn = la + ld, ratio = la/churn, 0 when churn is 0). QIDs may
/// be missing (nullopt) and stay missing through the whole pipeline.
struct CommitRecord {
    std::string commit_id;
    std::int64_t timestamp = 0;
    std::int64_t la = 0;
    std::int64_t ld = 0;
    std::array<std::optional<double>, kQidCount> qids{};
    bool buggy = false;
    std::int64_t churn = 0;
    double ratio = 0.0;

    bool operator==(const CommitRecord&) const = default;
};

struct CommitCorpus {
    std::vector<CommitRecord> records;
    std::string source_name;
    /// Logical names of the columns present in the source file, in file order.
    std::vector<std::string> column_manifest;

    std::size_t size() const { return records.size(); }
};

/// Maps logical column names (commit_id, timestamp, la, ld, buggy, the ten
/// QIDs, churn, ratio) to the headers actually used by a CSV file. Entries
/// default to the logical name itself; ApacheJIT-style files only need to
/// remap the few that differ (e.g. timestamp -> author_date, aexp -> exp).
struct ColumnMapping {
    std::map<std::string, std::string> columns;
    char delimiter = ',';

    std::string actual(const std::string& logical) const;
};

/// All logical column names load_corpus recognizes.
std::vector<std::string> logical_column_names();

/// Loads a UTF-8 CSV with a header row. Required columns: commit_id,
/// timestamp, la, ld, buggy and the ten QIDs (via the mapping). churn/ratio
/// columns are read when present, recomputed by derive_metrics. Unmapped
/// columns are ignored. Throws MissingColumn, RowParseError,
/// DuplicateCommitId.
CommitCorpus load_corpus(const std::filesystem::path& path, const ColumnMapping& mapping = {});

/// Writes the corpus back to CSV: the loaded columns in their original order,
/// with churn and ratio appended when the source lacked them.
void write_corpus_csv(const CommitCorpus& corpus, const std::filesystem::path& path,
                      const ColumnMapping& mapping = {});

/// Serializes to CSV text (used by write_corpus_csv and the atomic writers).
std::string corpus_to_csv(const CommitCorpus& corpus, const ColumnMapping& mapping = {});

/// Populates churn and ratio on every record. Idempotent.
CommitCorpus derive_metrics(CommitCorpus corpus);

/// Sorts by (timestamp, commit_id) and splits at floor(n * train_fraction).
/// Throws EmptyCorpus; train_fraction must be in (0,1).
std::pair<CommitCorpus, CommitCorpus> chronological_split(const CommitCorpus& corpus,
                                                          double train_fraction);

}  // namespace jitanon
