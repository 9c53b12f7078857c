#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace jitanon {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// -- corpus ------------------------------------------------------------

struct MissingColumn : Error {
    explicit MissingColumn(const std::string& name)
        : Error("missing column: " + name), column(name) {}
    std::string column;
};

struct RowParseError : Error {
    RowParseError(std::size_t row_index, const std::string& field_name, const std::string& detail)
        : Error("row " + std::to_string(row_index) + ": cannot parse field '" + field_name +
                "': " + detail),
          row(row_index),
          field(field_name) {}
    std::size_t row;
    std::string field;
};

struct DuplicateCommitId : Error {
    explicit DuplicateCommitId(const std::string& commit_id)
        : Error("duplicate commit_id: " + commit_id), id(commit_id) {}
    std::string id;
};

struct EmptyCorpus : Error {
    EmptyCorpus() : Error("corpus is empty") {}
};

// -- binning / stats ---------------------------------------------------

struct AllMissing : Error {
    explicit AllMissing(const std::string& qid_name)
        : Error("all values missing for QID: " + qid_name), qid(qid_name) {}
    std::string qid;
};

struct EmptyQidList : Error {
    EmptyQidList() : Error("QID list is empty") {}
};

struct EmptyCluster : Error {
    EmptyCluster() : Error("cluster has no members") {}
};

// -- parameter generation ----------------------------------------------

struct SchemaViolation : Error {
    SchemaViolation(const std::string& field_name, const std::string& why)
        : Error("schema violation at '" + field_name + "': " + why),
          field(field_name),
          reason(why) {}
    std::string field;
    std::string reason;
};

struct ClusterIdMismatch : Error {
    ClusterIdMismatch(const std::string& expected, const std::string& got)
        : Error("cluster_id mismatch: expected '" + expected + "', got '" + got + "'") {}
};

struct WeightSumError : Error {
    explicit WeightSumError(double sum)
        : Error("mixture weights sum to " + std::to_string(sum) + ", expected 1") {}
};

struct EndpointUnreachable : Error {
    using Error::Error;
};

struct MalformedResponse : Error {
    using Error::Error;
};

struct Timeout : Error {
    using Error::Error;
};

// -- regeneration --------------------------------------------------------

struct EmptyCommitId : Error {
    EmptyCommitId() : Error("commit_id is empty") {}
};

struct MissingParams : Error {
    explicit MissingParams(const std::string& cluster_id)
        : Error("no anonymization parameters for cluster: " + cluster_id), cluster(cluster_id) {}
    std::string cluster;
};

// -- privacy -------------------------------------------------------------

struct EmptyOriginalGroup : Error {
    EmptyOriginalGroup() : Error("query predicate matches no original rows") {}
};

struct RowMismatch : Error {
    using Error::Error;
};

// -- utility ---------------------------------------------------------------

struct LengthMismatch : Error {
    using Error::Error;
};

struct EmptyTrainingSet : Error {
    EmptyTrainingSet() : Error("training set is empty") {}
};

// -- cli / config ------------------------------------------------------------

struct ConfigError : Error {
    using Error::Error;
};

}  // namespace jitanon
