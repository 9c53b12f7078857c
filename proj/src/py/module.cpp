#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "json.hpp"

#include "jitanon/binning.hpp"
#include "jitanon/cluster_stats.hpp"
#include "jitanon/corpus.hpp"
#include "jitanon/errors.hpp"
#include "jitanon/paramgen.hpp"
#include "jitanon/pipeline.hpp"
#include "jitanon/privacy.hpp"
#include "jitanon/regen.hpp"
#include "jitanon/rng.hpp"
#include "jitanon/utility_eval.hpp"
#include "jitanon/version.hpp"

namespace py = pybind11;

namespace {

py::object json_to_py(const nlohmann::json& j) {
    switch (j.type()) {
        case nlohmann::json::value_t::object: {
            py::dict d;
            for (const auto& [key, value] : j.items()) d[py::str(key)] = json_to_py(value);
            return d;
        }
        case nlohmann::json::value_t::array: {
            py::list l;
            for (const auto& v : j) l.append(json_to_py(v));
            return l;
        }
        case nlohmann::json::value_t::string:
            return py::str(j.get<std::string>());
        case nlohmann::json::value_t::boolean:
            return py::bool_(j.get<bool>());
        case nlohmann::json::value_t::number_integer:
            return py::int_(j.get<std::int64_t>());
        case nlohmann::json::value_t::number_unsigned:
            return py::int_(j.get<std::uint64_t>());
        case nlohmann::json::value_t::number_float:
            return py::float_(j.get<double>());
        default:
            return py::none();
    }
}

nlohmann::json py_to_json(const py::handle& obj) {
    if (obj.is_none()) return nullptr;
    if (py::isinstance<py::bool_>(obj)) return obj.cast<bool>();
    if (py::isinstance<py::int_>(obj)) return obj.cast<std::int64_t>();
    if (py::isinstance<py::float_>(obj)) return obj.cast<double>();
    if (py::isinstance<py::str>(obj)) return obj.cast<std::string>();
    if (py::isinstance<py::dict>(obj)) {
        nlohmann::json j = nlohmann::json::object();
        for (const auto& item : obj.cast<py::dict>()) {
            j[item.first.cast<std::string>()] = py_to_json(item.second);
        }
        return j;
    }
    if (py::isinstance<py::list>(obj) || py::isinstance<py::tuple>(obj)) {
        nlohmann::json j = nlohmann::json::array();
        for (const auto& item : obj.cast<py::sequence>()) j.push_back(py_to_json(item));
        return j;
    }
    throw py::type_error("unsupported config value type");
}

jitanon::ColumnMapping mapping_from(const std::map<std::string, std::string>& columns) {
    jitanon::ColumnMapping mapping;
    mapping.columns = std::map<std::string, std::string>(columns.begin(), columns.end());
    return mapping;
}

py::dict record_to_dict(const jitanon::CommitRecord& r) {
    py::dict d;
    d["commit_id"] = r.commit_id;
    d["timestamp"] = r.timestamp;
    d["la"] = r.la;
    d["ld"] = r.ld;
    d["buggy"] = r.buggy;
    d["churn"] = r.churn;
    d["ratio"] = r.ratio;
    for (std::size_t q = 0; q < jitanon::kQidCount; ++q) {
        const auto name = std::string(jitanon::kQidNames[q]);
        d[py::str(name)] = r.qids[q].has_value() ? py::object(py::float_(*r.qids[q]))
                                                 : py::object(py::none());
    }
    return d;
}

struct PreparedRun {
    jitanon::ClusterAssignment assignment;
    std::map<std::string, jitanon::AnonymizationParams> params;
};

PreparedRun prepare_fallback(const jitanon::CommitCorpus& corpus, int n_bins) {
    PreparedRun p;
    p.assignment = jitanon::cluster_corpus(corpus, n_bins);
    const auto stats = jitanon::summarize_all(corpus, p.assignment);
    p.params = jitanon::generate_all_params(stats, {}, jitanon::ParamPolicy::fallback_only).params;
    return p;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "cluster-guided anonymization of commit-level defect datasets";
    m.attr("__version__") = std::string(jitanon::kVersion);

    py::register_exception<jitanon::Error>(m, "JitanonError", PyExc_RuntimeError);

    py::class_<jitanon::CommitCorpus>(m, "CommitCorpus")
        .def("__len__", [](const jitanon::CommitCorpus& c) { return c.size(); })
        .def("record", [](const jitanon::CommitCorpus& c, std::size_t i) {
            if (i >= c.size()) throw py::index_error();
            return record_to_dict(c.records[i]);
        })
        .def("commit_ids", [](const jitanon::CommitCorpus& c) {
            std::vector<std::string> ids;
            ids.reserve(c.size());
            for (const auto& r : c.records) ids.push_back(r.commit_id);
            return ids;
        });

    m.def(
        "load_corpus",
        [](const std::string& path, const std::map<std::string, std::string>& mapping) {
            return jitanon::derive_metrics(jitanon::load_corpus(path, mapping_from(mapping)));
        },
        py::arg("path"), py::arg("mapping") = std::map<std::string, std::string>{},
        "Load a commit CSV and populate the derived churn/ratio metrics.");

    m.def(
        "write_corpus_csv",
        [](const jitanon::CommitCorpus& corpus, const std::string& path,
           const std::map<std::string, std::string>& mapping) {
            jitanon::write_corpus_csv(corpus, path, mapping_from(mapping));
        },
        py::arg("corpus"), py::arg("path"),
        py::arg("mapping") = std::map<std::string, std::string>{});

    m.def("derive_seed",
          [](const std::string& commit_id) { return jitanon::derive_seed(commit_id); });
    m.def("assign_primary_qid", [](const std::string& commit_id) {
        return std::string(jitanon::assign_primary_qid(
            commit_id, std::span<const std::string_view>(jitanon::kQidNames)));
    });
    m.def(
        "bin_index",
        [](py::object value, const std::vector<double>& edges) {
            jitanon::BinEdges e{"x", edges};
            std::optional<double> v;
            if (!value.is_none()) v = value.cast<double>();
            return jitanon::bin_index_for(v, e);
        },
        py::arg("value"), py::arg("edges"));

    m.def(
        "cluster_corpus",
        [](const jitanon::CommitCorpus& corpus, int n_bins) {
            return json_to_py(jitanon::assignment_to_json(jitanon::cluster_corpus(corpus, n_bins)));
        },
        py::arg("corpus"), py::arg("n_bins") = 20);

    m.def(
        "cluster_stats",
        [](const jitanon::CommitCorpus& corpus, int n_bins) {
            const auto assignment = jitanon::cluster_corpus(corpus, n_bins);
            const auto stats = jitanon::summarize_all(corpus, assignment);
            nlohmann::json j = nlohmann::json::object();
            for (const auto& [label, s] : stats) j[label] = jitanon::cluster_stats_to_json(s);
            return json_to_py(j);
        },
        py::arg("corpus"), py::arg("n_bins") = 20);

    m.def(
        "fallback_parameters",
        [](const jitanon::CommitCorpus& corpus, int n_bins) {
            const auto p = prepare_fallback(corpus, n_bins);
            nlohmann::json j = nlohmann::json::object();
            for (const auto& [label, params] : p.params) {
                j[label] = jitanon::params_to_json(params);
            }
            return json_to_py(j);
        },
        py::arg("corpus"), py::arg("n_bins") = 20);

    m.def(
        "anonymize",
        [](const jitanon::CommitCorpus& corpus, int n_bins) {
            const auto p = prepare_fallback(corpus, n_bins);
            return jitanon::anonymize_corpus(corpus, p.assignment, p.params);
        },
        py::arg("corpus"), py::arg("n_bins") = 20,
        "Anonymize with deterministic fallback parameters.");

    m.def(
        "compute_ipr",
        [](const jitanon::CommitCorpus& original, const jitanon::CommitCorpus& anonymized,
           int qid_bins, int sensitive_bins) {
            jitanon::AttackerConfig config;
            config.qid_bins = qid_bins;
            config.sensitive_bins = sensitive_bins;
            const auto report = jitanon::compute_ipr(original, anonymized, config);
            return json_to_py(jitanon::privacy_report_to_json(report, config));
        },
        py::arg("original"), py::arg("anonymized"), py::arg("qid_bins") = 10,
        py::arg("sensitive_bins") = 10);

    m.def(
        "run_utility",
        [](const jitanon::CommitCorpus& corpus, std::uint64_t seed, int n_trees, int n_runs,
           int sample_size) {
            jitanon::RFHyperparams hp;
            hp.n_trees = n_trees;
            jitanon::UtilityProtocol protocol;
            protocol.n_runs = n_runs;
            protocol.sample_size = sample_size;
            const auto report = jitanon::run_utility_experiment(corpus, hp, seed, protocol);
            return json_to_py(jitanon::utility_report_to_json(report));
        },
        py::arg("corpus"), py::arg("seed") = 42, py::arg("n_trees") = 200, py::arg("n_runs") = 5,
        py::arg("sample_size") = 500);

    m.def(
        "run_pipeline",
        [](const py::dict& config) {
            const auto run_config = jitanon::config_from_json(py_to_json(config));
            const auto result = jitanon::run_pipeline(run_config);
            py::dict out;
            out["ipr_percent"] = result.privacy.ipr_percent;
            out["privacy_level"] = jitanon::privacy_level(result.privacy.ipr_percent);
            out["mean_f1_original"] = result.utility_original.mean_f1;
            out["mean_f1_anonymized"] = result.utility_anonymized.mean_f1;
            out["model_count"] = result.model_count;
            out["fallback_count"] = result.fallback_count;
            out["cluster_count"] = result.cluster_count;
            return out;
        },
        py::arg("config"), "Full pipeline from a config dict; writes all artifacts.");

    m.def("f1_score", &jitanon::f1_score, py::arg("predictions"), py::arg("truth"));
}
