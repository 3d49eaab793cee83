#ifndef CTXENT_IO_HPP
#define CTXENT_IO_HPP

#include <json.hpp>

#include <filesystem>
#include <fstream>

#include "ctxent/properties.hpp"

namespace ctxent {

using json = nlohmann::json;

// Matrix files: {"dim": n, "entries": [[re, im], ...]} row-major, n^2 entries.

inline json matrix_to_json(const Matrix& m) {
    if (m.rows() != m.cols()) throw Error(errc::bad_input, "matrix serialization covers square matrices");
    json entries = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            entries.push_back(json::array({m(i, j).real(), m(i, j).imag()}));
    return json{{"dim", m.rows()}, {"entries", entries}};
}

inline Matrix matrix_from_json(const json& j) {
    if (!j.contains("dim") || !j.contains("entries"))
        throw Error(errc::bad_input, "matrix JSON needs \"dim\" and \"entries\"");
    const Eigen::Index n = j.at("dim").get<Eigen::Index>();
    const auto& entries = j.at("entries");
    if (!entries.is_array() || entries.size() != static_cast<std::size_t>(n * n))
        throw Error(errc::bad_input,
                    "matrix JSON entry count " + std::to_string(entries.size()) + " does not match dim " +
                        std::to_string(n) + " squared");
    Matrix m(n, n);
    std::size_t idx = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j2 = 0; j2 < n; ++j2, ++idx) {
            const auto& e = entries[idx];
            if (!e.is_array() || e.size() != 2)
                throw Error(errc::bad_input, "matrix JSON entries must be [re, im] pairs");
            m(i, j2) = Complex(e[0].get<double>(), e[1].get<double>());
        }
    return m;
}

// Context files: {"dim": n, "projections": [matrix, ...]} or
// {"unitary": matrix, "partition": [[column indices], ...]}.

inline json context_to_json(const Context& v) {
    json ps = json::array();
    for (const auto& p : v.projections()) ps.push_back(matrix_to_json(p.matrix()));
    return json{{"dim", v.dim()}, {"projections", ps}};
}

inline Context context_from_json(const json& j, const NumericPolicy& num = NumericPolicy::standard()) {
    if (j.contains("projections")) {
        std::vector<Matrix> ms;
        for (const auto& pj : j.at("projections")) ms.push_back(matrix_from_json(pj));
        return context_from_projections(ms, num);
    }
    if (j.contains("unitary")) {
        const Unitary u = Unitary::validated(matrix_from_json(j.at("unitary")), num);
        const int n = u.dim();
        std::vector<std::vector<int>> partition;
        if (j.contains("partition")) {
            partition = j.at("partition").get<std::vector<std::vector<int>>>();
        } else {
            for (int i = 0; i < n; ++i) partition.push_back({i});
        }
        std::vector<Matrix> ms;
        for (const auto& group : partition) {
            Matrix p = Matrix::Zero(n, n);
            for (int col : group) {
                if (col < 0 || col >= n) throw Error(errc::bad_input, "partition column index out of range");
                p += u.column(col) * u.column(col).adjoint();
            }
            ms.push_back(p);
        }
        return context_from_projections(ms, num);
    }
    throw Error(errc::bad_input, "context JSON needs \"projections\" or \"unitary\"");
}

// Section samples: {"dim": n, "entries": [{"context": ..., "value": v}, ...]}.

inline json section_to_json(const EntropySectionSample& s) {
    json entries = json::array();
    for (const auto& [ctx, value] : s.entries())
        entries.push_back(json{{"context", context_to_json(ctx)}, {"value", value}});
    return json{{"dim", s.dim()}, {"entries", entries}};
}

inline EntropySectionSample section_from_json(const json& j,
                                              const NumericPolicy& num = NumericPolicy::standard()) {
    EntropySectionSample s(j.at("dim").get<int>());
    for (const auto& e : j.at("entries")) {
        const double value = e.at("value").get<double>();
        s.add(context_from_json(e.at("context"), num), value);
    }
    return s;
}

inline json report_to_json(const CheckReport& r) {
    return json{{"check", r.check}, {"max_residual", r.max_residual}, {"trials", r.trials}, {"pass", r.pass}};
}

inline json minimizer_result_to_json(const MinimizerResult& r) {
    return json{{"best_value", r.best_value},
                {"converged", r.converged},
                {"best_restart", r.best_restart},
                {"queries_used", r.queries_used},
                {"value_trace", r.value_trace},
                {"best_context", json{{"unitary", matrix_to_json(r.best_context.generating_unitary().matrix())}}}};
}

inline json reconstruction_result_to_json(const ReconstructionResult& r) {
    json j{{"queries_used", r.queries_used}, {"branch", r.branch}};
    switch (r.outcome) {
        case ReconstructionResult::Outcome::unique:
            j["outcome"] = "unique";
            j["state"] = matrix_to_json(r.state->matrix());
            break;
        case ReconstructionResult::Outcome::ambiguous_pair:
            j["outcome"] = "ambiguous_pair";
            j["state"] = matrix_to_json(r.state->matrix());
            j["state_alt"] = matrix_to_json(r.state_alt->matrix());
            break;
        case ReconstructionResult::Outcome::infeasible:
            j["outcome"] = "infeasible";
            j["reason"] = infeasible_reason_name(*r.reason);
            j["detail"] = r.detail;
            break;
    }
    return j;
}

/// Reproducibility record written next to every output file.
struct RunManifest {
    std::string command;
    json config;
    std::uint64_t seed = 0;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    double wall_time_s = 0.0;
    bool pass = true;
    std::string summary;
};

inline json manifest_to_json(const RunManifest& m) {
    return json{{"command", m.command}, {"config", m.config},       {"seed", m.seed},
                {"inputs", m.inputs},   {"outputs", m.outputs},     {"wall_time_s", m.wall_time_s},
                {"pass", m.pass},       {"summary", m.summary}};
}

/// Write-then-rename so partially written outputs never appear.
inline void atomic_write_file(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw Error(errc::bad_input, "cannot open " + tmp.string() + " for writing");
        os << content;
    }
    std::filesystem::rename(tmp, path);
}

inline json load_json_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw Error(errc::bad_input, "cannot open " + path.string());
    json j;
    is >> j;
    return j;
}

}  // namespace ctxent

#endif  // CTXENT_IO_HPP
