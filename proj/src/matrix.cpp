#include "poolsight/matrix.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "poolsight/csv.hpp"

namespace poolsight {

using nlohmann::json;

FeatureMatrix FeatureMatrix::select_columns(const std::vector<int>& cols) const {
    FeatureMatrix out;
    out.observation_ids = observation_ids;
    out.values.resize(values.rows(), static_cast<Eigen::Index>(cols.size()));
    for (size_t k = 0; k < cols.size(); ++k) {
        const int j = cols[k];
        out.feature_names.push_back(feature_names[static_cast<size_t>(j)]);
        out.provenance.push_back(provenance.empty() ? "" : provenance[static_cast<size_t>(j)]);
        out.values.col(static_cast<Eigen::Index>(k)) = values.col(j);
    }
    if (!missing.empty()) {
        out.missing.assign(static_cast<size_t>(values.rows()) * cols.size(), 0);
        for (Eigen::Index i = 0; i < values.rows(); ++i) {
            for (size_t k = 0; k < cols.size(); ++k) {
                out.missing[static_cast<size_t>(i) * cols.size() + k] =
                    is_missing(i, cols[k]) ? 1 : 0;
            }
        }
    }
    return out;
}

FeatureMatrix FeatureMatrix::select_rows(const std::vector<int>& rows) const {
    FeatureMatrix out;
    out.feature_names = feature_names;
    out.provenance = provenance;
    out.values.resize(static_cast<Eigen::Index>(rows.size()), values.cols());
    for (size_t k = 0; k < rows.size(); ++k) {
        out.observation_ids.push_back(observation_ids[static_cast<size_t>(rows[k])]);
        out.values.row(static_cast<Eigen::Index>(k)) = values.row(rows[k]);
    }
    if (!missing.empty()) {
        out.missing.assign(rows.size() * static_cast<size_t>(values.cols()), 0);
        for (size_t k = 0; k < rows.size(); ++k) {
            for (Eigen::Index j = 0; j < values.cols(); ++j) {
                out.missing[k * static_cast<size_t>(values.cols()) + static_cast<size_t>(j)] =
                    is_missing(rows[k], j) ? 1 : 0;
            }
        }
    }
    return out;
}

void FeatureMatrix::validate() const {
    if (values.rows() < 1 || values.cols() < 1) {
        throw DataError("feature matrix must have at least one row and one column");
    }
    if (static_cast<Eigen::Index>(feature_names.size()) != values.cols()) {
        throw DataError("feature name count does not match column count");
    }
    if (static_cast<Eigen::Index>(observation_ids.size()) != values.rows()) {
        throw DataError("observation id count does not match row count");
    }
    std::set<std::string> names(feature_names.begin(), feature_names.end());
    if (names.size() != feature_names.size()) {
        throw DataError("feature names are not unique");
    }
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index j = 0; j < values.cols(); ++j) {
            if (!is_missing(i, j) && !std::isfinite(values(i, j))) {
                throw DataError("non-finite value at (" + std::to_string(i) + "," +
                                std::to_string(j) + ") without missing flag");
            }
        }
    }
}

void save_matrix(const FeatureMatrix& m, const std::string& csv_path,
                 const std::string& sidecar_path) {
    if (m.has_missing()) {
        throw DataError("save_matrix: matrix still has missing cells");
    }
    std::ofstream out(csv_path);
    if (!out) throw DataError("cannot write matrix CSV: " + csv_path);
    out << "id";
    for (const auto& n : m.feature_names) out << "," << csv::quote(n);
    out << "\n";
    for (Eigen::Index i = 0; i < m.values.rows(); ++i) {
        out << csv::quote(m.observation_ids[static_cast<size_t>(i)]);
        for (Eigen::Index j = 0; j < m.values.cols(); ++j) {
            out << "," << csv::format_double(m.values(i, j));
        }
        out << "\n";
    }

    json side;
    side["features"] = json::array();
    for (size_t j = 0; j < m.feature_names.size(); ++j) {
        side["features"].push_back({
            {"name", m.feature_names[j]},
            {"provenance", m.provenance.empty() ? "" : m.provenance[j]},
        });
    }
    std::ofstream sout(sidecar_path);
    if (!sout) throw DataError("cannot write matrix sidecar: " + sidecar_path);
    sout << side.dump(1) << "\n";
}

FeatureMatrix load_matrix(const std::string& csv_path, const std::string& sidecar_path) {
    const csv::Table t = csv::read_file(csv_path);
    if (t.header.empty() || t.header[0] != "id") {
        throw DataError(csv_path + ": first column must be 'id'");
    }
    FeatureMatrix m;
    m.feature_names.assign(t.header.begin() + 1, t.header.end());
    m.values.resize(static_cast<Eigen::Index>(t.rows.size()),
                    static_cast<Eigen::Index>(m.feature_names.size()));
    for (size_t i = 0; i < t.rows.size(); ++i) {
        m.observation_ids.push_back(t.rows[i][0]);
        for (size_t j = 0; j < m.feature_names.size(); ++j) {
            auto v = csv::parse_double(t.rows[i][j + 1]);
            if (!v) throw DataError(csv_path + ": non-numeric cell in row " + std::to_string(i + 2));
            m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = *v;
        }
    }

    m.provenance.assign(m.feature_names.size(), "");
    std::ifstream sin(sidecar_path);
    if (sin) {
        json side;
        try {
            sin >> side;
        } catch (const json::exception& e) {
            throw DataError(sidecar_path + ": JSON parse error: " + std::string(e.what()));
        }
        if (side.contains("features")) {
            const auto& feats = side["features"];
            for (size_t j = 0; j < m.feature_names.size() && j < feats.size(); ++j) {
                if (feats[j].value("name", "") != m.feature_names[j]) {
                    throw DataError(sidecar_path + ": sidecar feature order does not match CSV");
                }
                m.provenance[j] = feats[j].value("provenance", "");
            }
        }
    }
    m.validate();
    return m;
}

void save_response(const std::vector<std::string>& ids, const Eigen::VectorXd& y,
                   const std::string& csv_path) {
    if (static_cast<Eigen::Index>(ids.size()) != y.size()) {
        throw DataError("save_response: id/value length mismatch");
    }
    std::ofstream out(csv_path);
    if (!out) throw DataError("cannot write response CSV: " + csv_path);
    out << "id,value\n";
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        out << csv::quote(ids[static_cast<size_t>(i)]) << "," << csv::format_double(y(i)) << "\n";
    }
}

std::pair<std::vector<std::string>, Eigen::VectorXd> load_response(const std::string& csv_path) {
    const csv::Table t = csv::read_file(csv_path);
    const int ci = t.require_column("id", csv_path);
    const int cv = t.require_column("value", csv_path);
    std::vector<std::string> ids;
    Eigen::VectorXd y(static_cast<Eigen::Index>(t.rows.size()));
    for (size_t i = 0; i < t.rows.size(); ++i) {
        ids.push_back(t.rows[i][static_cast<size_t>(ci)]);
        auto v = csv::parse_double(t.rows[i][static_cast<size_t>(cv)]);
        if (!v) throw DataError(csv_path + ": non-numeric value in row " + std::to_string(i + 2));
        y(static_cast<Eigen::Index>(i)) = *v;
    }
    return {std::move(ids), std::move(y)};
}

}  // namespace poolsight
