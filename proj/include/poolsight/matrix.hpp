#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "poolsight/errors.hpp"

namespace poolsight {

/// n observations x p named features. The missing mask is only populated
/// during assembly; persisted matrices are complete (no missing cells).
struct FeatureMatrix {
    std::vector<std::string> observation_ids;
    std::vector<std::string> feature_names;
    std::vector<std::string> provenance;  // per feature, same length as names
    Eigen::MatrixXd values;               // n x p
    std::vector<uint8_t> missing;         // n*p row-major; empty means none

    Eigen::Index n_rows() const { return values.rows(); }
    Eigen::Index n_cols() const { return values.cols(); }

    bool is_missing(Eigen::Index i, Eigen::Index j) const {
        return !missing.empty() &&
               missing[static_cast<size_t>(i) * static_cast<size_t>(values.cols()) +
                       static_cast<size_t>(j)] != 0;
    }

    void set_missing(Eigen::Index i, Eigen::Index j, bool m) {
        if (missing.empty()) {
            missing.assign(static_cast<size_t>(values.rows()) * static_cast<size_t>(values.cols()), 0);
        }
        missing[static_cast<size_t>(i) * static_cast<size_t>(values.cols()) +
                static_cast<size_t>(j)] = m ? 1 : 0;
    }

    bool has_missing() const {
        for (uint8_t m : missing) {
            if (m) return true;
        }
        return false;
    }

    int column(const std::string& name) const {
        for (size_t j = 0; j < feature_names.size(); ++j) {
            if (feature_names[j] == name) return static_cast<int>(j);
        }
        return -1;
    }

    /// Keep only the listed columns, in the given order.
    FeatureMatrix select_columns(const std::vector<int>& cols) const;

    /// Keep only the listed rows, in the given order.
    FeatureMatrix select_rows(const std::vector<int>& rows) const;

    /// Checks invariants: unique names, n>=1, p>=1, finite where not missing.
    void validate() const;
};

/// CSV with an `id` column plus one column per feature; a JSON sidecar keeps
/// per-feature provenance. Doubles are written so they round-trip exactly.
void save_matrix(const FeatureMatrix& m, const std::string& csv_path,
                 const std::string& sidecar_path);
FeatureMatrix load_matrix(const std::string& csv_path, const std::string& sidecar_path);

void save_response(const std::vector<std::string>& ids, const Eigen::VectorXd& y,
                   const std::string& csv_path);
std::pair<std::vector<std::string>, Eigen::VectorXd> load_response(const std::string& csv_path);

}  // namespace poolsight
