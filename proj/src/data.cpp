#include "genreg/data.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace genreg {

double generated_regressor(const GeneratedRegressorSpec& spec,
                           const std::function<double(const Eigen::VectorXd&)>& g,
                           const Observation& obs) {
    const double gz = g(obs.z);
    if (!std::isfinite(gz)) throw NumericalError("first-step prediction is not finite");
    return spec.variant == RegressorVariant::residual ? obs.d - gz : gz;
}

Dataset::Dataset(std::vector<Observation> observations, std::vector<int> x_designation,
                 Mode mode)
    : obs_(std::move(observations)), x_designation_(std::move(x_designation)), mode_(mode) {
    if (obs_.empty()) throw DataError("dataset is empty");
    zdim_ = static_cast<int>(obs_.front().z.size());
    for (size_t i = 0; i < obs_.size(); ++i) {
        const Observation& o = obs_[i];
        if (o.z.size() != zdim_)
            throw DataError("row " + std::to_string(i) + ": inconsistent z dimension");
        if (!std::isfinite(o.y) || !std::isfinite(o.d) || !o.z.allFinite())
            throw DataError("row " + std::to_string(i) + ": non-finite entry");
        if (mode_ == Mode::selection && o.d != 0.0 && o.d != 1.0)
            throw DataError("row " + std::to_string(i) + ": d must be 0/1 in selection mode");
    }
    if (x_designation_.empty()) throw DataError("x designation is empty");
    std::set<int> seen;
    for (int idx : x_designation_) {
        if (idx < 0 || idx > zdim_)
            throw DataError("x designation index " + std::to_string(idx) + " out of range");
        if (!seen.insert(idx).second)
            throw DataError("duplicate x designation index " + std::to_string(idx));
        if (mode_ == Mode::selection && idx == 0)
            throw DataError("in selection mode X must be a sub-vector of z");
    }
}

Eigen::VectorXd Dataset::extract_x(const Observation& o) const {
    Eigen::VectorXd x(x_designation_.size());
    for (size_t j = 0; j < x_designation_.size(); ++j) {
        const int idx = x_designation_[j];
        x[static_cast<Eigen::Index>(j)] = (idx == 0) ? o.d : o.z[idx - 1];
    }
    return x;
}

Eigen::MatrixXd Dataset::z_matrix() const {
    Eigen::MatrixXd Z(n(), zdim_);
    for (int i = 0; i < n(); ++i) Z.row(i) = obs_[static_cast<size_t>(i)].z.transpose();
    return Z;
}

Eigen::MatrixXd Dataset::z_matrix(const std::vector<int>& rows) const {
    Eigen::MatrixXd Z(rows.size(), zdim_);
    for (size_t r = 0; r < rows.size(); ++r)
        Z.row(static_cast<Eigen::Index>(r)) = obs_[static_cast<size_t>(rows[r])].z.transpose();
    return Z;
}

Eigen::MatrixXd Dataset::x_matrix(const std::vector<int>& rows) const {
    Eigen::MatrixXd X(rows.size(), xdim());
    for (size_t r = 0; r < rows.size(); ++r)
        X.row(static_cast<Eigen::Index>(r)) = extract_x(rows[r]).transpose();
    return X;
}

Eigen::VectorXd Dataset::y_vector(const std::vector<int>& rows) const {
    Eigen::VectorXd y(rows.size());
    for (size_t r = 0; r < rows.size(); ++r) y[static_cast<Eigen::Index>(r)] = obs_[static_cast<size_t>(rows[r])].y;
    return y;
}

Eigen::VectorXd Dataset::d_vector(const std::vector<int>& rows) const {
    Eigen::VectorXd d(rows.size());
    for (size_t r = 0; r < rows.size(); ++r) d[static_cast<Eigen::Index>(r)] = obs_[static_cast<size_t>(rows[r])].d;
    return d;
}

int Dataset::designation_index(const std::string& label, int zdim) {
    if (label == "d") return 0;
    if (label.size() >= 2 && label[0] == 'z') {
        int k = 0;
        try {
            k = std::stoi(label.substr(1));
        } catch (...) {
            throw DataError("unknown x designation column '" + label + "'");
        }
        if (k >= 1 && k <= zdim) return k;
    }
    throw DataError("unknown x designation column '" + label + "'");
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

Dataset Dataset::from_csv(const std::string& path, const std::vector<std::string>& x_columns,
                          Mode mode) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open data file '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty data file '" + path + "'");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> header = split_csv_line(line);

    int y_col = -1, d_col = -1;
    std::vector<std::pair<int, int>> z_cols;  // (z index 1-based, column)
    for (size_t c = 0; c < header.size(); ++c) {
        const std::string& h = header[c];
        if (h == "y") y_col = static_cast<int>(c);
        else if (h == "d") d_col = static_cast<int>(c);
        else if (h.size() >= 2 && h[0] == 'z') {
            int k;
            try {
                k = std::stoi(h.substr(1));
            } catch (...) {
                throw DataError("unrecognized column '" + h + "'");
            }
            z_cols.emplace_back(k, static_cast<int>(c));
        } else {
            throw DataError("unrecognized column '" + h + "'");
        }
    }
    if (y_col < 0) throw DataError("missing required column 'y'");
    if (d_col < 0) throw DataError("missing required column 'd'");
    if (z_cols.empty()) throw DataError("missing z columns (expected z1..zp)");
    std::sort(z_cols.begin(), z_cols.end());
    for (size_t k = 0; k < z_cols.size(); ++k)
        if (z_cols[k].first != static_cast<int>(k) + 1)
            throw DataError("z columns must be contiguous z1..zp");

    std::vector<Observation> obs;
    size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw DataError("line " + std::to_string(lineno) + ": wrong field count");
        Observation o;
        o.z.resize(static_cast<Eigen::Index>(z_cols.size()));
        try {
            o.y = std::stod(fields[static_cast<size_t>(y_col)]);
            o.d = std::stod(fields[static_cast<size_t>(d_col)]);
            for (size_t k = 0; k < z_cols.size(); ++k)
                o.z[static_cast<Eigen::Index>(k)] =
                    std::stod(fields[static_cast<size_t>(z_cols[k].second)]);
        } catch (const std::exception&) {
            throw DataError("line " + std::to_string(lineno) + ": unparseable number");
        }
        obs.push_back(std::move(o));
    }

    const int zdim = static_cast<int>(z_cols.size());
    std::vector<int> designation;
    for (const std::string& label : x_columns)
        designation.push_back(designation_index(label, zdim));
    return Dataset(std::move(obs), std::move(designation), mode);
}

void Dataset::to_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write data file '" + path + "'");
    out << "y,d";
    for (int k = 1; k <= zdim_; ++k) out << ",z" << k;
    out << "\n";
    out.precision(17);
    for (const Observation& o : obs_) {
        out << o.y << "," << o.d;
        for (int k = 0; k < zdim_; ++k) out << "," << o.z[k];
        out << "\n";
    }
}

}  // namespace genreg
