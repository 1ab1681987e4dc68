#include "genreg/dictionary.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace genreg {

namespace {

constexpr int kMaxAtoms = 5000;

double ipow(double u, int e) {
    double r = 1.0;
    for (int k = 0; k < e; ++k) r *= u;
    return r;
}

// Monomials of total degree <= degree over `dim` coordinates, constant first,
// ordered by (total degree, lexicographic exponent).
std::vector<std::vector<int>> total_degree_exponents(int dim, int degree) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(static_cast<size_t>(dim), 0);
    std::function<void(int, int)> rec = [&](int coord, int remaining) {
        if (coord == dim) {
            out.push_back(cur);
            return;
        }
        for (int e = 0; e <= remaining; ++e) {
            cur[static_cast<size_t>(coord)] = e;
            rec(coord + 1, remaining - e);
        }
        cur[static_cast<size_t>(coord)] = 0;
    };
    rec(0, degree);
    std::sort(out.begin(), out.end(), [](const std::vector<int>& a, const std::vector<int>& b) {
        int ta = 0, tb = 0;
        for (int e : a) ta += e;
        for (int e : b) tb += e;
        if (ta != tb) return ta < tb;
        return a > b;
    });
    return out;
}

}  // namespace

void Dictionary::init_identity_map() {
    center_ = Eigen::VectorXd::Zero(dim_);
    scale_ = Eigen::VectorXd::Ones(dim_);
}

Dictionary Dictionary::tensor_polynomial(int x_dim, int degree_x, int degree_v) {
    if (x_dim < 1 || degree_x < 0 || degree_v < 0)
        throw ConfigError("tensor_polynomial: invalid dimensions/degrees");
    Dictionary d;
    d.kind_ = InputKind::over_xv;
    d.family_ = DictionaryFamily::tensor_polynomial;
    d.dim_ = x_dim + 1;
    std::vector<int> cur(static_cast<size_t>(d.dim_), 0);
    std::function<void(int)> rec = [&](int coord) {
        if (coord == x_dim) {
            for (int e = 0; e <= degree_v; ++e) {
                cur[static_cast<size_t>(x_dim)] = e;
                d.exps_.push_back(cur);
            }
            cur[static_cast<size_t>(x_dim)] = 0;
            return;
        }
        for (int e = 0; e <= degree_x; ++e) {
            cur[static_cast<size_t>(coord)] = e;
            rec(coord + 1);
        }
        cur[static_cast<size_t>(coord)] = 0;
    };
    rec(0);
    std::sort(d.exps_.begin(), d.exps_.end(),
              [](const std::vector<int>& a, const std::vector<int>& b) {
                  int ta = 0, tb = 0;
                  for (int e : a) ta += e;
                  for (int e : b) tb += e;
                  if (ta != tb) return ta < tb;
                  return a > b;
              });
    if (d.size() > kMaxAtoms) throw ConfigError("tensor_polynomial: too many atoms");
    d.init_identity_map();
    return d;
}

Dictionary Dictionary::partly_linear(int x_dim, int degree_v) {
    if (x_dim < 1 || degree_v < 0) throw ConfigError("partly_linear: invalid dimensions");
    Dictionary d;
    d.kind_ = InputKind::over_xv;
    d.family_ = DictionaryFamily::partly_linear;
    d.dim_ = x_dim + 1;
    std::vector<int> zero(static_cast<size_t>(d.dim_), 0);
    d.exps_.push_back(zero);  // constant
    for (int j = 0; j < x_dim; ++j) {
        std::vector<int> e = zero;
        e[static_cast<size_t>(j)] = 1;
        d.exps_.push_back(e);
    }
    for (int m = 1; m <= degree_v; ++m) {
        std::vector<int> e = zero;
        e[static_cast<size_t>(x_dim)] = m;
        d.exps_.push_back(e);
    }
    d.init_identity_map();
    return d;
}

Dictionary Dictionary::raw_plus_interactions(int dim, int degree, InputKind kind) {
    if (dim < 1 || degree < 0) throw ConfigError("raw_plus_interactions: invalid dimensions");
    Dictionary d;
    d.kind_ = kind;
    d.family_ = DictionaryFamily::raw_plus_interactions;
    d.dim_ = dim;
    d.exps_ = total_degree_exponents(dim, degree);
    if (d.size() > kMaxAtoms) throw ConfigError("raw_plus_interactions: too many atoms");
    d.init_identity_map();
    return d;
}

Dictionary Dictionary::standardized(const Eigen::MatrixXd& training_points) const {
    if (training_points.cols() != dim_)
        throw DataError("standardized: point dimension mismatch");
    if (training_points.rows() < 1) throw DataError("standardized: no training points");
    Dictionary d = *this;
    const double n = static_cast<double>(training_points.rows());
    d.center_ = training_points.colwise().mean();
    for (int c = 0; c < dim_; ++c) {
        const double var =
            (training_points.col(c).array() - d.center_[c]).square().sum() / n;
        d.scale_[c] = var > 1e-24 ? std::sqrt(var) : 1.0;
    }
    return d;
}

Eigen::VectorXd Dictionary::eval(const Eigen::VectorXd& point) const {
    if (point.size() != dim_) throw DataError("dictionary eval: dimension mismatch");
    const Eigen::VectorXd u = (point - center_).cwiseQuotient(scale_);
    Eigen::VectorXd out(size());
    for (int j = 0; j < size(); ++j) {
        double a = 1.0;
        const std::vector<int>& e = exps_[static_cast<size_t>(j)];
        for (int c = 0; c < dim_; ++c) a *= ipow(u[c], e[static_cast<size_t>(c)]);
        out[j] = a;
    }
    return out;
}

Eigen::VectorXd Dictionary::eval_dv(const Eigen::VectorXd& point) const {
    if (kind_ != InputKind::over_xv)
        throw ConfigError("eval_dv requested on an over_z dictionary");
    if (point.size() != dim_) throw DataError("dictionary eval_dv: dimension mismatch");
    const int vc = dim_ - 1;
    const Eigen::VectorXd u = (point - center_).cwiseQuotient(scale_);
    Eigen::VectorXd out(size());
    for (int j = 0; j < size(); ++j) {
        const std::vector<int>& e = exps_[static_cast<size_t>(j)];
        const int ev = e[static_cast<size_t>(vc)];
        if (ev == 0) {
            out[j] = 0.0;
            continue;
        }
        double a = static_cast<double>(ev) / scale_[vc] * ipow(u[vc], ev - 1);
        for (int c = 0; c < vc; ++c) a *= ipow(u[c], e[static_cast<size_t>(c)]);
        out[j] = a;
    }
    return out;
}

Eigen::VectorXd Dictionary::eval_dx(const Eigen::VectorXd& point, int x_coord) const {
    if (point.size() != dim_) throw DataError("dictionary eval_dx: dimension mismatch");
    const int last = (kind_ == InputKind::over_xv) ? dim_ - 1 : dim_;
    if (x_coord < 0 || x_coord >= last) throw ConfigError("eval_dx: bad x coordinate");
    const Eigen::VectorXd u = (point - center_).cwiseQuotient(scale_);
    Eigen::VectorXd out(size());
    for (int j = 0; j < size(); ++j) {
        const std::vector<int>& e = exps_[static_cast<size_t>(j)];
        const int ex = e[static_cast<size_t>(x_coord)];
        if (ex == 0) {
            out[j] = 0.0;
            continue;
        }
        double a = static_cast<double>(ex) / scale_[x_coord] * ipow(u[x_coord], ex - 1);
        for (int c = 0; c < dim_; ++c)
            if (c != x_coord) a *= ipow(u[c], e[static_cast<size_t>(c)]);
        out[j] = a;
    }
    return out;
}

Eigen::VectorXd Dictionary::x_part(const Eigen::VectorXd& x) const {
    if (kind_ != InputKind::over_xv) throw ConfigError("x_part: over_xv dictionaries only");
    const int xd = dim_ - 1;
    if (x.size() != xd) throw DataError("x_part: dimension mismatch");
    Eigen::VectorXd out(size());
    for (int j = 0; j < size(); ++j) {
        double a = 1.0;
        const std::vector<int>& e = exps_[static_cast<size_t>(j)];
        for (int c = 0; c < xd; ++c) a *= ipow((x[c] - center_[c]) / scale_[c], e[static_cast<size_t>(c)]);
        out[j] = a;
    }
    return out;
}

Eigen::VectorXd Dictionary::v_part(double v) const {
    if (kind_ != InputKind::over_xv) throw ConfigError("v_part: over_xv dictionaries only");
    const int vc = dim_ - 1;
    const double u = (v - center_[vc]) / scale_[vc];
    Eigen::VectorXd out(size());
    for (int j = 0; j < size(); ++j)
        out[j] = ipow(u, exps_[static_cast<size_t>(j)][static_cast<size_t>(vc)]);
    return out;
}

Eigen::VectorXd Dictionary::mean_x_part(const Eigen::MatrixXd& xs) const {
    if (xs.rows() < 1) throw DataError("mean_x_part: no draws");
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(size());
    for (Eigen::Index s = 0; s < xs.rows(); ++s) acc += x_part(xs.row(s).transpose());
    return acc / static_cast<double>(xs.rows());
}

Eigen::MatrixXd Dictionary::design(const Eigen::MatrixXd& points) const {
    Eigen::MatrixXd out(points.rows(), size());
    for (Eigen::Index i = 0; i < points.rows(); ++i)
        out.row(i) = eval(points.row(i).transpose()).transpose();
    return out;
}

std::string Dictionary::describe() const {
    std::ostringstream os;
    switch (family_) {
        case DictionaryFamily::tensor_polynomial: os << "tensor_polynomial"; break;
        case DictionaryFamily::partly_linear: os << "partly_linear"; break;
        case DictionaryFamily::raw_plus_interactions: os << "raw_plus_interactions"; break;
    }
    os << "(dim=" << dim_ << ", J=" << size() << ")";
    return os.str();
}

}  // namespace genreg
