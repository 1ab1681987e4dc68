#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace genreg {

// Exit-code oriented error categories. The CLI maps these onto process
// exit codes; library users can catch them individually.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Mode { control_function, selection };

enum class RegressorVariant {
    residual,    // v = d - g(z)
    prediction,  // v = g(z)
};

struct GeneratedRegressorSpec {
    RegressorVariant variant = RegressorVariant::residual;

    // Derivative of the map g -> v: -1 for residual, +1 for prediction.
    double hadamard_sign() const {
        return variant == RegressorVariant::residual ? -1.0 : 1.0;
    }

    static GeneratedRegressorSpec for_mode(Mode m) {
        GeneratedRegressorSpec s;
        s.variant = (m == Mode::control_function) ? RegressorVariant::residual
                                                  : RegressorVariant::prediction;
        return s;
    }
};

struct Observation {
    double y = 0.0;
    double d = 0.0;
    Eigen::VectorXd z;
};

// v = phi(d, z, g) for an arbitrary first-step predictor.
double generated_regressor(const GeneratedRegressorSpec& spec,
                           const std::function<double(const Eigen::VectorXd&)>& g,
                           const Observation& obs);

// Immutable after construction; safe for concurrent reads.
class Dataset {
  public:
    Dataset(std::vector<Observation> observations, std::vector<int> x_designation,
            Mode mode);

    int n() const { return static_cast<int>(obs_.size()); }
    int zdim() const { return zdim_; }
    int xdim() const { return static_cast<int>(x_designation_.size()); }
    Mode mode() const { return mode_; }
    const Observation& obs(int i) const { return obs_[static_cast<size_t>(i)]; }
    const std::vector<int>& x_designation() const { return x_designation_; }

    // Designated sub-vector of the concatenation (d, z), in designation order.
    Eigen::VectorXd extract_x(const Observation& o) const;
    Eigen::VectorXd extract_x(int i) const { return extract_x(obs_[static_cast<size_t>(i)]); }

    // n x zdim matrix of the z rows (copy).
    Eigen::MatrixXd z_matrix() const;
    Eigen::MatrixXd z_matrix(const std::vector<int>& rows) const;
    Eigen::MatrixXd x_matrix(const std::vector<int>& rows) const;
    Eigen::VectorXd y_vector(const std::vector<int>& rows) const;
    Eigen::VectorXd d_vector(const std::vector<int>& rows) const;

    // CSV with header y,d,z1..zp. x_columns are column labels ("d", "z3", ...).
    static Dataset from_csv(const std::string& path,
                            const std::vector<std::string>& x_columns, Mode mode);
    void to_csv(const std::string& path) const;

    // Maps a column label onto its index in the concatenation (d, z).
    static int designation_index(const std::string& label, int zdim);

  private:
    std::vector<Observation> obs_;
    std::vector<int> x_designation_;
    Mode mode_;
    int zdim_ = 0;
};

}  // namespace genreg
