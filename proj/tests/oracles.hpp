#ifndef SOFTREASON_TESTS_ORACLES_HPP
#define SOFTREASON_TESTS_ORACLES_HPP

// Reference computations that share no code with the library.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

/// Posterior of a zero-mean unit-variance GP by dense LU solves (no Cholesky).
struct Posterior {
    double mean;
    double variance;
};

inline Posterior gp_posterior(const std::vector<Eigen::VectorXd>& xs, const std::vector<double>& ys, double bandwidth,
                              double shift, const Eigen::VectorXd& q) {
    const auto n = static_cast<Eigen::Index>(xs.size());
    Eigen::MatrixXd k(n, n);
    Eigen::VectorXd ks(n);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double sq = (xs[i] - xs[j]).squaredNorm();
            k(i, j) = std::exp(-sq / (2.0 * bandwidth * bandwidth)) + (i == j ? shift : 0.0);
        }
        ks(i) = std::exp(-(q - xs[i]).squaredNorm() / (2.0 * bandwidth * bandwidth));
        y(i) = ys[i];
    }
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(k);
    return {ks.dot(lu.solve(y)), 1.0 - ks.dot(lu.solve(ks))};
}

/// 1/2 log det(I + K / lambda) through the eigenvalues of K.
inline double information_gain(const Eigen::MatrixXd& k, double lambda) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) sum += std::log1p(es.eigenvalues()(i) / lambda);
    return 0.5 * sum;
}

/// E[(X - best)^+] for X ~ N(mean, sd^2) by composite Simpson quadrature over +-12 sd.
inline double expected_improvement_quadrature(double mean, double sd, double best, int panels = 20000) {
    const double lo = std::max(best, mean - 12.0 * sd);
    const double hi = mean + 12.0 * sd;
    if (hi <= lo) return 0.0;
    const double h = (hi - lo) / panels;
    const double norm = 1.0 / (sd * std::sqrt(2.0 * 3.14159265358979323846));
    auto f = [&](double x) {
        const double z = (x - mean) / sd;
        return (x - best) * norm * std::exp(-0.5 * z * z);
    };
    double s = f(lo) + f(hi);
    for (int i = 1; i < panels; ++i) s += f(lo + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    return s * h / 3.0;
}

} // namespace oracle

#endif // SOFTREASON_TESTS_ORACLES_HPP
