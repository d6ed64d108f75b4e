#pragma once

/**
 * Compensated (Neumaier) summation for scalars and vectors.
 *
 * Node averages are accumulated in a fixed index-ascending order with a
 * running compensation term, so evaluating the same sum twice — or through
 * two different code paths that add the same terms — yields bit-identical
 * results.  That property is what lets a noiseless unit-gain aggregate
 * reproduce the centralized gradient exactly, not just approximately.
 */

#include <Eigen/Dense>

namespace gbma {

struct CompensatedScalar {
    double sum = 0.0;
    double comp = 0.0;

    void add(double v) {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v)) {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }

    double value() const { return sum + comp; }
};

class CompensatedVector {
  public:
    explicit CompensatedVector(Eigen::Index dim)
        : sum_(Eigen::VectorXd::Zero(dim)), comp_(Eigen::VectorXd::Zero(dim)) {}

    void add(const Eigen::Ref<const Eigen::VectorXd>& v) {
        for (Eigen::Index i = 0; i < sum_.size(); ++i) {
            const double s = sum_[i];
            const double x = v[i];
            const double t = s + x;
            if (std::abs(s) >= std::abs(x)) {
                comp_[i] += (s - t) + x;
            } else {
                comp_[i] += (x - t) + s;
            }
            sum_[i] = t;
        }
    }

    // Adds scale * v without forming a temporary.
    void add_scaled(double scale, const Eigen::Ref<const Eigen::VectorXd>& v) {
        for (Eigen::Index i = 0; i < sum_.size(); ++i) {
            const double s = sum_[i];
            const double x = scale * v[i];
            const double t = s + x;
            if (std::abs(s) >= std::abs(x)) {
                comp_[i] += (s - t) + x;
            } else {
                comp_[i] += (x - t) + s;
            }
            sum_[i] = t;
        }
    }

    Eigen::VectorXd value() const { return sum_ + comp_; }
    Eigen::Index size() const { return sum_.size(); }

  private:
    Eigen::VectorXd sum_;
    Eigen::VectorXd comp_;
};

}  // namespace gbma
