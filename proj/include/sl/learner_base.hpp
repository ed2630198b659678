#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "sl/common.hpp"
#include "sl/matrix.hpp"

namespace sl {

// Fitted predictor. Continuous models return real predictions; binary
// models return probabilities in [0,1]. Immutable and shareable; predict
// is pure.
class Model {
 public:
  virtual ~Model() = default;

  virtual std::vector<double> predict(const Matrix& x) const = 0;

  // Number of columns seen at training time.
  virtual std::size_t n_features() const = 0;

 protected:
  void check_features(const Matrix& x) const {
    require(x.cols() == n_features(),
            "predict: input has " + std::to_string(x.cols()) + " columns, model expects " +
                std::to_string(n_features()));
  }
};

// Fallback predictor used when a candidate fit fails: the training outcome
// mean (a probability for binary outcomes).
class ConstantModel final : public Model {
 public:
  ConstantModel(double value, std::size_t p) : value_(value), p_(p) {}

  std::vector<double> predict(const Matrix& x) const override {
    check_features(x);
    return std::vector<double>(x.rows(), value_);
  }

  std::size_t n_features() const override { return p_; }

  double value() const { return value_; }

 private:
  double value_;
  std::size_t p_;
};

}  // namespace sl
