#include "sngm/problem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sngm/errors.hpp"

namespace sngm {

ParamVector Problem::sample_gradient(std::size_t i, const ParamVector& w) const {
  ParamVector g(dimension());
  add_sample_gradient(i, w, g);
  return g;
}

double Problem::full_loss(const ParamVector& w) const {
  double sum = 0.0;
  for (std::size_t i = 0; i < sample_count(); ++i) sum += sample_loss(i, w);
  return sum / static_cast<double>(sample_count());
}

ParamVector Problem::full_gradient(const ParamVector& w) const {
  ParamVector g(dimension());
  for (std::size_t i = 0; i < sample_count(); ++i) add_sample_gradient(i, w, g);
  scale_inplace(g, 1.0 / static_cast<double>(sample_count()));
  return g;
}

double Problem::batch_loss(const ParamVector& w,
                           std::span<const std::size_t> indices) const {
  if (indices.empty()) throw ValidationError("batch_loss: empty index set");
  double sum = 0.0;
  for (std::size_t i : indices) sum += sample_loss(i, w);
  return sum / static_cast<double>(indices.size());
}

ParamVector Problem::batch_gradient(const ParamVector& w,
                                    std::span<const std::size_t> indices) const {
  if (indices.empty()) throw ValidationError("batch_gradient: empty index set");
  ParamVector g(dimension());
  for (std::size_t i : indices) add_sample_gradient(i, w, g);
  scale_inplace(g, 1.0 / static_cast<double>(indices.size()));
  return g;
}

ParamVector Problem::initial_point(SeededRng& rng) const {
  (void)rng;
  ParamVector w(dimension());
  w.layer_bounds = layer_ranges();
  return w;
}

namespace {

// ---------------------------------------------------------------------------
// Quadratic mean
// ---------------------------------------------------------------------------

class QuadraticProblem final : public Problem {
 public:
  QuadraticProblem(std::vector<double> spectrum, std::vector<ParamVector> centers,
                   double start_offset)
      : spectrum_(std::move(spectrum)), start_offset_(start_offset) {
    if (spectrum_.empty()) throw ValidationError("quadratic: empty spectrum");
    for (double a : spectrum_) {
      if (!(a > 0.0)) throw ValidationError("quadratic: spectrum entries must be positive");
    }
    if (centers.empty()) throw ValidationError("quadratic: need at least one center");
    const std::size_t d = spectrum_.size();
    n_ = centers.size();
    centers_.reserve(n_ * d);
    for (const auto& c : centers) {
      if (c.dim() != d) throw ValidationError("quadratic: center dimension mismatch");
      centers_.insert(centers_.end(), c.coords.begin(), c.coords.end());
    }
    center_mean_.assign(d, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < d; ++j) center_mean_[j] += centers_[i * d + j];
    }
    for (double& m : center_mean_) m /= static_cast<double>(n_);
    // Minimum value: (1/2) sum_j a_j * Var_j(centers).
    optimal_ = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      double var = 0.0;
      for (std::size_t i = 0; i < n_; ++i) {
        const double dvi = centers_[i * d + j] - center_mean_[j];
        var += dvi * dvi;
      }
      optimal_ += 0.5 * spectrum_[j] * var / static_cast<double>(n_);
    }
  }

  std::string name() const override { return "quadratic"; }
  std::size_t sample_count() const override { return n_; }
  std::size_t dimension() const override { return spectrum_.size(); }

  double sample_loss(std::size_t i, const ParamVector& w) const override {
    const std::size_t d = spectrum_.size();
    double loss = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double dv = w.coords[j] - centers_[i * d + j];
      loss += 0.5 * spectrum_[j] * dv * dv;
    }
    return loss;
  }

  void add_sample_gradient(std::size_t i, const ParamVector& w,
                           ParamVector& acc) const override {
    const std::size_t d = spectrum_.size();
    for (std::size_t j = 0; j < d; ++j) {
      acc.coords[j] += spectrum_[j] * (w.coords[j] - centers_[i * d + j]);
    }
  }

  ParamVector initial_point(SeededRng& rng) const override {
    (void)rng;
    const std::size_t d = spectrum_.size();
    ParamVector w(d);
    const double per_coord = start_offset_ / std::sqrt(static_cast<double>(d));
    for (std::size_t j = 0; j < d; ++j) w.coords[j] = center_mean_[j] + per_coord;
    return w;
  }

  std::optional<double> known_smoothness() const override {
    return *std::max_element(spectrum_.begin(), spectrum_.end());
  }
  std::optional<std::pair<double, double>> known_relaxed_pair() const override {
    return std::make_pair(*known_smoothness(), 0.0);
  }
  std::optional<double> optimal_value() const override { return optimal_; }
  std::optional<ParamVector> minimizer() const override {
    return ParamVector(center_mean_);
  }

 private:
  std::vector<double> spectrum_;
  std::vector<double> centers_;  // n * d, row-major
  std::vector<double> center_mean_;
  std::size_t n_ = 0;
  double optimal_ = 0.0;
  double start_offset_ = 1.0;
};

// ---------------------------------------------------------------------------
// Logistic regression
// ---------------------------------------------------------------------------

double softplus(double z) {
  // log(1 + exp(z)) without overflow.
  if (z > 0.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

class LogisticProblem final : public Problem {
 public:
  LogisticProblem(DatasetMatrix data, double l2) : data_(std::move(data)), l2_(l2) {
    if (l2_ < 0.0) throw ValidationError("logistic: l2 must be >= 0");
    margins_.resize(data_.rows);
    for (std::size_t i = 0; i < data_.rows; ++i) {
      const double label = data_.labels[i];
      if (label != 0.0 && label != 1.0) {
        throw ValidationError("logistic: label at row " + std::to_string(i + 1) +
                              " is " + std::to_string(label) + ", expected 0 or 1");
      }
      margins_[i] = 2.0 * label - 1.0;
    }
    smoothness_ = l2_;
    double max_sq = 0.0;
    for (std::size_t i = 0; i < data_.rows; ++i) {
      double sq = 0.0;
      for (std::size_t j = 0; j < data_.cols; ++j) {
        sq += data_.at(i, j) * data_.at(i, j);
      }
      max_sq = std::max(max_sq, sq);
    }
    smoothness_ = max_sq / 4.0 + l2_;
  }

  std::string name() const override { return "logistic"; }
  std::size_t sample_count() const override { return data_.rows; }
  std::size_t dimension() const override { return data_.cols; }

  double sample_loss(std::size_t i, const ParamVector& w) const override {
    const double* x = data_.row(i);
    double z = 0.0;
    for (std::size_t j = 0; j < data_.cols; ++j) z += x[j] * w.coords[j];
    z *= margins_[i];
    double loss = softplus(-z);
    if (l2_ > 0.0) {
      double sq = 0.0;
      for (double c : w.coords) sq += c * c;
      loss += 0.5 * l2_ * sq;
    }
    return loss;
  }

  void add_sample_gradient(std::size_t i, const ParamVector& w,
                           ParamVector& acc) const override {
    const double* x = data_.row(i);
    double z = 0.0;
    for (std::size_t j = 0; j < data_.cols; ++j) z += x[j] * w.coords[j];
    z *= margins_[i];
    const double coeff = -margins_[i] / (1.0 + std::exp(z));
    for (std::size_t j = 0; j < data_.cols; ++j) acc.coords[j] += coeff * x[j];
    if (l2_ > 0.0) {
      for (std::size_t j = 0; j < data_.cols; ++j) acc.coords[j] += l2_ * w.coords[j];
    }
  }

  std::optional<double> known_smoothness() const override { return smoothness_; }
  bool smoothness_is_upper_bound() const override { return true; }
  std::optional<std::pair<double, double>> known_relaxed_pair() const override {
    return std::make_pair(smoothness_, 0.0);
  }

  std::optional<EvalMetrics> evaluate_dataset(const ParamVector& w,
                                              const DatasetMatrix& eval) const override {
    if (eval.cols != data_.cols || eval.rows == 0) return std::nullopt;
    EvalMetrics m;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < eval.rows; ++i) {
      const double* x = eval.row(i);
      double z = 0.0;
      for (std::size_t j = 0; j < eval.cols; ++j) z += x[j] * w.coords[j];
      const double y = 2.0 * eval.labels[i] - 1.0;
      m.loss += softplus(-y * z);
      if ((z > 0.0) == (eval.labels[i] == 1.0)) ++correct;
    }
    m.loss /= static_cast<double>(eval.rows);
    m.accuracy = static_cast<double>(correct) / static_cast<double>(eval.rows);
    return m;
  }

 private:
  DatasetMatrix data_;
  std::vector<double> margins_;  // +-1
  double l2_ = 0.0;
  double smoothness_ = 0.0;
};

// ---------------------------------------------------------------------------
// Scalar exponential
// ---------------------------------------------------------------------------

class ExpProblem final : public Problem {
 public:
  ExpProblem(double a, double start) : a_(a), start_(start) {
    if (!(a_ > 0.0)) throw ValidationError("exp: a must be positive");
  }

  std::string name() const override { return "exp"; }
  std::size_t sample_count() const override { return 1; }
  std::size_t dimension() const override { return 1; }

  double sample_loss(std::size_t, const ParamVector& w) const override {
    return std::exp(a_ * w.coords[0]);
  }
  void add_sample_gradient(std::size_t, const ParamVector& w,
                           ParamVector& acc) const override {
    acc.coords[0] += a_ * std::exp(a_ * w.coords[0]);
  }

  ParamVector initial_point(SeededRng& rng) const override {
    (void)rng;
    ParamVector w(1);
    w.coords[0] = start_;
    return w;
  }

  std::optional<std::pair<double, double>> known_relaxed_pair() const override {
    return std::make_pair(0.0, a_);
  }
  // The infimum 0 is approached as w -> -inf; useful as an exact lower bound.
  std::optional<double> optimal_value() const override { return 0.0; }

 private:
  double a_ = 1.0;
  double start_ = 0.0;
};

// ---------------------------------------------------------------------------
// Fully connected MLP
// ---------------------------------------------------------------------------

class MlpProblem final : public Problem {
 public:
  MlpProblem(std::vector<std::size_t> layout, Activation activation, DatasetMatrix data)
      : layout_(std::move(layout)), activation_(activation), data_(std::move(data)) {
    if (layout_.size() < 2) throw ValidationError("mlp: layout needs >= 2 widths");
    for (std::size_t w : layout_) {
      if (w == 0) throw ValidationError("mlp: zero-width layer");
    }
    if (layout_.front() != data_.cols) {
      throw ValidationError("mlp: layout[0] = " + std::to_string(layout_.front()) +
                            " does not match feature dimension " +
                            std::to_string(data_.cols));
    }
    classes_ = layout_.back();
    for (std::size_t i = 0; i < data_.rows; ++i) {
      const double label = data_.labels[i];
      if (classes_ == 1) {
        if (label != 0.0 && label != 1.0) {
          throw ValidationError("mlp: binary label at row " + std::to_string(i + 1) +
                                " must be 0 or 1");
        }
      } else {
        if (label != std::floor(label) || label < 0.0 ||
            label >= static_cast<double>(classes_)) {
          throw ValidationError("mlp: label at row " + std::to_string(i + 1) +
                                " outside [0, " + std::to_string(classes_) + ")");
        }
      }
    }
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < layout_.size(); ++l) {
      const std::size_t in = layout_[l];
      const std::size_t out = layout_[l + 1];
      ranges_.emplace_back(offset, offset + in * out);  // weight matrix
      offset += in * out;
      ranges_.emplace_back(offset, offset + out);  // bias
      offset += out;
    }
    param_count_ = offset;
  }

  std::string name() const override { return "mlp"; }
  std::size_t sample_count() const override { return data_.rows; }
  std::size_t dimension() const override { return param_count_; }

  std::vector<std::pair<std::size_t, std::size_t>> layer_ranges() const override {
    return ranges_;
  }

  ParamVector initial_point(SeededRng& rng) const override {
    ParamVector w(param_count_);
    w.layer_bounds = ranges_;
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < layout_.size(); ++l) {
      const std::size_t in = layout_[l];
      const std::size_t out = layout_[l + 1];
      const double s = 1.0 / std::sqrt(static_cast<double>(in));
      for (std::size_t k = 0; k < in * out + out; ++k) {
        w.coords[offset + k] = rng.next_in(-s, s);
      }
      offset += in * out + out;
    }
    return w;
  }

  double sample_loss(std::size_t i, const ParamVector& w) const override {
    Workspace ws;
    forward(i, w, ws);
    return output_loss(i, ws.activations.back());
  }

  void add_sample_gradient(std::size_t i, const ParamVector& w,
                           ParamVector& acc) const override {
    Workspace ws;
    forward(i, w, ws);
    backward(i, w, ws, acc);
  }

  bool twice_differentiable() const override { return activation_ == Activation::Tanh; }

  std::optional<EvalMetrics> evaluate_dataset(const ParamVector& w,
                                              const DatasetMatrix& eval) const override {
    if (eval.cols != data_.cols || eval.rows == 0) return std::nullopt;
    EvalMetrics m;
    std::size_t correct = 0;
    Workspace ws;
    for (std::size_t i = 0; i < eval.rows; ++i) {
      forward_features(eval.row(i), w, ws);
      const auto& logits = ws.activations.back();
      m.loss += loss_for_label(eval.labels[i], logits);
      if (classes_ == 1) {
        if ((logits[0] > 0.0) == (eval.labels[i] == 1.0)) ++correct;
      } else {
        const auto arg = static_cast<std::size_t>(
            std::max_element(logits.begin(), logits.end()) - logits.begin());
        if (static_cast<double>(arg) == eval.labels[i]) ++correct;
      }
    }
    m.loss /= static_cast<double>(eval.rows);
    m.accuracy = static_cast<double>(correct) / static_cast<double>(eval.rows);
    return m;
  }

 private:
  struct Workspace {
    // activations[0] is the input; activations[l+1] is layer l's output
    // (post-activation for hidden layers, raw logits for the last one).
    std::vector<std::vector<double>> activations;
    std::vector<std::vector<double>> pre_activations;
  };

  double act(double z) const {
    if (activation_ == Activation::Tanh) return std::tanh(z);
    return z > 0.0 ? z : 0.0;
  }
  double act_deriv(double z) const {
    if (activation_ == Activation::Tanh) {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    return z > 0.0 ? 1.0 : 0.0;  // subgradient 0 at z == 0
  }

  void forward_features(const double* x, const ParamVector& w, Workspace& ws) const {
    const std::size_t layers = layout_.size() - 1;
    ws.activations.assign(layers + 1, {});
    ws.pre_activations.assign(layers, {});
    ws.activations[0].assign(x, x + layout_[0]);

    std::size_t offset = 0;
    for (std::size_t l = 0; l < layers; ++l) {
      const std::size_t in = layout_[l];
      const std::size_t out = layout_[l + 1];
      const double* weight = w.coords.data() + offset;
      const double* bias = w.coords.data() + offset + in * out;
      auto& z = ws.pre_activations[l];
      z.assign(out, 0.0);
      const auto& a = ws.activations[l];
      for (std::size_t r = 0; r < out; ++r) {
        double s = bias[r];
        const double* row = weight + r * in;
        for (std::size_t c = 0; c < in; ++c) s += row[c] * a[c];
        z[r] = s;
      }
      auto& next = ws.activations[l + 1];
      next.resize(out);
      if (l + 1 < layers) {
        for (std::size_t r = 0; r < out; ++r) next[r] = act(z[r]);
      } else {
        next = z;  // logits
      }
      offset += in * out + out;
    }
  }

  void forward(std::size_t i, const ParamVector& w, Workspace& ws) const {
    forward_features(data_.row(i), w, ws);
  }

  double loss_for_label(double label, const std::vector<double>& logits) const {
    if (classes_ == 1) {
      const double z = logits[0];
      return softplus(z) - label * z;
    }
    double max_z = logits[0];
    for (double z : logits) max_z = std::max(max_z, z);
    double sum = 0.0;
    for (double z : logits) sum += std::exp(z - max_z);
    const double lse = max_z + std::log(sum);
    return lse - logits[static_cast<std::size_t>(label)];
  }

  double output_loss(std::size_t i, const std::vector<double>& logits) const {
    return loss_for_label(data_.labels[i], logits);
  }

  void backward(std::size_t i, const ParamVector& w, const Workspace& ws,
                ParamVector& acc) const {
    const std::size_t layers = layout_.size() - 1;
    const auto& logits = ws.activations.back();

    std::vector<double> delta(classes_);
    if (classes_ == 1) {
      delta[0] = 1.0 / (1.0 + std::exp(-logits[0])) - data_.labels[i];
    } else {
      double max_z = logits[0];
      for (double z : logits) max_z = std::max(max_z, z);
      double sum = 0.0;
      for (double z : logits) sum += std::exp(z - max_z);
      for (std::size_t r = 0; r < classes_; ++r) {
        delta[r] = std::exp(logits[r] - max_z) / sum;
      }
      delta[static_cast<std::size_t>(data_.labels[i])] -= 1.0;
    }

    // Offsets of each layer's parameter block.
    std::vector<std::size_t> offsets(layers);
    std::size_t offset = 0;
    for (std::size_t l = 0; l < layers; ++l) {
      offsets[l] = offset;
      offset += layout_[l] * layout_[l + 1] + layout_[l + 1];
    }

    std::vector<double> next_delta;
    for (std::size_t l = layers; l-- > 0;) {
      const std::size_t in = layout_[l];
      const std::size_t out = layout_[l + 1];
      const double* weight = w.coords.data() + offsets[l];
      double* grad_w = acc.coords.data() + offsets[l];
      double* grad_b = grad_w + in * out;
      const auto& a = ws.activations[l];

      for (std::size_t r = 0; r < out; ++r) {
        const double d = delta[r];
        double* grow = grad_w + r * in;
        for (std::size_t c = 0; c < in; ++c) grow[c] += d * a[c];
        grad_b[r] += d;
      }

      if (l > 0) {
        next_delta.assign(in, 0.0);
        for (std::size_t r = 0; r < out; ++r) {
          const double d = delta[r];
          const double* row = weight + r * in;
          for (std::size_t c = 0; c < in; ++c) next_delta[c] += d * row[c];
        }
        const auto& z_prev = ws.pre_activations[l - 1];
        for (std::size_t c = 0; c < in; ++c) next_delta[c] *= act_deriv(z_prev[c]);
        delta = next_delta;
      }
    }
  }

  std::vector<std::size_t> layout_;
  Activation activation_;
  DatasetMatrix data_;
  std::size_t classes_ = 1;
  std::size_t param_count_ = 0;
  std::vector<std::pair<std::size_t, std::size_t>> ranges_;
};

}  // namespace

std::unique_ptr<Problem> make_quadratic(const std::vector<double>& spectrum,
                                        const std::vector<ParamVector>& centers,
                                        double start_offset) {
  return std::make_unique<QuadraticProblem>(spectrum, centers, start_offset);
}

std::unique_ptr<Problem> make_quadratic(const std::vector<double>& spectrum,
                                        std::size_t n, SeededRng& rng,
                                        double center_scale, double start_offset) {
  if (n == 0) throw ValidationError("quadratic: need at least one sample");
  std::vector<ParamVector> centers;
  centers.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    ParamVector c(spectrum.size());
    for (double& v : c.coords) v = rng.next_in(-center_scale, center_scale);
    centers.push_back(std::move(c));
  }
  return std::make_unique<QuadraticProblem>(spectrum, centers, start_offset);
}

std::unique_ptr<Problem> make_logistic(const DatasetMatrix& data, double l2) {
  return std::make_unique<LogisticProblem>(data, l2);
}

std::unique_ptr<Problem> make_exp_family(double a, double start_point) {
  return std::make_unique<ExpProblem>(a, start_point);
}

std::unique_ptr<Problem> make_mlp(const std::vector<std::size_t>& layout,
                                  Activation activation, const DatasetMatrix& data) {
  return std::make_unique<MlpProblem>(layout, activation, data);
}

}  // namespace sngm
