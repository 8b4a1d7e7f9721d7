#include "ordinal/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace ordinal {

namespace {

const char* kUninformativeWords[] = {"cat",  "lion",  "zebra", "dog", "snake",
                                     "owl",  "ferret", "heron", "mole", "lynx"};

std::vector<std::string> default_labels(int k) {
  std::vector<std::string> labels;
  labels.reserve(k);
  for (int i = 1; i <= k; ++i) labels.push_back(std::to_string(i));
  return labels;
}

std::vector<std::string> default_informative(
    const std::vector<std::string>& labels) {
  const int k = static_cast<int>(labels.size());
  std::vector<std::string> out;
  out.reserve(k);
  for (int i = 1; i <= k; ++i) {
    out.push_back("indicates level " + std::to_string(i) + " of " +
                  std::to_string(k) + " (" + labels[i - 1] + ")");
  }
  return out;
}

std::vector<std::string> default_uninformative(int k) {
  constexpr int kWordCount =
      static_cast<int>(sizeof(kUninformativeWords) / sizeof(char*));
  std::vector<std::string> out;
  out.reserve(k);
  for (int i = 0; i < k; ++i) {
    std::string w = kUninformativeWords[i % kWordCount];
    if (i >= kWordCount) w += std::to_string(i / kWordCount);
    out.push_back(w);
  }
  return out;
}

}  // namespace

LabelSpace::LabelSpace(int k_classes) {
  if (k_classes < 2)
    throw std::invalid_argument("LabelSpace: K must be at least 2");
  labels_ = default_labels(k_classes);
  informative_ = default_informative(labels_);
  uninformative_ = default_uninformative(k_classes);
  validate();
}

LabelSpace::LabelSpace(std::vector<std::string> labels)
    : labels_(std::move(labels)) {
  informative_ = default_informative(labels_);
  uninformative_ = default_uninformative(static_cast<int>(labels_.size()));
  validate();
}

LabelSpace::LabelSpace(std::vector<std::string> labels,
                       std::vector<std::string> informative,
                       std::vector<std::string> uninformative)
    : labels_(std::move(labels)),
      informative_(std::move(informative)),
      uninformative_(std::move(uninformative)) {
  validate();
}

void LabelSpace::validate() const {
  if (labels_.size() < 2)
    throw std::invalid_argument("LabelSpace: K must be at least 2");
  std::set<std::string> seen(labels_.begin(), labels_.end());
  if (seen.size() != labels_.size())
    throw std::invalid_argument("LabelSpace: labels must be distinct");
  if (informative_.size() != labels_.size() ||
      uninformative_.size() != labels_.size())
    throw std::invalid_argument(
        "LabelSpace: need exactly one verbaliser per label per mode");
}

int LabelSpace::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == name) return static_cast<int>(i) + 1;
  }
  return 0;
}

ProbVector::ProbVector(std::vector<double> p) : p_(std::move(p)) {
  if (p_.empty()) throw std::invalid_argument("ProbVector: empty");
  double sum = 0.0;
  for (double v : p_) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0)
      throw std::invalid_argument("ProbVector: entry outside [0, 1]");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("ProbVector: entries do not sum to 1");
}

ProbVector softmax(std::span<const double> z) {
  if (z.empty()) throw std::invalid_argument("softmax: empty input");
  double zmax = z[0];
  for (double v : z) {
    if (!std::isfinite(v))
      throw std::invalid_argument("softmax: non-finite logit");
    zmax = std::max(zmax, v);
  }
  std::vector<double> p(z.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(z[i] - zmax);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return ProbVector(std::move(p));
}

ProbVector one_hot(int y, int k_classes) {
  if (k_classes < 2) throw std::invalid_argument("one_hot: K must be >= 2");
  if (y < 1 || y > k_classes)
    throw std::invalid_argument("one_hot: class index out of range");
  std::vector<double> p(k_classes, 0.0);
  p[y - 1] = 1.0;
  return ProbVector(std::move(p));
}

ProbVector one_hot(int y, const LabelSpace& space) {
  return one_hot(y, space.k());
}

std::vector<double> cdf(std::span<const double> p) {
  std::vector<double> c(p.size());
  double run = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    run += p[i];
    c[i] = run;
  }
  return c;
}

std::vector<double> cdf(const ProbVector& p) {
  return cdf(static_cast<std::span<const double>>(p));
}

ProbVector perturbed_one_hot(int k, double eps, int k_classes) {
  if (k_classes < 2)
    throw std::invalid_argument("perturbed_one_hot: K must be >= 2");
  if (k < 1 || k > k_classes)
    throw std::invalid_argument("perturbed_one_hot: class index out of range");
  if (!(eps > 0.0) || !(eps < 1.0))
    throw std::invalid_argument("perturbed_one_hot: eps must lie in (0, 1)");
  std::vector<double> p(k_classes, eps / (k_classes - 1));
  p[k - 1] = 1.0 - eps;
  return ProbVector(std::move(p));
}

ProbVector perturbed_one_hot(int k, double eps, const LabelSpace& space) {
  return perturbed_one_hot(k, eps, space.k());
}

int argmax_class(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("argmax_class: empty input");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return static_cast<int>(best) + 1;
}

}  // namespace ordinal
