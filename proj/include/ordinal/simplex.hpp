#pragma once

#include <span>
#include <string>
#include <vector>

namespace ordinal {

// Verbaliser flavor: informative templates describe the label's position on
// the ordinal axis, uninformative ones are label-unrelated words.
enum class VerbaliserMode { kInformative, kUninformative };

// Ordered label axis: classes 1..K with display names and one verbaliser
// template per label and mode. List order is the ordinal order.
class LabelSpace {
 public:
  // Numeric space with default names "1".."K" and default verbalisers.
  explicit LabelSpace(int k_classes);
  LabelSpace(std::vector<std::string> labels);
  LabelSpace(std::vector<std::string> labels,
             std::vector<std::string> informative,
             std::vector<std::string> uninformative);

  int k() const { return static_cast<int>(labels_.size()); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::string& label(int y) const { return labels_.at(y - 1); }
  const std::vector<std::string>& verbalisers(VerbaliserMode mode) const {
    return mode == VerbaliserMode::kInformative ? informative_ : uninformative_;
  }

  // Resolves a display name or 1-based numeral to a class index; 0 if absent.
  int index_of(const std::string& name) const;

 private:
  void validate() const;

  std::vector<std::string> labels_;
  std::vector<std::string> informative_;
  std::vector<std::string> uninformative_;
};

// A point on the K-class probability simplex. Construction validates the
// simplex invariants (entries in [0,1], sum within 1e-9 of one), so any
// ProbVector in flight is a usable distribution.
class ProbVector {
 public:
  ProbVector() = default;
  explicit ProbVector(std::vector<double> p);

  int k() const { return static_cast<int>(p_.size()); }
  std::size_t size() const { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }
  const std::vector<double>& values() const { return p_; }
  operator std::span<const double>() const { return {p_.data(), p_.size()}; }

  auto begin() const { return p_.begin(); }
  auto end() const { return p_.end(); }

 private:
  std::vector<double> p_;
};

using LogitVector = std::vector<double>;

// Max-shifted softmax. Throws std::invalid_argument on empty or non-finite
// input; the result always satisfies the ProbVector invariants.
ProbVector softmax(std::span<const double> z);

// One-hot distribution for class y (1-based).
ProbVector one_hot(int y, const LabelSpace& space);
ProbVector one_hot(int y, int k_classes);

// Prefix sums of p; non-decreasing with final entry 1 within tolerance.
std::vector<double> cdf(const ProbVector& p);
std::vector<double> cdf(std::span<const double> p);

// Mass 1-eps at class k, eps/(K-1) spread over the rest. Requires
// 0 < eps < 1; keeps every entry positive so log-based losses stay finite.
ProbVector perturbed_one_hot(int k, double eps, const LabelSpace& space);
ProbVector perturbed_one_hot(int k, double eps, int k_classes);

// Index of the largest entry as a 1-based class; ties break toward the
// lowest class index.
int argmax_class(std::span<const double> v);

}  // namespace ordinal
