#pragma once

// Incomplete random variables: the bare distribution, the Q-rule reading
// channel (loss + misread), the effective histogram it produces and the
// symmetric coupling matrix of the loss-dominated case.

#include <cstddef>
#include <span>
#include <vector>

#include "qal/rng.hpp"

namespace qal {

/// Dense row-major square matrix of reals.
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t n, double fill = 0.0)
      : n_(n), data_(n * n, fill) {}

  std::size_t size() const { return n_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * n_ + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * n_ + c];
  }
  std::span<const double> data() const { return data_; }

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

/// Hidden distribution P over M outcome values y_j.
class BareDistribution {
 public:
  /// Throws InvalidArgument unless M >= 2, all P_j > 0, sum P_j = 1 (1e-12)
  /// and labels are pairwise distinct.
  BareDistribution(std::vector<double> labels, std::vector<double> probs);

  /// Labels default to 1, 2, ..., M.
  static BareDistribution with_default_labels(std::vector<double> probs);

  std::size_t size() const { return probs_.size(); }
  const std::vector<double>& labels() const { return labels_; }
  const std::vector<double>& probs() const { return probs_; }
  double label(std::size_t j) const { return labels_[j]; }
  double prob(std::size_t j) const { return probs_[j]; }

 private:
  std::vector<double> labels_;
  std::vector<double> probs_;
};

/// Reading channel: loss rates gamma_l and misread matrix Gamma(j, l) =
/// probability that a realization of y_l is read as y_j.
class QRuleParams {
 public:
  /// Throws InvalidArgument on gamma outside [0,1], negative or diagonal
  /// misreads, and ChannelInfeasible when some column has
  /// gamma_l + sum_{j!=l} Gamma(j,l) > 1.
  QRuleParams(std::vector<double> loss_rates, SquareMatrix misreads);

  /// Pure loss channel (no misreads).
  static QRuleParams losses_only(std::vector<double> loss_rates);
  /// Identity channel over M outcomes.
  static QRuleParams identity(std::size_t m);

  std::size_t size() const { return loss_rates_.size(); }
  const std::vector<double>& loss_rates() const { return loss_rates_; }
  double loss_rate(std::size_t j) const { return loss_rates_[j]; }
  const SquareMatrix& misreads() const { return misreads_; }
  double misread(std::size_t j, std::size_t l) const { return misreads_(j, l); }

 private:
  std::vector<double> loss_rates_;
  SquareMatrix misreads_;
};

/// Observed sub-normalized histogram p_j plus the lost-reading mass.
struct EffectiveDistribution {
  std::vector<double> probs;
  double defect = 0.0;

  double total() const;
};

/// Symmetric, non-positive coupling d(j,l) with zero diagonal.
struct CouplingMatrix {
  SquareMatrix d;

  std::size_t size() const { return d.size(); }
  double operator()(std::size_t j, std::size_t l) const { return d(j, l); }
  /// Largest |d(j,l)|.
  double max_abs() const;
};

/// Non-classical term C~(j,l) = Gamma(j,l) P_l - (Gamma(l,j) + gamma_j/(M-1)) P_j.
double nonclassical_term(const BareDistribution& bare, const QRuleParams& q,
                         std::size_t j, std::size_t l);

/// Effective histogram p_j = P_j + sum_{l!=j} C~(j,l).
///
/// Values in (-1e-12, 0) are clamped to zero; anything more negative raises
/// NegativeEffectiveProbability. DimensionMismatch if M differs.
EffectiveDistribution effective_distribution(const BareDistribution& bare,
                                             const QRuleParams& q);

/// d(j,l) = -(gamma_l sqrt(P_l/P_j) + gamma_j sqrt(P_j/P_l)) / (2(M-1)).
CouplingMatrix symmetric_coupling(const BareDistribution& bare,
                                  std::span<const double> loss_rates);

/// Misread matrix Gamma(j,l) = gamma_j P_j / (2(M-1) P_l) whose effective
/// histogram matches the symmetric coupling. Throws ChannelInfeasible if a
/// column exceeds unit mass.
QRuleParams symmetrizing_misreads(const BareDistribution& bare,
                                  std::span<const double> loss_rates);

/// p_j = P_j + sum_{l!=j} sqrt(P_j P_l) d(j,l), with the same clamping and
/// NegativeEffectiveProbability rule as effective_distribution.
std::vector<double> coupled_effective_probs(const BareDistribution& bare,
                                            const CouplingMatrix& d);

/// Result of one reading: either Lost or Read(index).
struct ReadingOutcome {
  bool lost = false;
  std::size_t index = 0;  ///< valid when !lost

  static ReadingOutcome make_lost() { return {true, 0}; }
  static ReadingOutcome read(std::size_t j) { return {false, j}; }
  friend bool operator==(const ReadingOutcome&, const ReadingOutcome&) = default;
};

/// Precomputed cumulative tables for repeated sampling of one channel.
class ReadingSampler {
 public:
  ReadingSampler(const BareDistribution& bare, const QRuleParams& q);

  /// Draw the true index l ~ P; lose it with probability gamma_l; misread it
  /// as j with probability Gamma(j,l); otherwise read it correctly.
  ReadingOutcome operator()(Rng& rng) const;

  std::size_t size() const { return bare_cdf_.size(); }

 private:
  std::vector<double> bare_cdf_;
  // per true index l: cumulative thresholds for [lost, misread targets...]
  std::vector<std::vector<double>> channel_cdf_;
  std::vector<std::vector<std::size_t>> channel_target_;
};

ReadingOutcome sample_reading(const BareDistribution& bare,
                              const QRuleParams& q, Rng& rng);

}  // namespace qal
