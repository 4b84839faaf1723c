#include "qal/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include "qal/errors.hpp"

namespace qal {

namespace {

constexpr double kNormTol = 1e-12;
constexpr double kClampTol = 1e-12;

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    std::ostringstream os;
    os << what << ": dimension mismatch (" << a << " vs " << b << ")";
    throw DimensionMismatch(os.str());
  }
}

void check_loss_rates(std::span<const double> gamma) {
  for (std::size_t j = 0; j < gamma.size(); ++j) {
    if (!(gamma[j] >= 0.0 && gamma[j] <= 1.0)) {
      std::ostringstream os;
      os << "loss rate gamma[" << j << "] = " << gamma[j] << " outside [0,1]";
      throw InvalidArgument(os.str());
    }
  }
}

}  // namespace

BareDistribution::BareDistribution(std::vector<double> labels,
                                   std::vector<double> probs)
    : labels_(std::move(labels)), probs_(std::move(probs)) {
  require_same_size(labels_.size(), probs_.size(), "BareDistribution");
  if (probs_.size() < 2)
    throw InvalidArgument("BareDistribution needs at least two outcomes");
  for (std::size_t j = 0; j < probs_.size(); ++j) {
    if (!(probs_[j] > 0.0) || !std::isfinite(probs_[j])) {
      std::ostringstream os;
      os << "bare probability P[" << j << "] = " << probs_[j]
         << " must be strictly positive";
      throw InvalidArgument(os.str());
    }
  }
  const double total = std::accumulate(probs_.begin(), probs_.end(), 0.0);
  if (std::abs(total - 1.0) > kNormTol) {
    std::ostringstream os;
    os.precision(17);
    os << "bare probabilities sum to " << total << ", expected 1";
    throw InvalidArgument(os.str());
  }
  auto sorted = labels_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw InvalidArgument("outcome labels must be pairwise distinct");
}

BareDistribution BareDistribution::with_default_labels(std::vector<double> probs) {
  std::vector<double> labels(probs.size());
  std::iota(labels.begin(), labels.end(), 1.0);
  return BareDistribution(std::move(labels), std::move(probs));
}

QRuleParams::QRuleParams(std::vector<double> loss_rates, SquareMatrix misreads)
    : loss_rates_(std::move(loss_rates)), misreads_(std::move(misreads)) {
  const std::size_t m = loss_rates_.size();
  require_same_size(m, misreads_.size(), "QRuleParams");
  check_loss_rates(loss_rates_);
  for (std::size_t l = 0; l < m; ++l) {
    double column = loss_rates_[l];
    for (std::size_t j = 0; j < m; ++j) {
      const double g = misreads_(j, l);
      if (j == l) {
        if (g != 0.0) throw InvalidArgument("misread matrix must have zero diagonal");
        continue;
      }
      if (!(g >= 0.0)) throw InvalidArgument("misread probabilities must be >= 0");
      column += g;
    }
    if (column > 1.0 + kNormTol) {
      std::ostringstream os;
      os.precision(17);
      os << "reading channel column " << l << " has loss + misread mass "
         << column << " > 1";
      throw ChannelInfeasible(os.str());
    }
  }
}

QRuleParams QRuleParams::losses_only(std::vector<double> loss_rates) {
  const std::size_t m = loss_rates.size();
  return QRuleParams(std::move(loss_rates), SquareMatrix(m));
}

QRuleParams QRuleParams::identity(std::size_t m) {
  return losses_only(std::vector<double>(m, 0.0));
}

double EffectiveDistribution::total() const {
  return std::accumulate(probs.begin(), probs.end(), 0.0);
}

double CouplingMatrix::max_abs() const {
  double best = 0.0;
  for (double v : d.data()) best = std::max(best, std::abs(v));
  return best;
}

double nonclassical_term(const BareDistribution& bare, const QRuleParams& q,
                         std::size_t j, std::size_t l) {
  const double m1 = static_cast<double>(bare.size() - 1);
  return q.misread(j, l) * bare.prob(l) -
         (q.misread(l, j) + q.loss_rate(j) / m1) * bare.prob(j);
}

static double checked_probability(std::size_t j, double pj) {
  if (pj >= 0.0) return pj;
  if (pj < -kClampTol) {
    std::ostringstream os;
    os.precision(17);
    os << "effective probability p[" << j << "] = " << pj
       << " is negative; Q-rules too strong for this distribution";
    throw NegativeEffectiveProbability(os.str());
  }
  return 0.0;
}

EffectiveDistribution effective_distribution(const BareDistribution& bare,
                                             const QRuleParams& q) {
  const std::size_t m = bare.size();
  require_same_size(m, q.size(), "effective_distribution");
  EffectiveDistribution out;
  out.probs.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    double pj = bare.prob(j);
    for (std::size_t l = 0; l < m; ++l)
      if (l != j) pj += nonclassical_term(bare, q, j, l);
    out.probs[j] = checked_probability(j, pj);
  }
  double lost = 0.0;
  for (std::size_t j = 0; j < m; ++j) lost += q.loss_rate(j) * bare.prob(j);
  out.defect = lost;
  return out;
}

CouplingMatrix symmetric_coupling(const BareDistribution& bare,
                                  std::span<const double> loss_rates) {
  const std::size_t m = bare.size();
  require_same_size(m, loss_rates.size(), "symmetric_coupling");
  check_loss_rates(loss_rates);
  const double denom = 2.0 * static_cast<double>(m - 1);
  CouplingMatrix out{SquareMatrix(m)};
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t l = j + 1; l < m; ++l) {
      const double pj = bare.prob(j);
      const double pl = bare.prob(l);
      const double v = -(loss_rates[l] * std::sqrt(pl / pj) +
                         loss_rates[j] * std::sqrt(pj / pl)) /
                       denom;
      out.d(j, l) = v;
      out.d(l, j) = v;
    }
  }
  return out;
}

QRuleParams symmetrizing_misreads(const BareDistribution& bare,
                                  std::span<const double> loss_rates) {
  const std::size_t m = bare.size();
  require_same_size(m, loss_rates.size(), "symmetrizing_misreads");
  check_loss_rates(loss_rates);
  const double denom = 2.0 * static_cast<double>(m - 1);
  SquareMatrix gamma(m);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t l = 0; l < m; ++l)
      if (j != l)
        gamma(j, l) = loss_rates[j] * bare.prob(j) / (denom * bare.prob(l));
  return QRuleParams(std::vector<double>(loss_rates.begin(), loss_rates.end()),
                     std::move(gamma));
}

std::vector<double> coupled_effective_probs(const BareDistribution& bare,
                                            const CouplingMatrix& d) {
  const std::size_t m = bare.size();
  require_same_size(m, d.size(), "coupled_effective_probs");
  std::vector<double> p(m);
  for (std::size_t j = 0; j < m; ++j) {
    double v = bare.prob(j);
    for (std::size_t l = 0; l < m; ++l)
      if (l != j) v += std::sqrt(bare.prob(j) * bare.prob(l)) * d(j, l);
    p[j] = checked_probability(j, v);
  }
  return p;
}

ReadingSampler::ReadingSampler(const BareDistribution& bare,
                               const QRuleParams& q) {
  const std::size_t m = bare.size();
  require_same_size(m, q.size(), "ReadingSampler");
  bare_cdf_.resize(m);
  double acc = 0.0;
  for (std::size_t l = 0; l < m; ++l) {
    acc += bare.prob(l);
    bare_cdf_[l] = acc;
  }
  bare_cdf_.back() = 1.0;
  channel_cdf_.resize(m);
  channel_target_.resize(m);
  for (std::size_t l = 0; l < m; ++l) {
    double c = q.loss_rate(l);
    channel_cdf_[l].push_back(c);
    for (std::size_t j = 0; j < m; ++j) {
      if (j == l || q.misread(j, l) == 0.0) continue;
      c += q.misread(j, l);
      channel_cdf_[l].push_back(c);
      channel_target_[l].push_back(j);
    }
  }
}

ReadingOutcome ReadingSampler::operator()(Rng& rng) const {
  const double u = rng.uniform();
  const auto it = std::upper_bound(bare_cdf_.begin(), bare_cdf_.end(), u);
  const std::size_t truth = std::min<std::size_t>(
      static_cast<std::size_t>(it - bare_cdf_.begin()), bare_cdf_.size() - 1);

  const double v = rng.uniform();
  const auto& cdf = channel_cdf_[truth];
  if (v < cdf[0]) return ReadingOutcome::make_lost();
  for (std::size_t k = 1; k < cdf.size(); ++k)
    if (v < cdf[k]) return ReadingOutcome::read(channel_target_[truth][k - 1]);
  return ReadingOutcome::read(truth);
}

ReadingOutcome sample_reading(const BareDistribution& bare,
                              const QRuleParams& q, Rng& rng) {
  return ReadingSampler(bare, q)(rng);
}

}  // namespace qal
