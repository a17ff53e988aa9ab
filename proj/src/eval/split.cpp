#include "doccat/eval/split.hpp"

#include <algorithm>
#include <cmath>

#include "doccat/common/error.hpp"

namespace doccat::eval {

namespace {

std::vector<std::vector<std::size_t>> group_by_class(std::span<const std::size_t> strata, std::size_t k) {
  std::vector<std::vector<std::size_t>> groups(k);
  for (std::size_t i = 0; i < strata.size(); ++i) {
    if (strata[i] >= k) throw InvalidArgument("stratum " + std::to_string(strata[i]) + " outside [0, K)");
    groups[strata[i]].push_back(i);
  }
  return groups;
}

}  // namespace

std::size_t validation_size(std::size_t n, std::size_t k, double fraction, std::size_t min_validation) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw InvalidArgument("validation fraction must be in (0, 1)");
  if (n < 2) throw InvalidArgument("need at least 2 items to split");
  if (k == 0) throw InvalidArgument("need at least one class");
  auto v = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
  v = std::min(v, kValidationCapPerClass * k);
  v = std::max(v, std::min(min_validation, n - 1));
  return v;
}

Split split_validation(std::span<const std::size_t> strata, std::size_t k, double fraction, Rng& rng,
                       std::size_t min_validation) {
  const std::size_t n = strata.size();
  const std::size_t v = validation_size(n, k, fraction, min_validation);
  auto groups = group_by_class(strata, k);

  // Hamilton apportionment of v over the class sizes.
  std::vector<std::size_t> quota(k);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < k; ++c) {
    const double exact = static_cast<double>(v) * static_cast<double>(groups[c].size()) / static_cast<double>(n);
    quota[c] = static_cast<std::size_t>(std::floor(exact));
    assigned += quota[c];
    remainders.emplace_back(exact - static_cast<double>(quota[c]), c);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < v; ++i) {
    const std::size_t c = remainders[i % k].second;
    if (quota[c] < groups[c].size()) {
      ++quota[c];
      ++assigned;
    }
  }

  Split split;
  for (std::size_t c = 0; c < k; ++c) {
    rng.shuffle(std::span<std::size_t>(groups[c]));
    split.validation.insert(split.validation.end(), groups[c].begin(),
                            groups[c].begin() + static_cast<std::ptrdiff_t>(quota[c]));
    split.train.insert(split.train.end(), groups[c].begin() + static_cast<std::ptrdiff_t>(quota[c]),
                       groups[c].end());
  }
  std::sort(split.validation.begin(), split.validation.end());
  std::sort(split.train.begin(), split.train.end());
  return split;
}

std::vector<std::size_t> assign_folds(std::span<const std::size_t> strata, std::size_t k, std::size_t n, Rng& rng) {
  if (n < 2) throw InvalidArgument("n-fold cross-validation needs n >= 2");
  if (strata.size() < n) throw InvalidArgument("fewer items than folds");
  auto groups = group_by_class(strata, k);
  std::vector<std::size_t> folds(strata.size());
  std::size_t next = 0;
  for (auto& members : groups) {
    rng.shuffle(std::span<std::size_t>(members));
    for (auto item : members) folds[item] = next++ % n;
  }
  return folds;
}

Split fold_split(std::span<const std::size_t> folds, std::size_t fold) {
  Split split;
  for (std::size_t i = 0; i < folds.size(); ++i) (folds[i] == fold ? split.validation : split.train).push_back(i);
  return split;
}

}  // namespace doccat::eval
