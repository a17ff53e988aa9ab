#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "doccat/common/random.hpp"

namespace doccat::eval {

struct Split {
  std::vector<std::size_t> train;       // ascending item indices
  std::vector<std::size_t> validation;  // ascending item indices
};

inline constexpr double kDefaultValidationFraction = 0.10;
inline constexpr std::size_t kValidationCapPerClass = 100;

/// Validation size for N items and K classes: min(floor(fraction * N), 100 * K),
/// raised to min_validation when that is larger (bounded by N - 1).
std::size_t validation_size(std::size_t n, std::size_t k, double fraction, std::size_t min_validation = 0);

/// Stratified random split of items 0..N-1, where strata[i] in [0, K) is the
/// class of item i. The validation quota is shared among classes in
/// proportion to their sizes (largest remainder, ties to the lower class),
/// and members of each class are drawn uniformly with rng.
/// Throws InvalidArgument for N < 2, fraction outside (0, 1) or a stratum
/// outside [0, K).
Split split_validation(std::span<const std::size_t> strata, std::size_t k, double fraction, Rng& rng,
                       std::size_t min_validation = 0);

/// Stratified n-fold assignment: members of each class are shuffled and
/// dealt round-robin onto the folds, continuing across classes, so fold
/// sizes differ by at most one. Returns fold[i] for every item.
/// Throws InvalidArgument for n < 2 or N < n.
std::vector<std::size_t> assign_folds(std::span<const std::size_t> strata, std::size_t k, std::size_t n, Rng& rng);

/// Train/validation split for one fold of an assignment.
Split fold_split(std::span<const std::size_t> folds, std::size_t fold);

}  // namespace doccat::eval
