#ifndef SYLSEG_LOSSPRED_HPP
#define SYLSEG_LOSSPRED_HPP

#include <map>
#include <vector>

#include "sylseg/types.hpp"

namespace sylseg {

/// Teacher-label probabilities recorded while one contiguous span of frames
/// was masked. `probs` maps a masked timestep t to p(Y_t | X^M) in [0, 1];
/// keys may cover only part of the mask.
struct MaskProbabilityRecord {
  int mask_start = 0;  // 1-based, inclusive
  int mask_end = 0;    // 1-based, inclusive
  std::map<int, double> probs;

  void validate(int total_frames, int span) const;
};

/// T x T banded matrix of masked-prediction probabilities. The column is the
/// predicted timestep, the row the closest unmasked frame; cells farther than
/// span/2 off the diagonal, and the diagonal itself, are zero.
struct LossPredMatrix {
  Matrix values;
  int span = 0;

  int num_frames() const { return static_cast<int>(values.rows()); }
  void validate() const;
};

/// Fill the loss-prediction matrix from mask records.
///
/// A record with mask [ms, me] contributes its first span/2 masked timesteps
/// to upper-triangle row ms-1 and its last span/2 to lower-triangle row me+1.
/// Rows falling outside [1, T] (mask at an utterance edge) skip that
/// triangle. Writing any cell twice throws ConflictError.
LossPredMatrix assemble_loss_matrix(const std::vector<MaskProbabilityRecord>& records,
                                    int total_frames, int span = 50);

/// Normalized min-cut objective of a fixed contiguous segmentation: the sum
/// over groups of within-mass / (degree - within-mass), with segments whose
/// denominator is <= 1e-12 contributing 0.
double mincut_objective(const Matrix& c, const Segmentation& seg);

/// Exact contiguous normalized min-cut into k groups, maximizing
/// mincut_objective by dynamic programming over 2-D prefix sums.
/// Ties resolve to the lexicographically smallest boundary list.
Segmentation normalized_mincut(const Matrix& c, int k);

inline Segmentation normalized_mincut(const LossPredMatrix& c, int k) {
  return normalized_mincut(c.values, k);
}

}  // namespace sylseg

#endif  // SYLSEG_LOSSPRED_HPP
