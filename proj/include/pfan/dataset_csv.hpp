#ifndef PFAN_DATASET_CSV_HPP
#define PFAN_DATASET_CSV_HPP

#include <string>
#include <vector>

#include "pfan/datasets.hpp"
#include "pfan/matrix.hpp"

namespace pfan {

// ============================================================================
// On-disk dataset format: plain UTF-8 CSV with a header row.
//   labeled features:   f0,...,f{d-1},label
//   bare features:      f0,...,f{d-1}
//   ground truth:       index,label
// Reals are written with %.17g so values round-trip exactly.
// ============================================================================

void write_labeled_csv(const DomainDataset& data, const std::string& path);
void write_features_csv(const Matrix& features, const std::string& path);
void write_truth_csv(const std::vector<int>& labels, const std::string& path);

DomainDataset load_labeled_csv(const std::string& path, int class_count, DomainTag tag);
Matrix load_features_csv(const std::string& path);
std::vector<int> load_truth_csv(const std::string& path);

}  // namespace pfan

#endif
