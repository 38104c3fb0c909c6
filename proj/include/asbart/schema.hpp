#pragma once

#include <string>
#include <vector>

namespace asbart {

enum class ColumnKind { ordinal, categorical };

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::ordinal;
  std::vector<std::string> levels;  // categorical only

  friend bool operator==(const ColumnSpec&, const ColumnSpec&) = default;
};

// Raw (pre-expansion) columns of a dataset. `columns` holds the predictors
// only; the target is named separately.
struct DatasetSchema {
  std::vector<ColumnSpec> columns;
  std::string target;

  /// Throws invalid-argument on empty/duplicate names, a predictor named like
  /// the target, or empty/duplicate category levels.
  void validate() const;

  friend bool operator==(const DatasetSchema&, const DatasetSchema&) = default;
};

// One column of the design matrix after dummy expansion.
struct FeatureInfo {
  std::string name;
  bool is_dummy = false;
  std::string source;  // originating raw column
  int level = -1;      // category index for dummies

  friend bool operator==(const FeatureInfo&, const FeatureInfo&) = default;
};

}  // namespace asbart
