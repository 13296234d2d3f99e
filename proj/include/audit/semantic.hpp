#pragma once

#include <optional>
#include <string>
#include <vector>

#include "audit/explain.hpp"

namespace audit {

// Clean and adversarial attributions of the same instance under the same
// model.
struct DriftPair {
  Attribution clean;
  Attribution adv;
};

// Cosine similarity of the two phi vectors. Both zero -> 1, exactly one
// zero -> 0.
double cosine_drift(const DriftPair& pair);

// Spearman correlation of importance ranks (|phi| descending, average
// ranks on ties), computed as Pearson on the rank vectors. Undefined when
// either side has zero rank variance.
std::optional<double> rank_drift(const DriftPair& pair);

// Deterministic narrative template over the top-k features:
// "High risk due to: feature <name> (<signed phi, 4 decimals>), ...".
std::string narrative_from(const Attribution& attr, std::size_t k);
std::string narrative_from(const Attribution& attr, std::size_t k,
                           const std::vector<std::string>& feature_names);

struct NarrativePrompt {
  std::string clean;
  std::string adversarial;
  std::string instruction;
};

extern const char* const kDefaultScorerInstruction;

NarrativePrompt make_prompt(const Attribution& clean, const Attribution& adv, std::size_t k,
                            const std::vector<std::string>& feature_names = {});

class NarrativeScorer {
 public:
  virtual ~NarrativeScorer() = default;
  virtual double score(const NarrativePrompt& prompt) = 0;
};

// Offline scorer: fraction of narrative features shared between the two
// texts with agreeing signs, over the narrative's feature count.
class SurrogateScorer : public NarrativeScorer {
 public:
  double score(const NarrativePrompt& prompt) override;
};

// Validates the scorer reply: out-of-range or non-finite values are
// rejected (ProtocolError), never clamped.
double consistency_score(const NarrativePrompt& prompt, NarrativeScorer& scorer);

// Arithmetic mean of the three components.
double sri(double cosine, double rank, double llm);

struct SriResult {
  double value = 0.0;
  bool partial = false;  // at least one component undefined
  int components = 0;
};

// Mean of the defined components; flags partial composition.
SriResult compose_sri(std::optional<double> cosine, std::optional<double> rank,
                      std::optional<double> llm);

enum class GovernanceLevel { Normal, EnhancedMonitoring, ManualReview, Quarantine };

const char* to_string(GovernanceLevel level);

// Ladder: < 0.50 Quarantine, < 0.65 ManualReview, < 0.75
// EnhancedMonitoring, else Normal.
GovernanceLevel governance(double sri_value);

struct GovernanceVerdict {
  GovernanceLevel level = GovernanceLevel::Normal;
  double sri = 0.0;  // raw composite; the level is derived from the
                     // [0,1]-clamped value
  bool early_warning = false;
};

// True iff dSRI = sri_calm - sri_stress > 0 and dSRI exceeds the stress
// AUROC degradation.
bool early_warning(double sri_calm, double sri_stress, double delta_auroc_stress);

struct DriftReport {
  std::optional<double> cosine;
  std::optional<double> rank_corr;
  std::optional<double> llm_score;
  double sri = 0.0;
  bool partial = false;
  std::size_t n_instances = 0;
  std::size_t n_unscored = 0;  // instances the scorer failed to score
};

}  // namespace audit
