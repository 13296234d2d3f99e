#include "audit/semantic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "audit/error.hpp"

namespace audit {

double cosine_drift(const DriftPair& pair) {
  if (pair.clean.phi.size() != pair.adv.phi.size()) {
    throw SchemaError("drift pair attributions differ in dimension");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t j = 0; j < pair.clean.phi.size(); ++j) {
    dot += pair.clean.phi[j] * pair.adv.phi[j];
    na += pair.clean.phi[j] * pair.clean.phi[j];
    nb += pair.adv.phi[j] * pair.adv.phi[j];
  }
  if (na == 0.0 && nb == 0.0) return 1.0;
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

namespace {

// Importance ranks: 1 = largest |phi|; ties share the average rank.
std::vector<double> importance_ranks(const std::vector<double>& phi) {
  const std::size_t d = phi.size();
  std::vector<std::size_t> order(d);
  for (std::size_t j = 0; j < d; ++j) order[j] = j;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double ma = std::abs(phi[a]);
    const double mb = std::abs(phi[b]);
    if (ma != mb) return ma > mb;
    return a < b;
  });
  std::vector<double> ranks(d, 0.0);
  std::size_t i = 0;
  while (i < d) {
    std::size_t j = i;
    while (j < d && std::abs(phi[order[j]]) == std::abs(phi[order[i]])) ++j;
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg;
    i = j;
  }
  return ranks;
}

std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const auto n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cov += (a[i] - ma) * (b[i] - mb);
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
  }
  if (va == 0.0 || vb == 0.0) return std::nullopt;
  return cov / std::sqrt(va * vb);
}

std::string format_phi(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%+.4f", v);
  return buf;
}

}  // namespace

std::optional<double> rank_drift(const DriftPair& pair) {
  if (pair.clean.phi.size() != pair.adv.phi.size()) {
    throw SchemaError("drift pair attributions differ in dimension");
  }
  if (pair.clean.phi.size() < 2) {
    throw ConfigError("rank correlation requires at least 2 features");
  }
  return pearson(importance_ranks(pair.clean.phi), importance_ranks(pair.adv.phi));
}

std::string narrative_from(const Attribution& attr, std::size_t k) {
  return narrative_from(attr, k, {});
}

std::string narrative_from(const Attribution& attr, std::size_t k,
                           const std::vector<std::string>& feature_names) {
  if (!feature_names.empty() && feature_names.size() != attr.phi.size()) {
    throw SchemaError("feature name count does not match attribution dimension");
  }
  std::string text = "High risk due to: ";
  bool first = true;
  for (const auto& [index, value] : top_k(attr, k)) {
    if (!first) text += ", ";
    first = false;
    const std::string name =
        feature_names.empty() ? "f" + std::to_string(index) : feature_names[index];
    text += "feature " + name + " (" + format_phi(value) + ")";
  }
  return text;
}

const char* const kDefaultScorerInstruction =
    "You are auditing two risk explanations for the same case: one from the "
    "clean input and one from the perturbed input. Rate how consistent the "
    "adversarial narrative is with the clean narrative, considering which "
    "features are named, their order, and the direction of their "
    "contributions. Reply with a single number between 0 and 1, where 1 "
    "means identical reasoning and 0 means entirely different reasoning.";

NarrativePrompt make_prompt(const Attribution& clean, const Attribution& adv, std::size_t k,
                            const std::vector<std::string>& feature_names) {
  NarrativePrompt prompt;
  prompt.clean = narrative_from(clean, k, feature_names);
  prompt.adversarial = narrative_from(adv, k, feature_names);
  prompt.instruction = kDefaultScorerInstruction;
  return prompt;
}

namespace {

struct NarrativeItem {
  std::string name;
  int sign = 0;
};

// Recover (feature name, sign) pairs from the narrative template.
std::vector<NarrativeItem> parse_narrative(const std::string& text) {
  std::vector<NarrativeItem> items;
  const std::string marker = "feature ";
  std::size_t pos = 0;
  while ((pos = text.find(marker, pos)) != std::string::npos) {
    pos += marker.size();
    const std::size_t open = text.find('(', pos);
    if (open == std::string::npos) break;
    std::size_t name_end = open;
    while (name_end > pos && text[name_end - 1] == ' ') --name_end;
    const std::size_t close = text.find(')', open);
    if (close == std::string::npos) break;
    NarrativeItem item;
    item.name = text.substr(pos, name_end - pos);
    item.sign = text[open + 1] == '-' ? -1 : 1;
    items.push_back(std::move(item));
    pos = close + 1;
  }
  return items;
}

}  // namespace

double SurrogateScorer::score(const NarrativePrompt& prompt) {
  const auto clean_items = parse_narrative(prompt.clean);
  const auto adv_items = parse_narrative(prompt.adversarial);
  const std::size_t k = std::max(clean_items.size(), adv_items.size());
  if (k == 0) throw ProtocolError("surrogate scorer: narratives name no features");
  std::size_t matched = 0;
  for (const auto& c : clean_items) {
    for (const auto& a : adv_items) {
      if (c.name == a.name) {
        if (c.sign == a.sign) ++matched;
        break;
      }
    }
  }
  return static_cast<double>(matched) / static_cast<double>(k);
}

double consistency_score(const NarrativePrompt& prompt, NarrativeScorer& scorer) {
  const double value = scorer.score(prompt);
  if (!std::isfinite(value) || value < 0.0 || value > 1.0) {
    throw ProtocolError("scorer returned a value outside [0, 1]");
  }
  return value;
}

double sri(double cosine, double rank, double llm) {
  return (cosine + rank + llm) / 3.0;
}

SriResult compose_sri(std::optional<double> cosine, std::optional<double> rank,
                      std::optional<double> llm) {
  SriResult result;
  double sum = 0.0;
  for (const auto& component : {cosine, rank, llm}) {
    if (component) {
      sum += *component;
      ++result.components;
    }
  }
  if (result.components == 0) {
    throw MetricError("SRI undefined: no components available");
  }
  result.value = sum / static_cast<double>(result.components);
  result.partial = result.components < 3;
  return result;
}

const char* to_string(GovernanceLevel level) {
  switch (level) {
    case GovernanceLevel::Normal: return "Normal";
    case GovernanceLevel::EnhancedMonitoring: return "EnhancedMonitoring";
    case GovernanceLevel::ManualReview: return "ManualReview";
    case GovernanceLevel::Quarantine: return "Quarantine";
  }
  return "?";
}

GovernanceLevel governance(double sri_value) {
  if (sri_value < 0.50) return GovernanceLevel::Quarantine;
  if (sri_value < 0.65) return GovernanceLevel::ManualReview;
  if (sri_value < 0.75) return GovernanceLevel::EnhancedMonitoring;
  return GovernanceLevel::Normal;
}

bool early_warning(double sri_calm, double sri_stress, double delta_auroc_stress) {
  const double delta_sri = sri_calm - sri_stress;
  return delta_sri > 0.0 && delta_sri > delta_auroc_stress;
}

}  // namespace audit
